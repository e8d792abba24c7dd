#include "cfproto/linear.hpp"

#include <cstdlib>

namespace cfproto {

std::int64_t add_ck(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw ArithOverflow();
    return r;
}

std::int64_t mul_ck(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw ArithOverflow();
    return r;
}

std::int64_t gcd64(std::int64_t a, std::int64_t b) {
    a = a < 0 ? -a : a;
    b = b < 0 ? -b : b;
    while (b) {
        std::int64_t t = a % b;
        a = b;
        b = t;
    }
    return a;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) == (b < 0))) ++q;
    return q;
}

void LinForm::add_term(const Expr& t, std::int64_t c) {
    if (c == 0) return;
    auto it = coeffs.find(t);
    if (it == coeffs.end()) {
        coeffs.emplace(t, c);
        return;
    }
    it->second = add_ck(it->second, c);
    if (it->second == 0) coeffs.erase(it);
}

void LinForm::add(const LinForm& o, std::int64_t scale) {
    constant = add_ck(constant, mul_ck(scale, o.constant));
    for (auto& [t, c] : o.coeffs) add_term(t, mul_ck(scale, c));
}

static void lin_rec(const Expr& e, std::int64_t scale, LinForm& out) {
    switch (e->op) {
        case Op::Int:
            out.constant = add_ck(out.constant, mul_ck(scale, e->val));
            return;
        case Op::Add:
            for (auto& a : e->args) lin_rec(a, scale, out);
            return;
        case Op::Mul:
            lin_rec(e->args[0], mul_ck(scale, e->val), out);
            return;
        default:
            out.add_term(e, scale);
    }
}

LinForm linearize(const Expr& e) {
    LinForm f;
    lin_rec(e, 1, f);
    return f;
}

Expr from_lin(const LinForm& f) {
    std::vector<Expr> xs;
    for (auto& [t, c] : f.coeffs) xs.push_back(mk_scale(c, t));
    if (f.constant != 0) xs.push_back(mk_int(f.constant));
    return mk_add(std::move(xs));
}

}  // namespace cfproto

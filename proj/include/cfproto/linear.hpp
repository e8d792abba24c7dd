#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>

#include "cfproto/formula.hpp"

namespace cfproto {

struct ArithOverflow : std::runtime_error {
    ArithOverflow() : std::runtime_error("integer overflow in arithmetic") {}
};

std::int64_t add_ck(std::int64_t a, std::int64_t b);
std::int64_t mul_ck(std::int64_t a, std::int64_t b);
std::int64_t gcd64(std::int64_t a, std::int64_t b);
std::int64_t floor_div(std::int64_t a, std::int64_t b);
std::int64_t ceil_div(std::int64_t a, std::int64_t b);

// sum coeffs[t] * t + constant; non-linear subterms are treated as opaque atoms
struct LinForm {
    std::map<Expr, std::int64_t, ExprLess> coeffs;
    std::int64_t constant = 0;

    void add_term(const Expr& t, std::int64_t c);
    void add(const LinForm& o, std::int64_t scale = 1);
    bool is_const() const { return coeffs.empty(); }
};

LinForm linearize(const Expr& e);
Expr from_lin(const LinForm& f);

}  // namespace cfproto

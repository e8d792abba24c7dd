#include "cfproto/lia.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

#include "cfproto/linear.hpp"

namespace cfproto {

namespace {

constexpr std::uint64_t kStepLimit = 4'000'000;

enum class Norm { Keep, True, False };

Norm normalize(LinCon& c) {
    for (auto it = c.coeffs.begin(); it != c.coeffs.end();) {
        if (it->second == 0) it = c.coeffs.erase(it);
        else ++it;
    }
    if (c.coeffs.empty()) {
        bool ok = c.kind == LinCon::Eq ? c.constant == 0 : c.kind == LinCon::Le ? c.constant <= 0 : c.constant != 0;
        return ok ? Norm::True : Norm::False;
    }
    std::int64_t g = 0;
    for (auto& [v, a] : c.coeffs) g = gcd64(g, a);
    if (g == 1) return Norm::Keep;
    switch (c.kind) {
        case LinCon::Eq:
            if (c.constant % g != 0) return Norm::False;
            c.constant /= g;
            break;
        case LinCon::Ne:
            if (c.constant % g != 0) return Norm::True;
            c.constant /= g;
            break;
        case LinCon::Le:
            c.constant = -floor_div(-c.constant, g);
            break;
    }
    for (auto& [v, a] : c.coeffs) a /= g;
    return Norm::Keep;
}

// replace x_k by (sub + sub_const) in c
void substitute(LinCon& c, int k, const std::map<int, std::int64_t>& sub, std::int64_t sub_const) {
    auto it = c.coeffs.find(k);
    if (it == c.coeffs.end()) return;
    std::int64_t b = it->second;
    c.coeffs.erase(it);
    for (auto& [v, a] : sub) {
        std::int64_t& slot = c.coeffs[v];
        slot = add_ck(slot, mul_ck(b, a));
    }
    c.constant = add_ck(c.constant, mul_ck(b, sub_const));
}

std::int64_t eval(const std::map<int, std::int64_t>& coeffs, std::int64_t constant,
                  const std::vector<std::int64_t>& m) {
    std::int64_t s = constant;
    for (auto& [v, a] : coeffs) s = add_ck(s, mul_ck(a, m[v]));
    return s;
}

bool holds(const LinCon& c, const std::vector<std::int64_t>& m) {
    std::int64_t s = eval(c.coeffs, c.constant, m);
    switch (c.kind) {
        case LinCon::Eq: return s == 0;
        case LinCon::Le: return s <= 0;
        case LinCon::Ne: return s != 0;
    }
    return false;
}

// symmetric residue used by the Omega equality step
std::int64_t mod_hat(std::int64_t a, std::int64_t m) {
    return a - mul_ck(m, floor_div(add_ck(mul_ck(2, a), m), mul_ck(2, m)));
}

std::int64_t pick_in(std::int64_t lo, std::int64_t hi) {
    if (lo > 0) return lo;
    if (hi < 0) return hi;
    return 0;
}

struct Bound {
    std::int64_t coef;  // positive multiplier of x
    std::map<int, std::int64_t> rest;
    std::int64_t constant;
};

// value range of x given upper bounds a*x + r <= 0 and lower bounds -b*x + r <= 0
void bounds_at(const std::vector<Bound>& lowers, const std::vector<Bound>& uppers,
               const std::vector<std::int64_t>& m, bool& has_lo, std::int64_t& lo, bool& has_hi, std::int64_t& hi) {
    has_lo = has_hi = false;
    for (auto& l : lowers) {
        std::int64_t r = eval(l.rest, l.constant, m);  // b*x >= r
        std::int64_t v = ceil_div(r, l.coef);
        if (!has_lo || v > lo) lo = v;
        has_lo = true;
    }
    for (auto& u : uppers) {
        std::int64_t r = eval(u.rest, u.constant, m);  // a*x <= -r
        std::int64_t v = floor_div(-r, u.coef);
        if (!has_hi || v < hi) hi = v;
        has_hi = true;
    }
}

}  // namespace

std::optional<std::vector<std::int64_t>> LiaSolver::solve(const std::vector<LinCon>& cs, int nvars) {
    return solve_rec(cs, nvars, 0);
}

std::optional<std::vector<std::int64_t>> LiaSolver::solve_rec(std::vector<LinCon> cs, int n, int depth) {
    if (++steps_ > kStepLimit) throw std::runtime_error("integer solver step limit exceeded");
    std::vector<LinCon> kept;
    for (auto& c : cs) {
        Norm r = normalize(c);
        if (r == Norm::False) return std::nullopt;
        if (r == Norm::Keep) kept.push_back(std::move(c));
    }
    cs = std::move(kept);

    // equality elimination
    int best_eq = -1, best_var = -1;
    std::int64_t best_abs = 0;
    for (int i = 0; i < static_cast<int>(cs.size()); ++i) {
        if (cs[i].kind != LinCon::Eq) continue;
        for (auto& [v, a] : cs[i].coeffs) {
            std::int64_t aa = std::llabs(a);
            if (best_eq < 0 || aa < best_abs) {
                best_eq = i;
                best_var = v;
                best_abs = aa;
            }
        }
        if (best_abs == 1) break;
    }
    if (best_eq >= 0) {
        const LinCon e = cs[best_eq];
        std::int64_t ak = e.coeffs.at(best_var);
        std::map<int, std::int64_t> sub;
        std::int64_t sub_const;
        int n2 = n;
        if (best_abs == 1) {
            // x_k = -sign(a_k) * (rest + c)
            for (auto& [v, a] : e.coeffs)
                if (v != best_var) sub[v] = -ak * a;
            sub_const = -ak * e.constant;
            cs.erase(cs.begin() + best_eq);
        } else {
            std::int64_t m = best_abs + 1;
            int sigma = n2++;
            std::int64_t s = ak > 0 ? 1 : -1;
            for (auto& [v, a] : e.coeffs)
                if (v != best_var) sub[v] = mul_ck(s, mod_hat(a, m));
            sub[sigma] = mul_ck(-s, m);
            sub_const = mul_ck(s, mod_hat(e.constant, m));
        }
        for (auto& c : cs) substitute(c, best_var, sub, sub_const);
        auto r = solve_rec(std::move(cs), n2, depth + 1);
        if (!r) return std::nullopt;
        std::vector<std::int64_t> model = std::move(*r);
        model[best_var] = eval(sub, sub_const, model);
        model.resize(n);
        return model;
    }

    std::vector<LinCon> les, nes;
    for (auto& c : cs) (c.kind == LinCon::Ne ? nes : les).push_back(c);
    auto r = solve_ineqs(les, n, depth);
    if (!r) return std::nullopt;
    for (size_t i = 0; i < nes.size(); ++i) {
        if (holds(nes[i], *r)) continue;
        std::vector<LinCon> base = les;
        for (size_t j = 0; j < nes.size(); ++j)
            if (j != i) base.push_back(nes[j]);
        LinCon below{LinCon::Le, nes[i].coeffs, add_ck(nes[i].constant, 1)};
        auto lo = base;
        lo.push_back(below);
        if (auto m = solve_rec(std::move(lo), n, depth + 1)) return m;
        LinCon above{LinCon::Le, {}, add_ck(-nes[i].constant, 1)};
        for (auto& [v, a] : nes[i].coeffs) above.coeffs[v] = -a;
        base.push_back(above);
        return solve_rec(std::move(base), n, depth + 1);
    }
    return r;
}

std::optional<std::vector<std::int64_t>> LiaSolver::solve_ineqs(std::vector<LinCon> cs, int n, int depth) {
    if (++steps_ > kStepLimit) throw std::runtime_error("integer solver step limit exceeded");
    // normalize, keep tightest per coefficient vector, detect implied equalities
    std::map<std::map<int, std::int64_t>, std::int64_t> tight;
    for (auto& c : cs) {
        Norm r = normalize(c);
        if (r == Norm::False) return std::nullopt;
        if (r == Norm::True) continue;
        auto it = tight.find(c.coeffs);
        if (it == tight.end()) tight.emplace(c.coeffs, c.constant);
        else it->second = std::max(it->second, c.constant);
    }
    std::vector<LinCon> eqs;
    for (auto& [co, k] : tight) {
        std::map<int, std::int64_t> neg;
        for (auto& [v, a] : co) neg[v] = -a;
        auto it = tight.find(neg);
        if (it == tight.end()) continue;
        std::int64_t s = add_ck(k, it->second);
        if (s > 0) return std::nullopt;
        if (s == 0 && co < neg) eqs.push_back(LinCon{LinCon::Eq, co, k});
    }
    if (!eqs.empty()) {
        std::vector<LinCon> all = eqs;
        for (auto& [co, k] : tight) all.push_back(LinCon{LinCon::Le, co, k});
        return solve_rec(std::move(all), n, depth + 1);
    }
    cs.clear();
    for (auto& [co, k] : tight) cs.push_back(LinCon{LinCon::Le, co, k});
    if (cs.empty()) return std::vector<std::int64_t>(n, 0);

    // choose a variable to eliminate
    std::map<int, std::pair<int, int>> counts;  // var -> (#lower, #upper)
    std::map<int, std::pair<bool, bool>> unit;  // var -> (all lower unit, all upper unit)
    for (auto& c : cs) {
        for (auto& [v, a] : c.coeffs) {
            auto& cnt = counts[v];
            auto u = unit.try_emplace(v, true, true).first;
            if (a < 0) {
                ++cnt.first;
                if (a != -1) u->second.first = false;
            } else {
                ++cnt.second;
                if (a != 1) u->second.second = false;
            }
        }
    }
    int var = -1;
    bool exact = false;
    long best = -1;
    for (auto& [v, cnt] : counts) {
        if (cnt.first == 0 || cnt.second == 0) {
            var = v;
            exact = true;
            best = 0;
            break;
        }
        bool ex = unit[v].first || unit[v].second;
        long cost = static_cast<long>(cnt.first) * cnt.second;
        if (var < 0 || (ex && !exact) || (ex == exact && cost < best)) {
            var = v;
            exact = ex;
            best = cost;
        }
    }

    std::vector<Bound> lowers, uppers;
    std::vector<LinCon> rest;
    for (auto& c : cs) {
        auto it = c.coeffs.find(var);
        if (it == c.coeffs.end()) {
            rest.push_back(c);
            continue;
        }
        std::int64_t a = it->second;
        Bound b{a < 0 ? -a : a, c.coeffs, c.constant};
        b.rest.erase(var);
        if (a < 0) lowers.push_back(std::move(b));  // -b*x + r <= 0  ->  b*x >= r
        else uppers.push_back(std::move(b));        //  a*x + r <= 0
    }

    auto combine = [&](std::int64_t slack) {
        std::vector<LinCon> out = rest;
        for (auto& l : lowers) {
            for (auto& u : uppers) {
                // a*r_l + b*r_u + slack <= 0
                LinCon c{LinCon::Le, {}, add_ck(add_ck(mul_ck(u.coef, l.constant), mul_ck(l.coef, u.constant)), slack)};
                for (auto& [v, k] : l.rest) c.coeffs[v] = add_ck(c.coeffs[v], mul_ck(u.coef, k));
                for (auto& [v, k] : u.rest) c.coeffs[v] = add_ck(c.coeffs[v], mul_ck(l.coef, k));
                out.push_back(std::move(c));
            }
        }
        return out;
    };

    auto finish = [&](std::vector<std::int64_t> model) -> std::optional<std::vector<std::int64_t>> {
        bool has_lo, has_hi;
        std::int64_t lo = 0, hi = 0;
        bounds_at(lowers, uppers, model, has_lo, lo, has_hi, hi);
        if (!has_lo) lo = std::min<std::int64_t>(0, has_hi ? hi : 0);
        if (!has_hi) hi = std::max<std::int64_t>(0, lo);
        if (lo > hi) return std::nullopt;
        model[var] = pick_in(lo, hi);
        return model;
    };

    if (exact) {
        auto r = solve_ineqs(combine(0), n, depth + 1);
        if (!r) return std::nullopt;
        auto m = finish(std::move(*r));
        if (!m) throw std::logic_error("exact elimination produced an empty range");
        return m;
    }

    // dark shadow
    {
        std::int64_t amax = 0;
        for (auto& u : uppers) amax = std::max(amax, u.coef);
        std::vector<LinCon> dark = rest;
        for (auto& l : lowers) {
            for (auto& u : uppers) {
                std::int64_t slack = mul_ck(u.coef - 1, l.coef - 1);
                LinCon c{LinCon::Le, {}, add_ck(add_ck(mul_ck(u.coef, l.constant), mul_ck(l.coef, u.constant)), slack)};
                for (auto& [v, k] : l.rest) c.coeffs[v] = add_ck(c.coeffs[v], mul_ck(u.coef, k));
                for (auto& [v, k] : u.rest) c.coeffs[v] = add_ck(c.coeffs[v], mul_ck(l.coef, k));
                dark.push_back(std::move(c));
            }
        }
        if (auto r = solve_ineqs(dark, n, depth + 1)) {
            if (auto m = finish(std::move(*r))) return m;
        }
        if (!solve_ineqs(combine(0), n, depth + 1)) return std::nullopt;
        // splinters
        for (auto& l : lowers) {
            std::int64_t top = floor_div(mul_ck(amax, l.coef) - amax - l.coef, amax);
            for (std::int64_t i = 0; i <= top; ++i) {
                std::vector<LinCon> sys = cs;
                LinCon eq{LinCon::Eq, l.rest, add_ck(l.constant, i)};
                eq.coeffs[var] = -l.coef;  // r + i - b*x = 0
                sys.push_back(std::move(eq));
                if (auto m = solve_rec(std::move(sys), n, depth + 1)) return m;
            }
        }
        return std::nullopt;
    }
}

}  // namespace cfproto

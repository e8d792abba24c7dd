#include <random>

#include "cfproto/formula.hpp"
#include "cfproto/solver.hpp"
#include "doctest.h"

using namespace cfproto;

namespace {

Expr v(const char* n) { return mk_var(n); }
Expr n(std::int64_t k) { return mk_int(k); }

SatResult run(const Expr& f) {
    BuiltinSolver s;
    return s.check(f);
}

void check_model(const Expr& f, const SatResult& r) {
    Valuation val;
    val.ints = r.model;
    CHECK(eval_bool(f, val));
}

}  // namespace

TEST_CASE("linear arithmetic basics") {
    Expr f = mk_and({mk_eq(v("x1"), n(1)), mk_eq(v("x2"), mk_add(v("x1"), n(1)))});
    BuiltinSolver s;
    CHECK(s.implies(f, mk_eq(v("x2"), n(2))));
    CHECK_FALSE(s.implies(f, mk_eq(v("x2"), n(3))));
    auto r = run(f);
    REQUIRE(r.sat());
    check_model(f, r);
}

TEST_CASE("guard predicates are inconsistent with the else branch") {
    Expr f = mk_and({mk_eq(v("l1_acq"), v("l1")), mk_eq(v("l1_acq"), v("$1")), mk_ne(v("l1"), v("$1"))});
    CHECK(run(f).unsat());
}

TEST_CASE("integer reasoning beyond the rationals") {
    CHECK(run(mk_eq(mk_scale(2, v("x")), mk_add(mk_scale(2, v("y")), n(1)))).unsat());
    Expr g = mk_eq(mk_add(mk_scale(3, v("x")), mk_scale(2, v("y"))), n(1));
    auto r = run(g);
    REQUIRE(r.sat());
    check_model(g, r);
    // 4 <= 3x <= 5 has a rational but no integer solution
    Expr h = mk_and(mk_le(n(4), mk_scale(3, v("x"))), mk_le(mk_scale(3, v("x")), n(5)));
    CHECK(run(h).unsat());
    Expr k = mk_and({mk_le(n(1), mk_sub(mk_scale(3, v("x")), mk_scale(2, v("y")))),
                     mk_le(mk_sub(mk_scale(3, v("x")), mk_scale(2, v("y"))), n(1)), mk_le(n(4), v("y")),
                     mk_le(v("y"), n(6))});
    auto rk = run(k);
    REQUIRE(rk.sat());
    check_model(k, rk);
}

TEST_CASE("disequalities split lazily") {
    Expr f = mk_and({mk_le(n(0), v("x")), mk_le(v("x"), n(2)), mk_ne(v("x"), n(0)), mk_ne(v("x"), n(1)),
                     mk_ne(v("x"), n(2))});
    CHECK(run(f).unsat());
    Expr g = mk_and({mk_le(n(0), v("x")), mk_le(v("x"), n(2)), mk_ne(v("x"), n(0)), mk_ne(v("x"), n(2))});
    auto r = run(g);
    REQUIRE(r.sat());
    CHECK(r.model["x"] == 1);
}

TEST_CASE("arrays and uninterpreted functions") {
    Expr h1 = mk_var("h1", Sort::Array), h2 = mk_var("h2", Sort::Array);
    Expr f = mk_and({mk_eq(h2, mk_store(h1, v("a"), n(5))), mk_eq(mk_select(h2, v("b")), n(3)), mk_eq(v("a"), v("b"))});
    CHECK(run(f).unsat());
    Expr g = mk_and({mk_eq(h2, mk_store(h1, v("a"), n(5))), mk_eq(mk_select(h2, v("b")), n(3))});
    CHECK(run(g).sat());
    Expr u = mk_and({mk_ne(mk_app("f", {v("x")}), mk_app("f", {v("y")})), mk_eq(v("x"), v("y"))});
    CHECK(run(u).unsat());
    Expr m = mk_and({mk_eq(v("x"), v("y")), mk_ne(mk_mul(v("x"), v("z")), mk_mul(v("y"), v("z")))});
    CHECK(run(m).unsat());
}

TEST_CASE("array equalities by extensionality") {
    Expr H = mk_var("H", Sort::Array), K = mk_var("K", Sort::Array);
    // equal updates at distinct indices force the old contents
    Expr same = mk_eq(mk_store(H, v("a"), n(1)), mk_store(H, v("b"), n(1)));
    CHECK(run(mk_and({same, mk_ne(v("a"), v("b")), mk_eq(mk_select(H, v("a")), n(0))})).unsat());
    CHECK(run(mk_and({same, mk_ne(v("a"), v("b"))})).sat());
    CHECK(run(mk_and({same, mk_eq(mk_select(H, v("a")), n(0))})).sat());
    // a disequality needs a witness index
    CHECK(run(mk_and(mk_ne(mk_store(H, v("a"), n(1)), H), mk_eq(mk_select(H, v("a")), n(1)))).unsat());
    CHECK(run(mk_ne(mk_store(H, v("a"), n(1)), H)).sat());
    CHECK(run(mk_and({mk_eq(H, K), mk_ne(mk_select(H, v("i")), mk_select(K, v("i")))})).unsat());
    CHECK(run(mk_or(mk_eq(mk_store(H, v("a"), n(2)), mk_store(K, v("a"), n(3))), mk_eq(v("a"), n(4)))).sat());
    CHECK(run(mk_and(mk_eq(mk_store(H, v("a"), n(2)), mk_store(K, v("a"), n(3))), mk_ne(v("a"), v("a")))).unsat());
}

TEST_CASE("boolean structure") {
    Expr f = mk_and({mk_or(mk_eq(v("x"), n(1)), mk_eq(v("x"), n(2))), mk_or(mk_eq(v("x"), n(3)), mk_eq(v("y"), n(4))),
                     mk_ne(v("y"), n(4))});
    CHECK(run(f).unsat());
    Expr g = mk_not(mk_and(mk_le(v("x"), n(0)), mk_le(n(0), v("x"))));
    auto r = run(g);
    REQUIRE(r.sat());
    CHECK(r.model["x"] != 0);
}

TEST_CASE("normalized atoms print stably") {
    CHECK(to_string(normalize(mk_eq(v("$1"), v("l1_acq")))) == "l1_acq = $1");
    CHECK(to_string(normalize(mk_not(mk_eq(v("l1_acq"), v("$1"))))) == "l1_acq != $1");
    CHECK(to_string(normalize(mk_lt(v("x"), v("y")))) == "x <= y - 1");
    CHECK(to_string(normalize(mk_eq(mk_scale(2, v("x")), n(3)))) == "false");
}

// independent oracle: bounded brute force over a box that the formula itself enforces
TEST_CASE("random formulas agree with exhaustive search") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> coef(-3, 3), cst(-4, 4), pick(0, 2), kind(0, 3), width(1, 3);
    const char* names[3] = {"x", "y", "z"};
    for (int round = 0; round < 300; ++round) {
        std::vector<Expr> cs;
        for (auto* nm : names) {
            cs.push_back(mk_le(n(-3), v(nm)));
            cs.push_back(mk_le(v(nm), n(3)));
        }
        int nc = 2 + round % 4;
        for (int i = 0; i < nc; ++i) {
            std::vector<Expr> alts;
            int w = width(rng);
            for (int j = 0; j < w; ++j) {
                Expr t = mk_add({mk_scale(coef(rng), v(names[0])), mk_scale(coef(rng), v(names[1])),
                                 mk_scale(coef(rng), v(names[2]))});
                Expr c = n(cst(rng));
                switch (kind(rng)) {
                    case 0: alts.push_back(mk_eq(t, c)); break;
                    case 1: alts.push_back(mk_le(t, c)); break;
                    case 2: alts.push_back(mk_ne(t, c)); break;
                    default: alts.push_back(mk_lt(c, t)); break;
                }
            }
            cs.push_back(mk_or(alts));
        }
        Expr f = mk_and(cs);
        bool brute = false;
        Valuation val;
        for (int a = -3; a <= 3 && !brute; ++a)
            for (int b = -3; b <= 3 && !brute; ++b)
                for (int c = -3; c <= 3 && !brute; ++c) {
                    val.ints = {{"x", a}, {"y", b}, {"z", c}};
                    brute = eval_bool(f, val);
                }
        auto r = run(f);
        REQUIRE(r.status != SatResult::Unknown);
        CHECK_MESSAGE(r.sat() == brute, to_string(f));
        if (r.sat()) check_model(f, r);
    }
}

TEST_CASE("memo cache is transparent") {
    auto inner = std::make_shared<BuiltinSolver>();
    CachedSolver cached(inner);
    Expr f = mk_and(mk_le(n(4), mk_scale(3, v("x"))), mk_le(mk_scale(3, v("x")), n(6)));
    auto a = cached.check(f);
    auto b = cached.check(f);
    CHECK(a.status == b.status);
    CHECK(a.status == inner->check(f).status);
    CHECK(cached.hits() == 1);
}

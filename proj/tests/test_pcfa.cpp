#include <random>

#include "cfproto/instrument.hpp"
#include "cfproto/pcfa.hpp"
#include "doctest.h"

using namespace cfproto;

namespace {

std::string src(const std::string& rel) { return read_file(std::string(CFPROTO_SOURCE_DIR) + "/" + rel); }

ProgramPcfa running(const char* file = "corpus/lock/running-ok.cfp") {
    auto spec = parse_spec(src("protocols/lock.spec"));
    return build_initial(prepare(parse_program(src(file)), spec), &spec);
}

Expr v(const char* n) { return mk_var(n); }

int find_state(const ProgramPcfa& P, const std::string& m, int loc, const Expr& pred, Solver& s) {
    for (int id : P.at(m).states_at(loc))
        if (s.implies(P.state(m, id).pred, pred)) return id;
    return -1;
}

}  // namespace

TEST_CASE("initial automata of the running example") {
    auto P = running();
    CHECK(P.at("foo").states.size() == 9);
    CHECK(P.at("foo").edges.size() == 9);
    CHECK(P.at("acquire").states.size() == 4);
    CHECK(P.at("acquire").edges.size() == 4);
    CHECK(P.at("release").states.size() == 4);
    CHECK(P.at("main").states.size() == 6);
    const auto& acq = P.at("acquire");
    // a0 -prelude-> a1, a1 -g-> a2 -api-> a3, a1 -!g-> a3
    std::map<std::string, std::string> shape;
    for (auto& e : acq.edges)
        shape[P.state_label("acquire", e.src) + ">" + P.state_label("acquire", e.dst)] = acq.edge(e.label).atom.str();
    CHECK(shape.at("acquire.0>acquire.1") == "l1_acq := l1");
    CHECK(shape.at("acquire.1>acquire.2") == "assume($1 == l1)");
    CHECK(shape.at("acquire.2>acquire.3") == "$1.lock()");
    CHECK(shape.at("acquire.1>acquire.3") == "assume(!($1 == l1))");
    CHECK(acq.edge(acq.edges.begin()->label).atom.prelude);
    // foo: f1 -*-> f2, binds and calls down to f8, f1 -!*-> f8
    const auto& foo = P.at("foo");
    int calls = 0, binds = 0;
    for (auto& e : foo.cfa) {
        calls += e.atom.kind == Atom::Call;
        binds += e.atom.bind;
    }
    CHECK(calls == 3);
    CHECK(binds == 3);
    CHECK(P.locs[foo.exit_loc].label() == "foo.8");
    for (auto& m : P.order) CHECK(P.info.at(m).modset.empty() == (m != "main"));
    CHECK(P.info.at("main").modset == std::set<std::string>{"@alloc"});
}

TEST_CASE("skip body gives a single edge") {
    auto P = build_initial(parse_program("class C { void main() { call f(); } void f() { skip; } }"));
    CHECK(P.at("f").states.size() == 2);
    CHECK(P.at("f").edges.size() == 1);
    CHECK(P.at("f").cfa[0].atom.kind == Atom::Skip);
}

TEST_CASE("mod-sets are closed under calls and give global ghosts") {
    auto P = build_initial(parse_program(
        "class C { static int g = 0; int f; void main() { call a(); } void a() { call b(); } "
        "void b() { g := g + 1; c := new C; c.f := 2; } }"));
    std::set<std::string> want{"@alloc", "g", "heap.f"};
    CHECK(P.info.at("a").modset == want);
    CHECK(P.info.at("b").modset == want);
    CHECK(P.info.at("a").global_ghosts.size() == 3);
    // 3 ghost preludes + call
    CHECK(P.at("a").cfa.size() == 4);
}

TEST_CASE("complete cubes") {
    CHECK(complete_cubes({}).size() == 1);
    CHECK(is_true(complete_cubes({})[0]));
    auto c1 = complete_cubes({mk_lt(v("x"), mk_int(0))});
    REQUIRE(c1.size() == 2);
    auto c3 = complete_cubes({mk_lt(v("x"), mk_int(0)), mk_eq(v("y"), mk_int(1)), mk_eq(v("z"), v("x"))});
    CHECK(c3.size() == 8);
    BuiltinSolver s;
    // pairwise disjoint and covering
    for (size_t i = 0; i < c3.size(); ++i)
        for (size_t j = i + 1; j < c3.size(); ++j) CHECK_FALSE(s.is_sat(mk_and(c3[i], c3[j])));
    CHECK(s.is_valid(mk_or(c3)));
}

TEST_CASE("clone_states multiplies the states at one location") {
    std::map<int, PState> S{{0, {0, 10, mk_true()}}, {1, {1, 10, mk_lt(v("x"), mk_int(0))}}, {2, {2, 11, mk_true()}}};
    int next = 3;
    auto cubes = complete_cubes({mk_eq(v("y"), mk_int(0)), mk_lt(v("x"), mk_int(0))});
    auto out = clone_states(S, 10, cubes, next);
    CHECK(out.size() == 1 + 2 * 4);
    CHECK(out.count(2));
    CHECK_FALSE(out.count(0));
    CHECK(S.size() == 3);
    CHECK(next == 11);
}

TEST_CASE("edge feasibility") {
    auto P = build_initial(parse_program("class C { int f; void main() { x := x + 1; c := new C; c.f := x; } }"));
    BuiltinSolver s;
    const auto& cfa = P.at("main").cfa;
    const Atom& inc = cfa[1].atom;  // after @alloc := 0
    REQUIRE(inc.str() == "x := x + 1");
    CHECK(edge_feasible(P, "main", mk_eq(v("x"), mk_int(1)), inc, mk_eq(v("x"), mk_int(2)), s));
    CHECK_FALSE(edge_feasible(P, "main", mk_eq(v("x"), mk_int(1)), inc, mk_eq(v("x"), mk_int(1)), s));
    const Atom& nw = cfa[2].atom;
    REQUIRE(nw.str() == "c := new C");
    CHECK_FALSE(edge_feasible(P, "main", mk_eq(v("@alloc"), mk_int(0)), nw, mk_eq(v("c"), mk_int(0)), s));
    CHECK(edge_feasible(P, "main", mk_eq(v("@alloc"), mk_int(0)), nw, mk_eq(v("c"), mk_int(1)), s));
    const Atom& st = cfa[3].atom;
    Expr heap = mk_var("heap.f", Sort::Array);
    CHECK_FALSE(edge_feasible(P, "main", mk_eq(v("x"), mk_int(3)), st, mk_ne(mk_select(heap, v("c")), mk_int(3)), s));
    CHECK(edge_feasible(P, "main", mk_eq(v("x"), mk_int(3)), st, mk_eq(mk_select(heap, v("c")), mk_int(3)), s));
}

TEST_CASE("refinement of acquire") {
    auto P = running();
    BuiltinSolver s;
    const auto& acq = P.at("acquire");
    int a1 = acq.locs[1], a3 = acq.locs[3];
    Expr ghost_eq = mk_eq(v("l1_acq"), v("l1"));
    Expr exit_eq = mk_eq(v("l1_acq"), v("$1"));
    RefineStats st;
    auto Q = refine(P, {{a1, {ghost_eq}}, {a3, {exit_eq}}}, s, 6, &st);
    CHECK(st.cloned == 4);
    CHECK(st.dropped == 0);
    const auto& A = Q.at("acquire");
    CHECK(A.states.size() == 6);
    CHECK(A.exit_states().size() == 2);
    int a1eq = find_state(Q, "acquire", a1, ghost_eq, s);
    int a1ne = find_state(Q, "acquire", a1, mk_not(ghost_eq), s);
    int a3eq = find_state(Q, "acquire", a3, exit_eq, s);
    int a3ne = find_state(Q, "acquire", a3, mk_not(exit_eq), s);
    REQUIRE(a1eq >= 0);
    REQUIRE(a1ne >= 0);
    REQUIRE(a3eq >= 0);
    REQUIRE(a3ne >= 0);
    int a0 = A.entry_states()[0];
    int lbl_pre = -1, lbl_no = -1;
    for (auto& e : A.cfa) {
        if (e.atom.prelude) lbl_pre = e.id;
        if (e.atom.kind == Atom::Assume && e.atom.neg) lbl_no = e.id;
    }
    CHECK(A.edges.count({a0, lbl_pre, a1eq}));
    CHECK_FALSE(A.edges.count({a0, lbl_pre, a1ne}));
    CHECK_FALSE(A.edges.count({a1eq, lbl_no, a3eq}));
    CHECK(A.edges.count({a1eq, lbl_no, a3ne}));
    // other methods untouched
    CHECK(Q.at("foo").edges == P.at("foo").edges);
}

TEST_CASE("contradictory clones are dropped eagerly") {
    auto P = build_initial(parse_program("class C { void main() { x := 1; } }"));
    BuiltinSolver s;
    int l = P.at("main").exit_loc;
    auto Q = refine(P, {{l, {mk_eq(v("x"), mk_int(1))}}}, s);
    Expr x1 = mk_eq(v("x"), mk_int(1));
    RefineStats st;
    auto R = refine(Q, {{l, {mk_lt(v("x"), mk_int(1)), mk_gt(v("x"), mk_int(0))}}}, s, 6, &st);
    // each of the 2 states at l gets 4 cubes
    CHECK(st.cloned == 8);
    CHECK(R.at("main").states_at(l).size() == static_cast<size_t>(st.cloned - st.dropped));
    for (int id : R.at("main").states_at(l)) CHECK(s.is_sat(R.state("main", id).pred));
    CHECK(st.dropped >= 4);
    (void)x1;
}

TEST_CASE("cube cap") {
    auto P = build_initial(parse_program("class C { void main() { x := 1; } }"));
    BuiltinSolver s;
    int l = P.at("main").exit_loc;
    std::vector<Expr> many;
    for (int k = 0; k < 9; ++k) many.push_back(mk_eq(v("x"), mk_int(k)));
    RefineStats st;
    auto Q = refine(P, {{l, many}}, s, 6, &st);
    CHECK(st.capped == 3);
    CHECK(st.cloned == 64);
}

TEST_CASE("edge feasibility agrees with brute force") {
    // x, y over a window wide enough for every threshold used
    std::mt19937 rng(7);
    auto P = build_initial(parse_program(
        "class C { void main() { x := y + 1; x := x * 2; y := *; assume(x < y); assume(x = y); } }"));
    BuiltinSolver s;
    std::vector<Atom> atoms;
    for (auto& e : P.at("main").cfa)
        if (e.atom.var != kAlloc) atoms.push_back(e.atom);
    Atom neg = atoms.back();
    neg.neg = true;
    atoms.push_back(neg);
    auto term = [&](int k) { return k == 0 ? v("x") : k == 1 ? v("y") : mk_int(static_cast<int>(rng() % 5) - 2); };
    auto atom = [&] {
        Expr a = term(rng() % 3), b = term(rng() % 3);
        switch (rng() % 3) {
            case 0: return mk_lt(a, b);
            case 1: return mk_eq(a, b);
            default: return mk_le(a, b);
        }
    };
    auto pred = [&] {
        Expr p = atom();
        int n = rng() % 3;
        for (int i = 0; i < n; ++i) p = rng() % 2 ? mk_and(p, atom()) : mk_or(p, mk_not(atom()));
        return p;
    };
    const int R = 12;
    for (int round = 0; round < 300; ++round) {
        const Atom& a = atoms[rng() % atoms.size()];
        Expr pre = pred(), post = pred();
        bool brute = false;
        for (int x = -R; x <= R && !brute; ++x)
            for (int y = -R; y <= R && !brute; ++y) {
                Valuation in;
                in.ints = {{"x", x}, {"y", y}};
                if (!eval_bool(pre, in)) continue;
                std::vector<Valuation> outs;
                Valuation o = in;
                if (a.kind == Atom::Assume) {
                    bool c = a.str().find("<") != std::string::npos ? x < y : x == y;
                    if (c != a.neg) outs.push_back(o);
                } else if (a.str() == "x := y + 1") {
                    o.ints["x"] = y + 1;
                    outs.push_back(o);
                } else if (a.str() == "x := x * 2") {
                    o.ints["x"] = 2 * x;
                    outs.push_back(o);
                } else {
                    for (int h = -R; h <= R; ++h) {
                        o.ints["y"] = h;
                        outs.push_back(o);
                    }
                }
                for (auto& w : outs)
                    if (eval_bool(post, w)) brute = true;
            }
        INFO(a.str(), " ", to_string(pre), " / ", to_string(post));
        CHECK(edge_feasible(P, "main", pre, a, post, s) == brute);
    }
}

TEST_CASE("call clone formula renames the callee frame") {
    auto P = running();
    Expr exit = mk_eq(v("l1_acq"), v("$1"));
    Expr f = call_clone_formula(P, "foo", "acquire", mk_true(), mk_eq(v("l"), v("$1")), exit);
    auto vars = free_vars(f);
    CHECK(vars.count("acquire#l1"));
    CHECK_FALSE(vars.count("l1_acq"));
    BuiltinSolver s;
    Expr pre = mk_ne(v("acquire#l1"), v("$1"));
    CHECK_FALSE(call_clone_feasible(P, "foo", "acquire", pre, mk_true(), exit, s));
    CHECK(call_clone_feasible(P, "foo", "acquire", mk_true(), mk_true(), exit, s));
    auto G = build_initial(parse_program(
        "class C { static int g = 0; void main() { call inc(); } void inc() { g := g + 1; } }"));
    Expr gexit = mk_eq(v("g"), mk_add(v("g@in"), mk_int(1)));
    CHECK(call_clone_feasible(G, "main", "inc", mk_eq(v("g"), mk_int(0)), mk_eq(v("g"), mk_int(1)), gexit, s));
    CHECK_FALSE(call_clone_feasible(G, "main", "inc", mk_eq(v("g"), mk_int(0)), mk_eq(v("g"), mk_int(2)), gexit, s));
}

TEST_CASE("dumps") {
    auto P = running();
    auto d = dump(P);
    CHECK(d.find("acquire.2 -[$1.lock()]-> acquire.3") != std::string::npos);
    CHECK(dump_dot(P).rfind("digraph", 0) == 0);
}

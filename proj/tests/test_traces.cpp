#include "cfproto/instrument.hpp"
#include "cfproto/interp.hpp"
#include "cfproto/interpolants.hpp"
#include "cfproto/traces.hpp"
#include "doctest.h"

using namespace cfproto;

namespace {

std::string src(const std::string& rel) { return read_file(std::string(CFPROTO_SOURCE_DIR) + "/" + rel); }

struct Setup {
    SpecProtocol spec = parse_spec(src("protocols/lock.spec"));
    ProgramPcfa P;
    ProgramGrammar G;
    BuiltinSolver s;
    explicit Setup(const std::string& prog) {
        P = build_initial(prepare(parse_program(prog), spec), &spec);
        G = construct_cfg(P, s);
    }
    NestedTrace trace_for(std::vector<std::string> ts) {
        Word w;
        for (auto& t : ts) w.push_back(G.g.terminal(t));
        auto d = parse(G.g, to_cnf(G.g), w);
        REQUIRE(d);
        return derivation_to_path(G, P, *d);
    }
};

std::string running_src() { return src("corpus/lock/running-ok.cfp"); }

int position_in(const NestedTrace& t, const std::string& m, int exit_state) {
    for (size_t k = 0; k < t.states.size(); ++k)
        if (t.state_method[k] == m && t.states[k] == exit_state) return static_cast<int>(k);
    return -1;
}

}  // namespace

TEST_CASE("counterexample lock becomes a nested trace") {
    Setup S(running_src());
    auto t = S.trace_for({"$1.lock()"});
    CHECK(trace_word(S.G, t) == Word{*S.G.g.find("$1.lock()")});
    std::string text = t.str(S.P);
    CHECK(text.find("call acquire") != std::string::npos);
    CHECK(text.find("$1.lock()") != std::string::npos);
    CHECK(text.find("call release") != std::string::npos);
    CHECK(text.find("assume(!($1 == l2))") != std::string::npos);
    // nesting: every call matched by a later return
    for (size_t k = 0; k < t.size(); ++k) {
        if (t.steps[k].kind == TraceStep::Call) {
            REQUIRE(t.match[k] > static_cast<int>(k));
            CHECK(t.steps[t.match[k]].kind == TraceStep::Return);
            CHECK(t.match[t.match[k]] == static_cast<int>(k));
        }
    }
    std::string why;
    CHECK(p_feasible(S.P, t, S.s, &why));
    CHECK(p_feasible_any(S.P, t, S.s));
}

TEST_CASE("empty word comes from the skipped branch") {
    Setup S(running_src());
    auto t = S.trace_for({});
    int calls = 0;
    for (auto& st : t.steps) calls += st.kind == TraceStep::Call;
    CHECK(calls == 1);
    auto ssa = to_ssa(S.P, t);
    CHECK(feasible_trace(ssa, S.s).sat());
}

TEST_CASE("lock counterexample is infeasible and interpolants hold") {
    Setup S(running_src());
    auto t = S.trace_for({"$1.lock()"});
    auto ssa = to_ssa(S.P, t);
    CHECK(feasible_trace(ssa, S.s).unsat());
    auto I = nested_interpolants(t, ssa, S.s);
    REQUIRE(I);
    std::string why;
    CHECK(check_interpolant_contract(t, ssa, I->versioned, S.s, &why));
    INFO(why);
    // at acquire's exit the ghost equals the wildcard
    const auto& acq = S.P.at("acquire");
    int k = position_in(t, "acquire", acq.exit_states()[0]);
    REQUIRE(k >= 0);
    Expr want = normalize(mk_eq(mk_var("l1_acq"), mk_var("$1")));
    bool found = false;
    for (auto& c : conjuncts(I->plain[k])) found |= c->key == want->key;
    CHECK(found);
    for (size_t j = 0; j < I->plain.size(); ++j)
        for (auto& v : free_vars(I->plain[j])) CHECK(v.find('~') == std::string::npos);
    // shuffled sequence breaks the contract
    auto bad = I->versioned;
    std::reverse(bad.begin() + 1, bad.end() - 1);
    bool changed = false;
    for (size_t j = 0; j < bad.size(); ++j) changed |= bad[j]->key != I->versioned[j]->key;
    if (changed) CHECK_FALSE(check_interpolant_contract(t, ssa, bad, S.s));
    auto last_true = I->versioned;
    last_true.back() = mk_true();
    CHECK_FALSE(check_interpolant_contract(t, ssa, last_true, S.s));
}

TEST_CASE("single infeasible assumption") {
    auto P = build_initial(parse_program("class C { void main() { assume(false); } }"));
    BuiltinSolver s;
    auto G = construct_cfg(P, s);
    // no derivation: build the trace by hand
    NestedTrace t;
    const auto& A = P.at("main");
    t.states = {A.entry_states()[0], A.exit_states()[0]};
    t.state_method = {"main", "main"};
    t.steps.push_back({TraceStep::Stmt, "main", A.cfa[0].id, A.cfa[0].atom});
    t.match = {-1};
    auto ssa = to_ssa(P, t);
    auto I = nested_interpolants(t, ssa, s);
    REQUIRE(I);
    REQUIRE(I->versioned.size() == 2);
    CHECK(is_true(I->versioned[0]));
    CHECK(is_false(I->versioned[1]));
    CHECK(check_interpolant_contract(t, ssa, I->versioned, s));
}

TEST_CASE("straight-line SSA") {
    auto P = build_initial(parse_program("class C { void main() { x := 1; x := x + 1; assume(x = 3); } }"));
    BuiltinSolver s;
    NestedTrace t;
    const auto& A = P.at("main");
    t.states.push_back(A.entry_states()[0]);
    t.state_method.push_back("main");
    for (auto& e : A.cfa) {
        t.steps.push_back({TraceStep::Stmt, "main", e.id, e.atom});
        t.match.push_back(-1);
        t.states.push_back(A.states_at(e.dst)[0]);
        t.state_method.push_back("main");
    }
    auto ssa = to_ssa(P, t);
    REQUIRE(ssa.text.size() == 3);
    CHECK(ssa.text[0] == "x~0~1 := 1");
    CHECK(ssa.text[1] == "x~0~2 := 1 + x~0~1");
    CHECK(feasible_trace(ssa, s).unsat());
    auto I = nested_interpolants(t, ssa, s);
    REQUIRE(I);
    CHECK(check_interpolant_contract(t, ssa, I->versioned, s));
    CHECK(to_string(I->plain[2]) == "x = 2");
    CHECK(ssa.in_scope(2, "x~0~2"));
    CHECK_FALSE(ssa.in_scope(2, "x~0~1"));
}

TEST_CASE("projection") {
    Expr x = mk_var("x"), y = mk_var("y"), z = mk_var("z");
    auto keep_xz = [](const std::string& n) { return n != "y"; };
    CHECK(to_string(project(mk_and(mk_eq(x, y), mk_eq(y, z)), keep_xz)) == "x = z");
    CHECK(to_string(project(mk_and(mk_le(x, y), mk_lt(y, z)), keep_xz)) == "x <= z - 1");
    CHECK(is_false(project(mk_and({mk_le(x, y), mk_lt(y, x)}), [](const std::string& n) { return n == "x"; })));
    Expr A = mk_var("A", Sort::Array), B = mk_var("B", Sort::Array);
    auto f = project(mk_eq(A, mk_store(B, x, mk_int(3))), [](const std::string& n) { return n != "B"; });
    CHECK(to_string(f) == to_string(normalize(mk_eq(mk_select(A, x), mk_int(3)))));
    // the stored value survives when its variable leaves scope
    auto g = project(mk_and(mk_eq(A, mk_store(B, x, y)), mk_ne(y, z)), [](const std::string& n) { return n != "y"; });
    BuiltinSolver s;
    CHECK(s.implies(g, mk_ne(mk_select(A, x), z)));
}

TEST_CASE("interpreter on the running example") {
    auto p = parse_program(running_src());
    // if-branch once, then the recursive call skips
    ScriptChooser c({1, 0});
    auto e = interpret(p, c);
    CHECK(e.status == Execution::Complete);
    REQUIRE(e.events.size() == 2);
    CHECK(e.events[0].str() == "1.lock()");
    CHECK(e.events[1].str() == "1.unlock()");
    auto m = interpret(parse_program("class C { void main() { skip; } }"), c);
    CHECK(m.steps.size() == 1);
    InterpConfig cfg;
    cfg.max_depth = 3;
    auto all = all_executions(p, cfg);
    CHECK(all.runs.size() == 3);
}

TEST_CASE("trace to word") {
    auto spec = parse_spec(src("protocols/lock.spec"));
    auto p = parse_program(
        "class Lock { } class C { void main() { l1 := new Lock; api_call l1.lock(); api_call l1.unlock(); "
        "l2 := new Lock; api_call l2.lock(); api_call l2.unlock(); } }");
    ScriptChooser c({});
    auto e = interpret(p, c);
    auto g1 = instantiate_spec(spec, {{"$1", 1}});
    CHECK(g1.word_string(trace_to_word(e, g1)) == "1.lock() 1.unlock()");
    auto g2 = instantiate_spec(spec, {{"$1", 2}});
    CHECK(g2.word_string(trace_to_word(e, g2)) == "2.lock() 2.unlock()");
    CHECK(trace_to_word(interpret(parse_program("class C { void main() { skip; } }"), c), g1).empty());
    std::map<std::int64_t, std::string> types{{1, "Lock"}, {2, "Other"}};
    CHECK_THROWS(instantiate_spec(spec, {{"$1", 2}}, &types));
    CHECK_NOTHROW(instantiate_spec(spec, {{"$1", 1}}, &types));
    auto none = parse_spec("S -> eps ;");
    CHECK(instantiate_spec(none, {}).prods.size() == 1);
    auto two = parse_spec("wildcards: $1: A, $2: B; S -> $1.f($2) | eps ;");
    auto g = instantiate_spec(two, {{"$1", 4}, {"$2", 7}});
    CHECK(g.find("4.f(7)"));
}

TEST_CASE("bounded conformance") {
    auto spec = parse_spec(src("protocols/lock.spec"));
    auto ok = conforms(parse_program(running_src()), spec);
    CHECK(ok.pass);
    CHECK(ok.executions == 6);
    auto bug = conforms(parse_program(src("corpus/lock/running-bug.cfp")), spec);
    CHECK_FALSE(bug.pass);
    CHECK(bug.word == "1.lock()");
    CHECK(conforms(parse_program("class C { void main() { skip; } }"), spec).pass);
    auto nonempty = parse_spec("wildcards: $1: A; S -> $1.f() ;");
    CHECK_FALSE(conforms(parse_program("class C { void main() { skip; } }"), nonempty).pass);
}

#include "cfproto/abstraction.hpp"
#include "cfproto/instrument.hpp"
#include "doctest.h"

using namespace cfproto;

namespace {

std::string src(const std::string& rel) { return read_file(std::string(CFPROTO_SOURCE_DIR) + "/" + rel); }

ProgramPcfa running(const char* file = "corpus/lock/running-ok.cfp") {
    auto spec = parse_spec(src("protocols/lock.spec"));
    return build_initial(prepare(parse_program(src(file)), spec), &spec);
}

Expr v(const char* n) { return mk_var(n); }

// productions of lhs rendered as "rhs rhs" strings
std::multiset<std::string> alts(const ProgramGrammar& G, const std::string& lhs) {
    std::multiset<std::string> out;
    auto id = G.g.find(lhs);
    if (!id) return out;
    for (auto& p : G.g.prods)
        if (p.lhs == *id) {
            std::string s;
            for (int r : p.rhs) s += (s.empty() ? "" : " ") + G.g.name(r);
            out.insert(s.empty() ? "eps" : s);
        }
    return out;
}

Word word(ProgramGrammar& G, std::vector<std::string> ts) {
    Word w;
    for (auto& t : ts) w.push_back(G.g.terminal(t));
    return w;
}

std::size_t expected_nonterminals(const ProgramPcfa& P, const ProgramGrammar& G) {
    std::size_t n = 0;
    for (auto& m : P.order)
        for (int c : P.at(m).exit_states()) n += backward_reachable(P.at(m), c).size() + 1;
    return n + (G.g.name(G.g.start) == "START");
}

int state_at(const ProgramPcfa& P, const std::string& m, int k, const Expr& pred, Solver& s) {
    const auto& A = P.at(m);
    for (int id : A.states_at(A.locs[k]))
        if (s.implies(A.states.at(id).pred, pred)) return id;
    return -1;
}

}  // namespace

TEST_CASE("initial grammar has the shape of the hand-drawn one") {
    auto P = running();
    BuiltinSolver s;
    auto G = construct_cfg(P, s);
    CHECK(G.g.name(G.g.start) == "main{main.5}");
    CHECK(alts(G, "acquire{acquire.3}") == std::multiset<std::string>{"acquire.0|acquire.3"});
    CHECK(alts(G, "acquire.0|acquire.3") == std::multiset<std::string>{"acquire.1|acquire.3"});
    CHECK(alts(G, "acquire.1|acquire.3") == std::multiset<std::string>{"acquire.2|acquire.3", "acquire.3|acquire.3"});
    CHECK(alts(G, "acquire.2|acquire.3") == std::multiset<std::string>{"$1.lock() acquire.3|acquire.3"});
    CHECK(alts(G, "acquire.3|acquire.3") == std::multiset<std::string>{"eps"});
    CHECK(alts(G, "foo.1|foo.8") == std::multiset<std::string>{"foo.2|foo.8", "foo.8|foo.8"});
    CHECK(alts(G, "foo.3|foo.8") == std::multiset<std::string>{"acquire{acquire.3} foo.4|foo.8"});
    CHECK(alts(G, "foo.5|foo.8") == std::multiset<std::string>{"foo{foo.8} foo.6|foo.8"});
    CHECK(alts(G, "foo.7|foo.8") == std::multiset<std::string>{"release{release.3} foo.8|foo.8"});
    // foo: entry + 9 edges + exit
    int foo_prods = 0;
    for (auto& pi : G.prod) foo_prods += pi.method == "foo";
    CHECK(foo_prods == 11);
    CHECK(G.g.nonterminals().size() == expected_nonterminals(P, G));
    // provenance on everything except clone starts and exits
    for (size_t i = 0; i < G.g.prods.size(); ++i) {
        bool bare = G.prod[i].rule == RuleEntry || G.prod[i].rule == RuleExit;
        CHECK((G.g.prods[i].provenance < 0) == bare);
    }
    // the over-approximation admits a lone lock
    auto lone = word(G, {"$1.lock()"});
    auto L = parse(G.g, to_cnf(G.g), lone);
    CHECK(L.has_value());
    auto foo = G.g.find("foo{foo.8}");
    REQUIRE(foo);
    CHECK(shortest_word(G.g, *foo)->empty());
}

TEST_CASE("skip program grammar") {
    auto P = build_initial(parse_program("class C { void main() { skip; } }"));
    BuiltinSolver s;
    auto G = construct_cfg(P, s);
    CHECK(G.g.prods.size() == 3);
    CHECK(alts(G, "main{main.1}") == std::multiset<std::string>{"main.0|main.1"});
    CHECK(alts(G, "main.0|main.1") == std::multiset<std::string>{"main.1|main.1"});
    CHECK(alts(G, "main.1|main.1") == std::multiset<std::string>{"eps"});
}

TEST_CASE("exit clones split the callee and gate call productions") {
    auto P = running();
    BuiltinSolver s;
    const auto& foo = P.at("foo");
    const auto& acq = P.at("acquire");
    Expr bound = mk_eq(v("acquire#l1"), v("l"));
    Expr same = mk_eq(v("l"), v("$1"));
    Expr phi1 = mk_eq(v("l1_acq"), v("$1"));
    Expr ghost = mk_eq(v("l1_acq"), v("l1"));
    auto Q = refine(P, {{foo.locs[3], {bound}}, {foo.locs[4], {same}}, {acq.locs[1], {ghost}}, {acq.locs[2], {phi1}}, {acq.locs[3], {phi1}}}, s);
    AbstractionStats st;
    auto G = construct_cfg(Q, s, &st);
    CHECK(st.clone_pruned > 0);
    CHECK(Q.at("acquire").exit_states().size() == 2);
    int a3eq = state_at(Q, "acquire", 3, phi1, s), a3ne = state_at(Q, "acquire", 3, mk_not(phi1), s);
    REQUIRE(a3eq >= 0);
    REQUIRE(a3ne >= 0);
    int f3 = state_at(Q, "foo", 3, bound, s);
    int f4eq = state_at(Q, "foo", 4, same, s), f4ne = state_at(Q, "foo", 4, mk_not(same), s);
    REQUIRE(f3 >= 0);
    int fexit = Q.at("foo").exit_states()[0];
    int F3 = G.state_symbol(Q, "foo", f3, fexit);
    int acq1 = G.clone(Q, "acquire", a3eq), acq2 = G.clone(Q, "acquire", a3ne);
    int F4 = G.state_symbol(Q, "foo", f4eq, fexit), F4n = G.state_symbol(Q, "foo", f4ne, fexit);
    auto has = [&](int lhs, std::vector<int> rhs) {
        for (auto& p : G.g.prods)
            if (p.lhs == lhs && p.rhs == rhs) return true;
        return false;
    };
    CHECK(has(F3, {acq1, F4}));
    CHECK_FALSE(has(F3, {acq1, F4n}));
    CHECK(has(F3, {acq2, F4n}));
    // the phi2 clone of acquire cannot emit lock: a2 does not reach the phi2 exit
    auto from = [&](int sym) {
        Grammar h = G.g;
        h.start = sym;
        return enumerate_words(h, 3).words;
    };
    auto w2 = from(acq2);
    REQUIRE(w2.size() == 1);
    CHECK(w2[0].empty());
    for (auto& w : from(acq1)) CHECK(w.size() == 1);
    CHECK(G.g.nonterminals().size() == expected_nonterminals(Q, G));
}

TEST_CASE("call clone check on trivial predicates") {
    auto P = running();
    BuiltinSolver s;
    CHECK(call_clone_feasible(P, "foo", "acquire", mk_true(), mk_true(), mk_true(), s));
    CHECK_FALSE(call_clone_feasible(P, "foo", "acquire", mk_true(), mk_true(), mk_false(), s));
}

TEST_CASE("compaction keeps the language and the edge sequences") {
    for (const char* f : {"corpus/lock/running-ok.cfp", "corpus/lock/running-bug.cfp"}) {
        auto P = running(f);
        BuiltinSolver s;
        auto G = construct_cfg(P, s);
        auto C = compact(G);
        CHECK(C.g.prods.size() < G.g.prods.size());
        auto a = enumerate_words(G.g, 6), b = enumerate_words(C.g, 6);
        std::set<Word> wa, wb;
        wa.insert(a.words.begin(), a.words.end());
        wb.insert(b.words.begin(), b.words.end());
        CHECK(wa == wb);
        // each production's steps chain through the PCFA
        for (auto& pi : C.prod)
            for (size_t k = 1; k < pi.steps.size(); ++k) CHECK(pi.steps[k - 1].dst == pi.steps[k].src);
    }
}

TEST_CASE("emitted grammar text") {
    auto P = running();
    BuiltinSolver s;
    auto G = construct_cfg(P, s);
    auto t = G.to_text();
    CHECK(t.rfind("start: main{main.5};", 0) == 0);
    CHECK(t.find("acquire.2|acquire.3 -> $1.lock() acquire.3|acquire.3 ;  // rule 2 edge") != std::string::npos);
}

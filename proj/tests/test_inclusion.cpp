#include <random>

#include "cfproto/abstraction.hpp"
#include "cfproto/inclusion.hpp"
#include "cfproto/instrument.hpp"
#include "doctest.h"

using namespace cfproto;

namespace {

std::string src(const std::string& rel) { return read_file(std::string(CFPROTO_SOURCE_DIR) + "/" + rel); }

SpecProtocol spec(const std::string& name) { return parse_spec(src("protocols/" + name + ".spec")); }

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else cur += c;
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

Grammar parse_grammar(const std::string& text) { return parse_spec("wildcards: $1: T; start: S;\n" + text).grammar(); }

// min prefix value and net change, letter by letter
Effect brute(const Dpda& d, const std::vector<std::string>& w) {
    std::int64_t c = 0, m = 0;
    for (auto& a : w) {
        auto id = d.find_letter(a);
        const auto* low = d.move(0, *id, 0);
        const auto* high = d.move(0, *id, 1);
        auto op = low ? low->op : high->op;
        c += op == Dpda::Push ? 1 : op == Dpda::Pop ? -1 : 0;
        m = std::min(m, c);
    }
    return {m, c};
}

}  // namespace

TEST_CASE("lock machine membership") {
    auto d = compile_spec_to_dpda(spec("lock"));
    CHECK(d.name == "balanced-counter");
    CHECK(d.states.size() == 1);
    CHECK(d.accepts({}));
    CHECK_FALSE(d.accepts({"$1.lock()"}));
    CHECK(d.accepts({"$1.lock()", "$1.unlock()"}));
    CHECK_FALSE(d.accepts({"$1.unlock()", "$1.lock()"}));
    CHECK_FALSE(d.accepts({"$1.other()"}));
    CHECK(d.accepting(0, 0));
    CHECK_FALSE(d.accepting(0, 1));
}

TEST_CASE("every protocol compiles to an agreeing machine") {
    const std::map<std::string, std::string> kind{{"lock", "balanced-counter"},   {"relock", "balanced-counter"},
                                                  {"canvas", "prefix-counter"},    {"wifi", "two-mode-counter"},
                                                  {"wake", "two-mode-counter"},    {"json", "json-element-stack"}};
    for (auto& [name, k] : kind) {
        CAPTURE(name);
        auto s = spec(name);
        auto d = compile_spec_to_dpda(s);
        CHECK(d.name == k);
        CHECK(d.one_counter() == (name != "json"));
        // exhaustive CYK comparison where the alphabet is small
        if (d.alphabet.size() <= 3) {
            auto g = s.grammar();
            auto c = to_cnf(g);
            std::vector<int> sigma;
            for (auto& a : d.alphabet) sigma.push_back(*g.find(a));
            std::size_t bad = 0;
            for (int n = 0; n <= 8; ++n)
                for (auto& w : all_words(sigma, n)) bad += dpda_accepts(d, g, w) != cyk_member(c, w).has_value();
            CHECK(bad == 0);
        }
        std::string why;
        CHECK_MESSAGE(dpda_agrees(d, s.grammar(), 8, &why), why);
    }
}

TEST_CASE("canvas accepts any counter value, lock only zero") {
    auto c = compile_spec_to_dpda(spec("canvas"));
    CHECK(c.accepts({"$1.save()"}));
    CHECK(c.accepts({"$1.save()", "$1.save()", "$1.restore()"}));
    CHECK_FALSE(c.accepts({"$1.restore()"}));
}

TEST_CASE("two-mode machine follows the grammar as written") {
    auto d = compile_spec_to_dpda(spec("wifi"));
    const std::string s = "$1.setRefCnt(false)", a = "$1.acquire()", r = "$1.release()";
    CHECK(d.accepts({s}));
    CHECK(d.accepts({s, a, r}));
    CHECK(d.accepts({s, a, a, r}));
    CHECK_FALSE(d.accepts({s, a, a, r, r}));
    CHECK_FALSE(d.accepts({s, a, r, a, r}));
    CHECK(d.accepts({s, a, a, r, a, r}));
    CHECK_FALSE(d.accepts({s, a, a, r, a, r, a, r}));
    CHECK(d.accepts({s, a, a, a, r, a, r, a, r}));
    CHECK(dpda_agrees(d, spec("wifi").grammar(), 14));
    CHECK_FALSE(d.accepts({s, a}));
    CHECK(d.accepts({a, a, r, r}));
    CHECK_FALSE(d.accepts({a, s}));
}

TEST_CASE("dpda file format") {
    auto s = spec("lock");
    auto d = parse_dpda("state q0; bottom BOT; accept (q0, BOT); on (q0, lock, _) push C goto q0; on (q0, unlock, C) pop goto q0;", &s);
    CHECK(d.alphabet[0] == "$1.lock()");
    CHECK(dpda_agrees(d, s.grammar(), 8));
    auto again = parse_dpda(d.to_text(), &s);
    CHECK(dpda_agrees(again, s.grammar(), 8));
    CHECK_THROWS_AS(parse_dpda("state q; bottom B; on (q, lock, _) goto q; on (q, lock, B) goto q;", &s), DpdaError);
    CHECK_THROWS_AS(parse_dpda("state q; bottom B; on (q, lock, B) pop goto q;", &s), DpdaError);
    CHECK_THROWS_AS(parse_dpda("state q; bottom B; on (q, lock, _) push B goto q;", &s), DpdaError);
    CHECK_THROWS_AS(parse_dpda("state q; frob;", &s), DpdaError);
    auto other = parse_spec("wildcards: $1: T; start: S; S -> $1.a() $1.a() $1.a() S | eps ;");
    CHECK_THROWS_AS(compile_spec_to_dpda(other), CannotCompile);
}

TEST_CASE("effect composition") {
    CHECK(effect_compose({0, 1}, {-1, -1}) == Effect{0, 0});
    CHECK(effect_compose({-1, -1}, {0, 1}) == Effect{-1, 0});
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> U(-4, 4);
    auto rnd = [&] {
        int n = U(rng), m = std::min({0, n, U(rng)});
        return Effect{m, n};
    };
    for (int i = 0; i < 500; ++i) {
        Effect a = rnd(), b = rnd(), c = rnd();
        CHECK(effect_compose(Effect{0, 0}, a) == a);
        CHECK(effect_compose(a, Effect{0, 0}) == a);
        CHECK(effect_compose(effect_compose(a, b), c) == effect_compose(a, effect_compose(b, c)));
    }
}

TEST_CASE("effect fixpoint matches brute force on small grammars") {
    auto d = compile_spec_to_dpda(spec("lock"));
    const char* grammars[] = {
        "S -> eps ;",
        "S -> eps | $1.lock() S $1.unlock() S ;",
        "S -> $1.lock() S | $1.unlock() ;",
        "S -> A A ; A -> $1.unlock() | $1.lock() $1.lock() ;",
        "S -> $1.lock() S $1.unlock() | $1.lock() $1.unlock() $1.unlock() ;",
    };
    for (auto* text : grammars) {
        CAPTURE(text);
        auto g = parse_grammar(text);
        auto t = effect_fixpoint(g, d);
        REQUIRE(t.uniform);
        const auto& row = t.at(g.start, 0);
        std::set<Effect> seen;
        for (auto& w : enumerate_words(g, 10).words) {
            std::vector<std::string> names;
            for (int a : w) names.push_back(g.name(a));
            Effect e = brute(d, names);
            seen.insert(e);
            CHECK(word_effect(d, g, w).second == e);
            REQUIRE(row.count(0));
            CHECK(row.at(0).contains(e));
        }
        if (!t.widened) CHECK(row.count(0) ? row.at(0).points.size() >= seen.size() : seen.empty());
    }
    auto eps = parse_grammar("S -> eps ;");
    auto t = effect_fixpoint(eps, d);
    CHECK_FALSE(t.widened);
    CHECK(t.at(eps.start, 0).at(0).points == std::set<Effect>{{0, 0}});
    auto up = effect_fixpoint(parse_grammar("S -> $1.lock() S | eps ;"), d, 8);
    CHECK(up.widened);
}

TEST_CASE("proofs and refutations") {
    auto d = compile_spec_to_dpda(spec("lock"));
    auto eps = parse_grammar("S -> eps ;");
    CHECK(prove_inclusion(eps, d).proved);
    CHECK(inclusion_check(eps, d, 8).kind == InclusionResult::Included);
    auto dyck = parse_grammar("S -> eps | $1.lock() S $1.unlock() S ;");
    CHECK(prove_inclusion(dyck, d).proved);
    auto bad = parse_grammar("S -> eps | $1.lock() S $1.unlock() S | $1.lock() S $1.unlock() $1.unlock() ;");
    CHECK_FALSE(prove_inclusion(bad, d).proved);
    auto r = inclusion_check(bad, d, 8);
    REQUIRE(r.kind == InclusionResult::Counterexample);
    CHECK(bad.word_string(r.word) == "$1.lock() $1.unlock() $1.unlock()");
    CHECK(yield(bad, r.derivation) == r.word);

    auto js = compile_spec_to_dpda(spec("json"));
    auto jp = prove_inclusion(spec("json").grammar(), js);
    CHECK_FALSE(jp.proved);
    CHECK(jp.reason.find("stack symbol") != std::string::npos);

    // widened sets still prove prefix dominance
    auto canvas = compile_spec_to_dpda(spec("canvas"));
    auto saves = parse_grammar("S -> $1.save() S | $1.save() S $1.restore() | eps ;");
    auto p = prove_inclusion(saves, canvas);
    CHECK(p.proved);
    auto wifi = spec("wifi");
    auto wd = compile_spec_to_dpda(wifi);
    CHECK(prove_inclusion(wifi.grammar(), wd).proved);
    CHECK(prove_inclusion(spec("canvas").grammar(), canvas).proved);
    CHECK(prove_inclusion(spec("relock").grammar(), compile_spec_to_dpda(spec("relock"))).proved);
}

TEST_CASE("initial running-example grammar is refuted by a lone lock") {
    auto s = spec("lock");
    auto P = build_initial(prepare(parse_program(src("corpus/lock/running-ok.cfp")), s), &s);
    BuiltinSolver solver;
    auto G = construct_cfg(P, solver);
    auto d = compile_spec_to_dpda(s);
    auto r = refute_inclusion(G.g, d, 4);
    REQUIRE(r);
    CHECK(G.g.word_string(r->word) == "$1.lock()");
    CHECK(derivation_valid(G.g, r->derivation, G.g.start));
    auto t = effect_fixpoint(G.g, d);
    const auto& row = t.at(G.g.start, 0);
    REQUIRE(row.count(0));
    CHECK(row.at(0).contains({0, 1}));
    CHECK(row.at(0).contains({-1, -1}));
}

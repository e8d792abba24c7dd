#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "cfproto/frontend.hpp"
#include "cfproto/grammar.hpp"

namespace cfproto {

struct DpdaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CannotCompile : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// real-time deterministic pushdown automaton; stack symbol 0 is the bottom marker
struct Dpda {
    enum OpKind { Nop, Push, Pop };
    struct Move {
        int to = -1;
        OpKind op = Nop;
        int sym = -1;  // Push
    };
    static constexpr int kAny = -1;

    std::string name;
    std::vector<std::string> states;
    int initial = 0;
    std::vector<std::string> stack{"BOT"};
    std::vector<std::string> alphabet;
    std::map<std::tuple<int, int, int>, Move> delta;  // (state, letter, top or kAny)
    std::set<std::pair<int, int>> accept;              // (state, top or kAny)

    int state(const std::string& n);   // find or add
    int letter(const std::string& n);  // find or add
    int symbol(const std::string& n);  // find or add
    std::optional<int> find_letter(const std::string& n) const;
    void on(int q, int a, int top, Move m);  // throws DpdaError on a clash
    const Move* move(int q, int a, int top) const;
    bool accepting(int q, int top) const;
    bool one_counter() const { return stack.size() == 2; }

    bool accepts(const std::vector<std::string>& word) const;
    std::string to_text() const;
};

// user-supplied machine; bare method names resolve through the protocol's terminals
Dpda parse_dpda(const std::string& text, const SpecProtocol* spec = nullptr);

// built-in templates, each checked against the protocol grammar up to `check_len`
Dpda compile_spec_to_dpda(const SpecProtocol& spec, int check_len = 8);

// accepted words of length <= n, as letter names, in length-lexicographic order of letter ids
std::vector<std::vector<std::string>> dpda_words(const Dpda& d, int n);

// L(d) and L(g) agree on every word of length <= n (g terminals matched by name)
bool dpda_agrees(const Dpda& d, const Grammar& g, int n, std::string* mismatch = nullptr);

bool dpda_accepts(const Dpda& d, const Grammar& g, const Word& w);

// ---------------------------------------------------------------- counter effects

struct Effect {
    std::int64_t m = 0;  // least relative counter value along the word (<= 0)
    std::int64_t n = 0;  // net change
    auto operator<=>(const Effect&) const = default;
};
Effect effect_compose(const Effect& a, const Effect& b);

inline constexpr std::int64_t kInf = INT64_MAX / 4;

// exact point set, or after widening the box {m >= mlo, nlo <= n <= nhi} (upward closed in m)
struct EffectSet {
    std::set<Effect> points;
    bool widened = false;
    std::int64_t mlo = 0, nlo = 0, nhi = 0;
    bool empty() const { return widened ? nlo > nhi : points.empty(); }
    bool contains(const Effect& e) const;
    std::string str() const;
};

struct EffectTable {
    bool uniform = true;  // every move ignores the stack top except for underflow
    bool widened = false;
    int rounds = 0;
    int reject = -1;  // sink state index (one past the machine's states)
    // (nonterminal, from state) -> to state -> effects
    std::map<std::pair<int, int>, std::map<int, EffectSet>> sets;
    const std::map<int, EffectSet>& at(int nt, int q) const;
};

// letter-by-letter effect of a word from `from`; reject sink when a move is missing
std::pair<int, Effect> word_effect(const Dpda& d, const Grammar& g, const Word& w, int from = 0);

EffectTable effect_fixpoint(const Grammar& g, const Dpda& d, int max_rounds = 64, std::size_t max_points = 512);

struct ProofResult {
    bool proved = false;
    bool widened = false;
    std::string reason;
};
ProofResult prove_inclusion(const Grammar& g, const Dpda& d);

struct Refutation {
    Word word;
    Derivation derivation;
};
std::optional<Refutation> refute_inclusion(const Grammar& g, const Dpda& d, int bound, bool* truncated = nullptr);

struct InclusionResult {
    enum Kind { Included, Counterexample, Unknown } kind = Unknown;
    Word word;
    Derivation derivation;
    std::string reason;
    bool widened = false;
};
InclusionResult inclusion_check(const Grammar& g, const Dpda& d, int bound, bool prove = true);

}  // namespace cfproto

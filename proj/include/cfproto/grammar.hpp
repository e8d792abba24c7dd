#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cfproto {

using Word = std::vector<int>;  // terminal symbol ids

struct Production {
    int lhs = -1;
    std::vector<int> rhs;
    int provenance = -1;  // PCFA edge id, -1 if none
    int rule = 0;         // construction rule tag (abstraction module), 0 if unused
};

class Grammar {
public:
    int terminal(const std::string& name);     // find or add
    int nonterminal(const std::string& name);  // find or add
    std::optional<int> find(const std::string& name) const;
    int add(int lhs, std::vector<int> rhs, int provenance = -1, int rule = 0);

    bool is_terminal(int s) const { return is_term_[s]; }
    const std::string& name(int s) const { return names_[s]; }
    int num_symbols() const { return static_cast<int>(names_.size()); }
    std::vector<int> terminals() const;
    std::vector<int> nonterminals() const;

    std::vector<Production> prods;
    int start = -1;

    std::string word_string(const Word& w) const;
    std::string to_text(bool with_provenance = false) const;

private:
    std::vector<std::string> names_;
    std::vector<bool> is_term_;
    std::map<std::string, int> index_;
};

// Derivation tree in a grammar: kids follow the nonterminal positions of the rhs.
struct Derivation {
    int prod = -1;
    std::vector<Derivation> kids;
};

Word yield(const Grammar& g, const Derivation& d);
// leftmost sequence of production indices
std::vector<int> leftmost(const Derivation& d);
bool derivation_valid(const Grammar& g, const Derivation& d, int root);

// ---------------------------------------------------------------- CNF

struct CnfRule {
    enum Kind { Binary, Terminal, Epsilon } kind = Binary;
    int lhs = -1;
    int a = -1, b = -1;  // Binary: nonterminals a b; Terminal: terminal id in a
};

// How to rebuild original derivation pieces from a CNF rule application.
struct CnfBack {
    enum Kind { Full, Suffix, Wrap, Eps } kind = Full;
    std::vector<std::pair<int, unsigned>> units;  // unit chain (orig prod, erased mask), outermost first
    int prod = -1;                                // base original production
    unsigned mask = 0;                            // erased (nullable) rhs positions of prod
};

struct CnfGrammar {
    int num_nt = 0;       // CNF nonterminals 0..num_nt-1
    int start = -1;
    std::vector<CnfRule> rules;
    std::vector<CnfBack> back;
    std::vector<std::string> nt_names;
    std::vector<int> nt_origin;  // original nonterminal id or -1 for helper symbols
};

struct CnfConversion {
    CnfGrammar cnf;
    std::vector<std::optional<Derivation>> eps_tree;  // per original symbol: a derivation of epsilon
};

CnfConversion to_cnf(const Grammar& g);

struct CnfParse {
    int rule = -1;
    std::vector<CnfParse> kids;
};

std::optional<CnfParse> cyk_member(const CnfConversion& c, const Word& w);
Derivation cnf_parse_to_derivation(const Grammar& g, const CnfConversion& c, const CnfParse& p);
// convenience: membership with original derivation
std::optional<Derivation> parse(const Grammar& g, const CnfConversion& c, const Word& w);

// ---------------------------------------------------------------- analyses

std::vector<bool> generating(const Grammar& g);
std::vector<bool> nullable(const Grammar& g);
bool is_empty(const Grammar& g);
std::optional<Word> shortest_word(const Grammar& g, int sym);
std::optional<Derivation> shortest_derivation(const Grammar& g, int sym);

struct Enumeration {
    std::vector<Word> words;  // nondecreasing length, then lexicographic by terminal id
    bool truncated = false;   // word cap reached
};
// all words of L(G) up to max_len; derivations on demand via parse()
Enumeration enumerate_words(const Grammar& g, const CnfConversion& c, int max_len, std::size_t cap = 2'000'000);
Enumeration enumerate_words(const Grammar& g, int max_len, std::size_t cap = 2'000'000);

// all words of length exactly n over the given terminals, lexicographic
std::vector<Word> all_words(const std::vector<int>& alphabet, int n);

}  // namespace cfproto

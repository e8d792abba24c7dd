#pragma once

#include <functional>
#include <map>
#include <set>
#include <tuple>
#include <string>
#include <vector>

#include "cfproto/grammar.hpp"
#include "cfproto/pcfa.hpp"
#include "cfproto/solver.hpp"

namespace cfproto {

struct SymbolInfo {
    enum Kind { Terminal, State, Clone, Start } kind = Terminal;
    std::string method;
    int state = -1;  // State
    int exit = -1;   // State, Clone: exit state of the clone
};

// production rule tags
enum GrammarRule { RuleStmt = 1, RuleApi = 2, RuleCall = 3, RuleEntry = 4, RuleExit = 5, RuleStart = 6 };

struct ProdInfo {
    int rule = 0;
    std::string method;
    int exit = -1;
    std::vector<PEdge> steps;  // PCFA edges covered, in order; the production's own edge first
    std::string callee;        // RuleCall
    int callee_exit = -1;
};

struct ProgramGrammar {
    Grammar g;
    std::vector<SymbolInfo> sym;  // by symbol id
    std::vector<ProdInfo> prod;   // by production index
    std::map<std::pair<std::string, int>, int> clone_symbol;  // (method, exit state) -> symbol

    int add(int lhs, std::vector<int> rhs, ProdInfo info);
    int state_symbol(const ProgramPcfa& P, const std::string& m, int state, int exit);
    int clone(const ProgramPcfa& P, const std::string& m, int exit);
    std::string to_text() const;  // productions with provenance comments
};

struct AbstractionStats {
    int clone_checks = 0;
    int clone_pruned = 0;
};

// Θ = all (method, exit state) pairs; the start is main's clone (fresh START when main has several)
ProgramGrammar construct_cfg(const ProgramPcfa& P, Solver& s, AbstractionStats* stats = nullptr);
// contributions of one clone
void gen_grammar(ProgramGrammar& G, const ProgramPcfa& P, const std::string& m, int exit, Solver& s,
                 std::map<std::tuple<int, int, std::string, int>, bool>& memo, AbstractionStats* stats = nullptr);

// states of m that reach `exit`
std::set<int> backward_reachable(const Pcfa& A, int exit);

// contract nonterminals whose only production is a single unit statement step
ProgramGrammar compact(const ProgramGrammar& G);

}  // namespace cfproto

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cfproto/ast.hpp"
#include "cfproto/formula.hpp"
#include "cfproto/frontend.hpp"
#include "cfproto/solver.hpp"

namespace cfproto {

// atomic statement labelling a CFA edge
struct Atom {
    enum Kind { Skip, Assign, Store, Assume, New, Call, Api } kind = Skip;
    std::string var;    // Assign/New target, Store base, Api receiver
    std::string field;  // Store
    std::string name;   // New: class; Call/Api: method
    ast::Exp e;         // Assign/Store rhs
    ast::Pred p;        // Assume
    bool neg = false;   // Assume(!p)
    std::vector<ast::Exp> args;  // Call: actuals (display); Api: arguments
    std::string terminal;        // Api: terminal name
    bool bind = false;           // formal-to-actual slot assignment
    bool prelude = false;        // ghost binding at method entry
    ast::Loc loc;
    std::string str() const;
};

struct CfaEdge {
    int id = -1;  // program-wide label
    int src = -1, dst = -1;  // location ids
    Atom atom;
};

struct PState {
    int id = -1;
    int loc = -1;
    Expr pred;
};

struct PEdge {
    int src = -1, label = -1, dst = -1;
    auto operator<=>(const PEdge&) const = default;
};

struct Pcfa {
    std::string method;
    int entry_loc = -1, exit_loc = -1;
    std::vector<int> locs;
    std::vector<CfaEdge> cfa;
    std::map<int, PState> states;
    std::set<PEdge> edges;

    std::vector<int> states_at(int loc) const;
    std::vector<int> entry_states() const { return states_at(entry_loc); }
    std::vector<int> exit_states() const { return states_at(exit_loc); }
    const CfaEdge& edge(int label) const;
};

struct LocInfo {
    std::string method;
    int index = 0;
    std::string label() const { return method + "." + std::to_string(index); }
};

struct MethodInfo {
    std::vector<std::string> params;
    std::vector<std::pair<std::string, std::string>> ghosts;  // (ghost, param)
    std::vector<std::string> global_ghosts;                   // globals g with a `g@in` ghost
    std::set<std::string> modset;                              // globals written (transitively)
};

struct ProgramPcfa {
    ast::Program prog;
    std::string entry;
    std::vector<std::string> order;  // methods in declaration order
    std::map<std::string, Pcfa> methods;
    std::map<std::string, MethodInfo> info;
    std::set<std::string> statics;
    std::vector<LocInfo> locs;
    std::map<int, std::pair<std::string, int>> label_index;  // label -> (method, position in cfa)
    int next_state = 0;

    const Pcfa& at(const std::string& m) const { return methods.at(m); }
    const PState& state(const std::string& m, int id) const { return methods.at(m).states.at(id); }
    const CfaEdge& edge(int label) const;
    std::string method_of_loc(int loc) const { return locs.at(loc).method; }
    std::string state_label(const std::string& m, int id) const;
    std::size_t num_states() const;
    std::size_t num_edges() const;
};

// ---- variable vocabulary
std::string heap_name(const std::string& field);  // array per field
inline const char* kAlloc = "@alloc";
std::string slot_name(const std::string& callee, const std::string& param);
std::string global_ghost(const std::string& g);  // g@in
bool is_array_var(const std::string& name);
// static field, heap array or allocation counter as seen from method m
bool is_global(const ProgramPcfa& P, const std::string& m, const std::string& x);

// ast -> formula with pluggable naming
struct Naming {
    std::function<Expr(const std::string&)> var;
    std::function<Expr(const std::string&)> heap;  // field -> array
    std::function<Expr()> fresh;
};
Expr exp_formula(const ast::Exp& e, const Naming& nm);
Expr pred_formula(const ast::Pred& p, bool neg, const Naming& nm);

// ---- operations
ProgramPcfa build_initial(const ast::Program& instrumented, const SpecProtocol* spec = nullptr);
std::vector<Expr> complete_cubes(const std::vector<Expr>& preds);
// pure cloning of the states at loc
std::map<int, PState> clone_states(const std::map<int, PState>& S, int loc, const std::vector<Expr>& cubes, int& next_id);

// transition relation: post-state names plain, pre-state values of modified names in `pre`
Expr transition(const ProgramPcfa& P, const std::string& m, const Atom& a, std::map<std::string, Expr>& pre, int& fresh);
bool edge_feasible(const ProgramPcfa& P, const std::string& m, const Expr& pre, const Atom& a, const Expr& post, Solver& s);
// call edge from s1 to the return site s2: only callee-modified globals may change
bool call_edge_feasible(const ProgramPcfa& P, const std::string& callee, const Expr& pre, const Expr& post, Solver& s);
// caller pre-call predicate, return-site predicate, callee exit predicate renamed into the caller frame
Expr call_clone_formula(const ProgramPcfa& P, const std::string& caller, const std::string& callee, const Expr& pre,
                        const Expr& post, const Expr& exit);
bool call_clone_feasible(const ProgramPcfa& P, const std::string& caller, const std::string& callee, const Expr& pre,
                         const Expr& post, const Expr& exit, Solver& s);

void update_transitions(ProgramPcfa& P, const std::string& m, int loc, const std::set<PEdge>& touching, Solver& s);

struct RefineStats {
    int cloned = 0;   // new states created
    int dropped = 0;  // clones with unsatisfiable predicate
    int capped = 0;   // predicates discarded by the cube cap
};
ProgramPcfa refine(const ProgramPcfa& P, const std::map<int, std::vector<Expr>>& psi, Solver& s, int cap = 6,
                   RefineStats* stats = nullptr);

std::string dump(const ProgramPcfa& P);
std::string dump_dot(const ProgramPcfa& P);

}  // namespace cfproto

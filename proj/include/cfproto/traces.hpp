#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cfproto/abstraction.hpp"
#include "cfproto/grammar.hpp"
#include "cfproto/pcfa.hpp"

namespace cfproto {

// One position of a nested trace.  Call and Return steps both carry the caller's call edge.
struct TraceStep {
    enum Kind { Stmt, Call, Return } kind = Stmt;
    std::string method;  // Stmt: owner; Call/Return: caller
    int label = -1;      // CFA edge label
    Atom atom;
};

// states[k] is the PCFA state before steps[k]; states has one more entry than steps.
// A call at i enters the callee at states[i+1]; its return at j leaves the callee exit states[j]
// and lands on the return site states[j+1].
struct NestedTrace {
    std::vector<TraceStep> steps;
    std::vector<int> states;
    std::vector<std::string> state_method;
    std::vector<int> match;  // partner index for Call/Return, -1 otherwise

    std::size_t size() const { return steps.size(); }
    std::string str(const ProgramPcfa& P) const;
    std::vector<int> labels() const;
};

struct DerivationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// walk a derivation of G (rooted at its start) into the nested trace it spells
NestedTrace derivation_to_path(const ProgramGrammar& G, const ProgramPcfa& P, const Derivation& d);

// Word of api terminals along the trace, as symbols of G
Word trace_word(const ProgramGrammar& G, const NestedTrace& t);

// P-feasibility of the given state sequence (edges exist, calls pair entry/exit, clone check holds)
bool p_feasible(const ProgramPcfa& P, const NestedTrace& t, Solver& s, std::string* why = nullptr);
// some state sequence of P follows the trace's statements and nesting and is P-feasible
bool p_feasible_any(const ProgramPcfa& P, const NestedTrace& t, Solver& s);

}  // namespace cfproto

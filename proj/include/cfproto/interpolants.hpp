#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cfproto/formula.hpp"
#include "cfproto/solver.hpp"
#include "cfproto/traces.hpp"

namespace cfproto {

// SSA names: locals x~F~V (frame F, version V), globals g~V, nondeterminism *~k.
struct SsaTrace {
    std::vector<Expr> cons;         // one constraint per step; Return steps hold the frame links
    std::vector<bool> relaxable;    // plain assignments, stores, allocations, assumptions
    std::vector<std::string> text;  // rendering per step
    std::vector<int> frame;         // per position
    std::vector<std::map<std::string, int>> local_ver;   // per position, current frame
    std::vector<std::map<std::string, int>> global_ver;  // per position

    bool in_scope(std::size_t k, const std::string& ssa_name) const;
    Expr formula() const { return mk_and(cons); }
};

SsaTrace to_ssa(const ProgramPcfa& P, const NestedTrace& t);

std::string unversion(const std::string& ssa_name);
Expr unversion(const Expr& e);

// strongest postcondition of an SSA constraint
inline Expr sp(const Expr& constraint, const Expr& pre) { return mk_and(pre, constraint); }

SatResult feasible_trace(const SsaTrace& t, Solver& s);

// ∃ over every variable not accepted by keep; exact for unit equalities and array stores,
// Fourier-Motzkin for the remaining linear bounds, dropping what is left (weaker result)
Expr project(const Expr& f, const std::function<bool(const std::string&)>& keep);

struct Interpolants {
    std::vector<Expr> versioned;  // I_0..I_{n+1} over SSA names
    std::vector<Expr> plain;      // same with versions stripped
    std::vector<bool> relaxed;    // steps whose constraint was not needed for infeasibility
};

// nullopt when the trace is feasible; throws SolverError when the final interpolant is not false
std::optional<Interpolants> nested_interpolants(const NestedTrace& t, const SsaTrace& ssa, Solver& s);

bool check_interpolant_contract(const NestedTrace& t, const SsaTrace& ssa, const std::vector<Expr>& I, Solver& s,
                                std::string* why = nullptr);

}  // namespace cfproto

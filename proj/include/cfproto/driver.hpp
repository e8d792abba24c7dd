#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cfproto/abstraction.hpp"
#include "cfproto/inclusion.hpp"
#include "cfproto/interp.hpp"
#include "cfproto/pcfa.hpp"
#include "cfproto/traces.hpp"

namespace cfproto {

struct Config {
    int max_iters = 50;
    int bound = 8;
    std::string solver = "builtin";
    bool compact_grammar = false;
    bool prove = true;  // false: bounded refutation only
    int jobs = 1;
    int refine_cap = 6;
    std::set<std::string> emit;  // pcfa, grammar, trace, instrumented
    std::ostream* emit_out = nullptr;
    std::uint64_t seed = 0;
    std::optional<Dpda> dpda;  // overrides the built-in templates
    std::string source;        // program text, for trace rendering

    // property checks
    bool check_progress = true;      // previous spurious trace is not feasible in the refined PCFA
    bool check_soundness = false;    // every bounded execution's word is derivable in the abstraction
    bool check_interpolants = true;  // interpolant contract on every refinement
    bool keep_grammars = false;      // record every iteration's grammar and counterexample
    InterpConfig interp;
};

struct IterationLog {
    int iter = 0;
    std::string outcome;  // spurious, feasible, included, unknown
    std::string word;
    std::size_t psi_locations = 0, psi_predicates = 0;
    std::size_t pcfa_states = 0, pcfa_edges = 0, productions = 0;
    RefineStats refine;
    int bound = 0;
    bool widened = false;
    double seconds = 0;
};

struct KeptGrammar {
    Grammar g;
    std::optional<Word> counterexample;
};

struct Verdict {
    enum Kind { Verified, Violation, Unknown } kind = Unknown;
    std::string reason;  // Unknown: bound-exhausted, widened, iteration-cap, backend-failure
    std::string detail;
    std::string word;    // Violation
    NestedTrace trace;   // Violation
    std::map<std::string, std::int64_t> model;
    std::vector<std::string> trace_lines;  // rendered trace
    std::vector<IterationLog> log;
    std::vector<std::string> spurious_words;

    // property check tallies
    int progress_checks = 0, progress_violations = 0;
    int soundness_checks = 0, soundness_violations = 0;
    int interpolant_checks = 0, interpolant_failures = 0;

    std::vector<KeptGrammar> grammars;  // keep_grammars

    ast::Program instrumented;
    ProgramPcfa final_pcfa;
    std::string final_grammar;
    double seconds = 0;
};

// Ψ: location -> conjuncts of the interpolants at positions whose state sits there
std::map<int, std::vector<Expr>> group_by_location(const ProgramPcfa& P, const NestedTrace& t,
                                                   const std::vector<Expr>& I);

Verdict verify(const ast::Program& program, const SpecProtocol& spec, const Config& cfg = {});

// chooser answers that drive the interpreter along a feasible trace
std::vector<std::int64_t> replay_script(const ProgramPcfa& P, const NestedTrace& t, const std::map<std::string, std::int64_t>& model);

// word of G_P terminals spelled by an execution of the instrumented program
std::optional<Word> execution_word(const Execution& e, const Grammar& g);

std::string render_trace(const NestedTrace& t, const ProgramPcfa& P, const std::string& source = "");
std::string render_report(const Verdict& v, const std::set<std::string>& emit = {});

int exit_code(const Verdict& v);

}  // namespace cfproto

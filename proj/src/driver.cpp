#include "cfproto/driver.hpp"

#include <chrono>
#include <iomanip>
#include <map>
#include <regex>
#include <ostream>
#include <sstream>

#include "cfproto/instrument.hpp"
#include "cfproto/interpolants.hpp"

namespace cfproto {

namespace {

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

int stars(const ast::Exp& e) {
    int n = e.kind == ast::Exp::Star;
    for (auto& k : e.kids) n += stars(k);
    return n;
}
int stars(const ast::Pred& p) {
    int n = 0;
    for (auto& e : p.es) n += stars(e);
    for (auto& q : p.ps) n += stars(q);
    return n;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::map<int, std::vector<Expr>> group_by_location(const ProgramPcfa& P, const NestedTrace& t, const std::vector<Expr>& I) {
    if (I.size() != t.states.size()) throw std::invalid_argument("interpolant count does not match the trace");
    std::map<int, std::vector<Expr>> psi;
    std::map<int, ExprSet> seen;
    for (size_t k = 0; k < I.size(); ++k) {
        int loc = P.state(t.state_method[k], t.states[k]).loc;
        for (auto& c : conjuncts(I[k])) {
            Expr n = normalize(c);
            if (is_true(n) || is_false(n)) continue;
            if (seen[loc].insert(n).second) psi[loc].push_back(n);
        }
    }
    return psi;
}

std::vector<std::int64_t> replay_script(const ProgramPcfa& P, const NestedTrace& t,
                                        const std::map<std::string, std::int64_t>& model) {
    std::vector<std::int64_t> out;
    int k = 0;
    auto value = [&](int n) {
        for (int i = 0; i < n; ++i) {
            auto it = model.find("*~" + std::to_string(k++));
            out.push_back(it == model.end() ? 0 : it->second);
        }
    };
    for (auto& st : t.steps) {
        if (st.kind != TraceStep::Stmt) continue;
        const Atom& a = st.atom;
        switch (a.kind) {
            case Atom::Assign:
            case Atom::Store: value(stars(a.e)); break;
            case Atom::Assume:
                if (a.p.is_star()) out.push_back(a.neg ? 0 : 1);
                else value(stars(a.p));
                break;
            case Atom::New:
                if (auto* c = P.prog.cls(a.name))
                    for (auto& f : c->fields)
                        if (!f.is_static) value(stars(f.init));
                break;
            default: break;
        }
    }
    return out;
}

namespace {
// boolean literals print as integers at run time
std::string canonical_call(const std::string& t) {
    static const std::regex lit("\\btrue\\b|\\bfalse\\b");
    std::string out;
    auto it = std::sregex_iterator(t.begin(), t.end(), lit);
    std::size_t at = 0;
    for (; it != std::sregex_iterator(); ++it) {
        out += t.substr(at, it->position() - at);
        out += it->str() == "true" ? "1" : "0";
        at = it->position() + it->length();
    }
    return out + t.substr(at);
}
}  // namespace

std::optional<Word> execution_word(const Execution& e, const Grammar& g) {
    std::map<std::string, int> terms;
    for (int t : g.terminals()) terms.emplace(canonical_call(g.name(t)), t);
    Word w;
    for (auto& ev : e.events) {
        auto it = terms.find(canonical_call(ev.symbolic));
        if (it == terms.end()) return std::nullopt;
        w.push_back(it->second);
    }
    return w;
}

std::string render_trace(const NestedTrace& t, const ProgramPcfa& P, const std::string& source) {
    std::vector<std::string> lines;
    {
        std::istringstream is(source);
        for (std::string l; std::getline(is, l);) lines.push_back(l);
    }
    auto src = [&](int line) -> std::string {
        if (line <= 0 || line > static_cast<int>(lines.size())) return "";
        std::string l = lines[line - 1];
        auto b = l.find_first_not_of(" \t");
        return b == std::string::npos ? "" : l.substr(b);
    };
    std::ostringstream os;
    int depth = 0;
    for (size_t k = 0; k < t.steps.size(); ++k) {
        const auto& st = t.steps[k];
        if (st.kind == TraceStep::Return) --depth;
        std::string pad(2 * depth, ' ');
        std::string at = st.atom.loc.line > 0 ? std::to_string(st.atom.loc.line) : "-";
        os << std::setw(4) << at << "  " << pad;
        switch (st.kind) {
            case TraceStep::Stmt: os << st.atom.str(); break;
            case TraceStep::Call: os << "↝ " << st.atom.name << " ["; break;
            case TraceStep::Return: os << "] " << st.atom.name << " ↝ " << st.method; break;
        }
        os << "    <" << P.state_label(t.state_method[k + 1], t.states[k + 1]) << ">";
        if (st.kind != TraceStep::Return) {
            auto s = src(st.atom.loc.line);
            if (!s.empty() && !st.atom.prelude) os << "    // " << s;
        }
        os << "\n";
        if (st.kind == TraceStep::Call) ++depth;
    }
    return os.str();
}

Verdict verify(const ast::Program& program, const SpecProtocol& spec, const Config& cfg) {
    auto t0 = Clock::now();
    Verdict v;
    auto solver = std::make_shared<CachedSolver>(make_solver(cfg.solver));
    Solver& s = *solver;
    std::ostream* out = cfg.emit_out;
    auto emitting = [&](const char* what) { return out && cfg.emit.count(what); };

    v.instrumented = prepare(program, spec);
    if (emitting("instrumented")) *out << "# instrumented\n" << to_source(v.instrumented) << "\n";
    Dpda d = cfg.dpda ? *cfg.dpda : compile_spec_to_dpda(spec);
    ProgramPcfa P = build_initial(v.instrumented, &spec);

    std::optional<Enumerated> runs;
    std::optional<NestedTrace> prev;
    try {
        for (int iter = 1; iter <= cfg.max_iters; ++iter) {
            auto ti = Clock::now();
            IterationLog L;
            L.iter = iter;
            L.pcfa_states = P.num_states();
            L.pcfa_edges = P.num_edges();
            if (prev && cfg.check_progress) {
                ++v.progress_checks;
                if (p_feasible_any(P, *prev, s)) ++v.progress_violations;
            }
            ProgramGrammar G = construct_cfg(P, s);
            if (cfg.compact_grammar) G = compact(G);
            L.productions = G.g.prods.size();
            if (emitting("pcfa")) *out << "# pcfa, iteration " << iter << "\n" << dump(P) << "\n";
            if (emitting("grammar")) *out << "# grammar, iteration " << iter << "\n" << G.to_text() << "\n";

            if (cfg.check_soundness) {
                if (!runs) runs = all_executions(v.instrumented, cfg.interp);
                auto cnf = to_cnf(G.g);
                for (auto& e : runs->runs) {
                    ++v.soundness_checks;
                    auto w = execution_word(e, G.g);
                    if (!w || !cyk_member(cnf, *w)) ++v.soundness_violations;
                }
            }

            int B = cfg.bound;
            auto r = inclusion_check(G.g, d, B, cfg.prove);
            if (r.kind == InclusionResult::Unknown) {
                B *= 2;
                r = inclusion_check(G.g, d, B, cfg.prove);
            }
            L.bound = B;
            L.widened = r.widened;
            v.final_grammar = G.to_text();

            if (cfg.keep_grammars && r.kind != InclusionResult::Counterexample) v.grammars.push_back({G.g, std::nullopt});
            if (r.kind == InclusionResult::Included) {
                L.outcome = "included";
                L.seconds = since(ti);
                v.log.push_back(L);
                v.kind = Verdict::Verified;
                break;
            }
            if (r.kind == InclusionResult::Unknown) {
                L.outcome = "unknown";
                L.seconds = since(ti);
                v.log.push_back(L);
                v.kind = Verdict::Unknown;
                v.reason = r.widened ? "widened" : "bound-exhausted";
                v.detail = r.reason;
                break;
            }

            L.word = G.g.word_string(r.word);
            if (cfg.keep_grammars) v.grammars.push_back({G.g, r.word});
            NestedTrace trace = derivation_to_path(G, P, r.derivation);
            SsaTrace ssa = to_ssa(P, trace);
            SatResult sat = feasible_trace(ssa, s);
            if (sat.status == SatResult::Unknown) throw SolverError("trace feasibility undecided: " + sat.reason);
            if (sat.sat()) {
                L.outcome = "feasible";
                L.seconds = since(ti);
                v.log.push_back(L);
                v.kind = Verdict::Violation;
                v.word = L.word;
                v.trace = trace;
                v.model = sat.model;
                v.trace_lines.clear();
                std::istringstream is(render_trace(trace, P, cfg.source));
                for (std::string l; std::getline(is, l);) v.trace_lines.push_back(l);
                if (emitting("trace")) *out << "# counterexample trace\n" << render_trace(trace, P, cfg.source) << "\n";
                break;
            }
            auto I = nested_interpolants(trace, ssa, s);
            if (!I) throw SolverError("no interpolants for an infeasible trace");
            if (cfg.check_interpolants) {
                ++v.interpolant_checks;
                if (!check_interpolant_contract(trace, ssa, I->versioned, s)) ++v.interpolant_failures;
            }
            auto psi = group_by_location(P, trace, I->plain);
            L.psi_locations = psi.size();
            for (auto& [loc, fs] : psi) L.psi_predicates += fs.size();
            if (emitting("psi")) {
                *out << "# psi, iteration " << iter << "\n";
                for (auto& [loc, fs] : psi)
                    for (auto& f : fs) *out << "  " << loc << ": " << to_string(f) << "\n";
            }
            if (emitting("trace")) *out << "# spurious trace, iteration " << iter << "\n" << render_trace(trace, P, cfg.source) << "\n";
            P = refine(P, psi, s, cfg.refine_cap, &L.refine);
            prev = trace;
            L.outcome = "spurious";
            L.seconds = since(ti);
            v.spurious_words.push_back(L.word);
            v.log.push_back(L);
            if (iter == cfg.max_iters) {
                v.kind = Verdict::Unknown;
                v.reason = "iteration-cap";
            }
        }
        if (cfg.max_iters <= 0) {
            v.kind = Verdict::Unknown;
            v.reason = "iteration-cap";
        }
    } catch (const SolverError& e) {
        v.kind = Verdict::Unknown;
        v.reason = "backend-failure";
        v.detail = e.what();
    }
    v.final_pcfa = P;
    v.seconds = since(t0);
    return v;
}

std::string render_report(const Verdict& v, const std::set<std::string>& emit) {
    std::ostringstream os;
    const char* kind[] = {"Verified", "Violation", "Unknown"};
    os << "verdict: " << kind[v.kind] << "\n";
    if (v.kind == Verdict::Unknown) {
        os << "reason: " << v.reason << "\n";
        if (!v.detail.empty()) os << "detail: " << quote(v.detail) << "\n";
    }
    os << "iterations: " << v.log.size() << "\n";
    os << "seconds: " << std::fixed << std::setprecision(3) << v.seconds << "\n";
    if (v.kind == Verdict::Violation) os << "word: " << quote(v.word) << "\n";
    os << "spurious_words:";
    if (v.spurious_words.empty()) os << " []";
    os << "\n";
    for (auto& w : v.spurious_words) os << "  - " << quote(w) << "\n";
    os << "checks:\n";
    os << "  progress: " << v.progress_checks - v.progress_violations << "/" << v.progress_checks << "\n";
    if (v.soundness_checks) os << "  soundness: " << v.soundness_checks - v.soundness_violations << "/" << v.soundness_checks << "\n";
    os << "  interpolants: " << v.interpolant_checks - v.interpolant_failures << "/" << v.interpolant_checks << "\n";
    os << "log:\n";
    for (auto& L : v.log) {
        os << "  - iter: " << L.iter << "\n";
        os << "    outcome: " << L.outcome << "\n";
        if (!L.word.empty()) os << "    word: " << quote(L.word) << "\n";
        os << "    pcfa: {states: " << L.pcfa_states << ", edges: " << L.pcfa_edges << "}\n";
        os << "    productions: " << L.productions << "\n";
        os << "    bound: " << L.bound << "\n";
        if (L.outcome == "spurious") {
            os << "    psi: {locations: " << L.psi_locations << ", predicates: " << L.psi_predicates << "}\n";
            os << "    refine: {cloned: " << L.refine.cloned << ", dropped: " << L.refine.dropped
               << ", capped: " << L.refine.capped << "}\n";
        }
        if (L.widened) os << "    widened: true\n";
        os << "    seconds: " << std::fixed << std::setprecision(3) << L.seconds << "\n";
    }
    if (v.kind == Verdict::Violation) {
        os << "model:\n";
        for (auto& [k, val] : v.model) os << "  " << quote(k) << ": " << val << "\n";
        os << "trace: |\n";
        for (auto& l : v.trace_lines) os << "  " << l << "\n";
    }
    if (emit.count("grammar") && !v.final_grammar.empty()) {
        os << "grammar: |\n";
        std::istringstream is(v.final_grammar);
        for (std::string l; std::getline(is, l);) os << "  " << l << "\n";
    }
    return os.str();
}

int exit_code(const Verdict& v) {
    switch (v.kind) {
        case Verdict::Verified: return 0;
        case Verdict::Violation: return 1;
        default: return 2;
    }
}

}  // namespace cfproto

#include "cfproto/traces.hpp"

#include <sstream>

namespace cfproto {

std::vector<int> NestedTrace::labels() const {
    std::vector<int> out;
    for (auto& s : steps) out.push_back(s.label);
    return out;
}

std::string NestedTrace::str(const ProgramPcfa& P) const {
    std::ostringstream os;
    int depth = 0;
    for (size_t k = 0; k <= steps.size(); ++k) {
        if (k < steps.size() && steps[k].kind == TraceStep::Return) --depth;
        os << std::string(2 * depth, ' ') << "[" << P.state_label(state_method[k], states[k]) << "]\n";
        if (k == steps.size()) break;
        const auto& st = steps[k];
        os << std::string(2 * depth, ' ');
        switch (st.kind) {
            case TraceStep::Stmt: os << st.atom.str(); break;
            case TraceStep::Call:
                os << "call " << st.atom.name << " {";
                ++depth;
                break;
            case TraceStep::Return: os << "} return " << st.atom.name; break;
        }
        if (st.atom.loc.line > 0) os << "    @" << st.atom.loc.line;
        os << "\n";
    }
    return os.str();
}

namespace {

struct Walker {
    const ProgramGrammar& G;
    const ProgramPcfa& P;
    NestedTrace t;

    const ProdInfo& info(const Derivation& d) {
        if (d.prod < 0 || d.prod >= static_cast<int>(G.prod.size())) throw DerivationError("bad production index");
        return G.prod[d.prod];
    }
    void push_state(const std::string& m, int s) {
        t.states.push_back(s);
        t.state_method.push_back(m);
    }
    void stmt(const std::string& m, const PEdge& e) {
        const CfaEdge& ce = P.edge(e.label);
        if (ce.atom.kind == Atom::Call) throw DerivationError("call edge outside a call production");
        t.steps.push_back({TraceStep::Stmt, m, e.label, ce.atom});
        t.match.push_back(-1);
        push_state(m, e.dst);
    }
    void tail(const ProdInfo& pi, size_t from) {
        for (size_t k = from; k < pi.steps.size(); ++k) stmt(pi.method, pi.steps[k]);
    }

    void clone(const Derivation& d) {
        const ProdInfo& pi = info(d);
        if (pi.rule != RuleEntry) throw DerivationError("clone symbol not expanded by an entry production");
        int S = G.g.prods[d.prod].rhs.at(0);
        const auto& entry = G.sym.at(S);
        // with compaction the entry production may carry a chain; its first step starts at the entry
        int first = pi.steps.empty() ? entry.state : pi.steps.front().src;
        push_state(pi.method, first);
        tail(pi, 0);
        state(d.kids.at(0));
    }

    void state(const Derivation& d) {
        const ProdInfo& pi = info(d);
        switch (pi.rule) {
            case RuleExit: return;
            case RuleStmt:
            case RuleApi:
                tail(pi, 0);
                state(d.kids.at(0));
                return;
            case RuleCall: {
                const PEdge& e = pi.steps.at(0);
                const CfaEdge& ce = P.edge(e.label);
                int i = static_cast<int>(t.steps.size());
                t.steps.push_back({TraceStep::Call, pi.method, e.label, ce.atom});
                t.match.push_back(-1);
                clone(d.kids.at(0));
                int j = static_cast<int>(t.steps.size());
                t.steps.push_back({TraceStep::Return, pi.method, e.label, ce.atom});
                t.match.push_back(i);
                t.match[i] = j;
                push_state(pi.method, e.dst);
                tail(pi, 1);
                state(d.kids.at(1));
                return;
            }
            default: throw DerivationError("unexpected production rule " + std::to_string(pi.rule));
        }
    }
};

}  // namespace

NestedTrace derivation_to_path(const ProgramGrammar& G, const ProgramPcfa& P, const Derivation& d) {
    Walker w{G, P, {}};
    const ProdInfo& pi = w.info(d);
    if (pi.rule == RuleStart)
        w.clone(d.kids.at(0));
    else
        w.clone(d);
    return w.t;
}

Word trace_word(const ProgramGrammar& G, const NestedTrace& t) {
    Word w;
    for (auto& s : t.steps)
        if (s.kind == TraceStep::Stmt && s.atom.kind == Atom::Api) {
            auto id = G.g.find(s.atom.terminal);
            w.push_back(id ? *id : -1);
        }
    return w;
}

bool p_feasible(const ProgramPcfa& P, const NestedTrace& t, Solver& s, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (t.states.size() != t.steps.size() + 1) return fail("state count");
    const Pcfa& main = P.at(P.entry);
    auto in = [](const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); };
    if (t.state_method.front() != P.entry || !in(main.entry_states(), t.states.front())) return fail("start is not a main entry");
    if (t.state_method.back() != P.entry || !in(main.exit_states(), t.states.back())) return fail("end is not a main exit");
    for (size_t k = 0; k < t.steps.size(); ++k) {
        const auto& st = t.steps[k];
        const Pcfa& A = P.at(st.method);
        switch (st.kind) {
            case TraceStep::Stmt:
                if (!A.edges.count({t.states[k], st.label, t.states[k + 1]}))
                    return fail("missing edge at position " + std::to_string(k));
                break;
            case TraceStep::Call: {
                int j = t.match[k];
                if (j < 0) return fail("unmatched call");
                const Pcfa& C = P.at(st.atom.name);
                if (!A.edges.count({t.states[k], st.label, t.states[j + 1]})) return fail("missing call edge");
                if (!in(C.entry_states(), t.states[k + 1])) return fail("call does not enter the callee");
                if (!in(C.exit_states(), t.states[j])) return fail("return does not leave the callee exit");
                if (!call_clone_feasible(P, st.method, st.atom.name, A.states.at(t.states[k]).pred,
                                         A.states.at(t.states[j + 1]).pred, C.states.at(t.states[j]).pred, s))
                    return fail("call/return predicates inconsistent at " + std::to_string(k));
                break;
            }
            case TraceStep::Return: break;
        }
    }
    return true;
}

namespace {

struct AnyRun {
    const ProgramPcfa& P;
    const NestedTrace& t;
    Solver& s;
    std::map<std::pair<int, int>, std::set<int>> memo;

    // states reachable at position `to` from state s0 at position `from`, same frame
    std::set<int> run(int from, int to, int s0) {
        auto key = std::make_pair(from, s0);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        std::set<int> cur{s0};
        int k = from;
        while (k < to && !cur.empty()) {
            const auto& st = t.steps[k];
            const Pcfa& A = P.at(st.method);
            std::set<int> next;
            if (st.kind == TraceStep::Stmt) {
                for (auto& e : A.edges)
                    if (e.label == st.label && cur.count(e.src)) next.insert(e.dst);
                ++k;
            } else {
                int j = t.match[k];
                const Pcfa& C = P.at(st.atom.name);
                std::set<int> exits;
                for (int e : C.entry_states()) {
                    auto r = run(k + 1, j, e);
                    exits.insert(r.begin(), r.end());
                }
                auto ex = C.exit_states();
                for (auto& e : A.edges) {
                    if (e.label != st.label || !cur.count(e.src) || next.count(e.dst)) continue;
                    for (int x : exits)
                        if (std::find(ex.begin(), ex.end(), x) != ex.end() &&
                            call_clone_feasible(P, st.method, st.atom.name, A.states.at(e.src).pred,
                                                A.states.at(e.dst).pred, C.states.at(x).pred, s)) {
                            next.insert(e.dst);
                            break;
                        }
                }
                k = j + 1;
            }
            cur = std::move(next);
        }
        memo[key] = cur;
        return cur;
    }
};

}  // namespace

bool p_feasible_any(const ProgramPcfa& P, const NestedTrace& t, Solver& s) {
    AnyRun r{P, t, s, {}};
    const Pcfa& main = P.at(P.entry);
    auto ex = main.exit_states();
    int n = static_cast<int>(t.steps.size());
    for (int e : main.entry_states())
        for (int x : r.run(0, n, e))
            if (std::find(ex.begin(), ex.end(), x) != ex.end()) return true;
    return false;
}

}  // namespace cfproto

#include "cfproto/abstraction.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace cfproto {

int ProgramGrammar::add(int lhs, std::vector<int> rhs, ProdInfo info) {
    int label = info.steps.empty() ? -1 : info.steps.front().label;
    int i = g.add(lhs, std::move(rhs), label, info.rule);
    prod.push_back(std::move(info));
    return i;
}

namespace {

int ensure(ProgramGrammar& G, int id, SymbolInfo info) {
    if (static_cast<int>(G.sym.size()) <= id) G.sym.resize(id + 1);
    G.sym[id] = std::move(info);
    return id;
}

}  // namespace

int ProgramGrammar::state_symbol(const ProgramPcfa& P, const std::string& m, int state, int exit) {
    std::string n = P.state_label(m, state) + "|" + P.state_label(m, exit);
    if (auto f = g.find(n)) return *f;
    return ensure(*this, g.nonterminal(n), {SymbolInfo::State, m, state, exit});
}

int ProgramGrammar::clone(const ProgramPcfa& P, const std::string& m, int exit) {
    auto key = std::make_pair(m, exit);
    if (auto it = clone_symbol.find(key); it != clone_symbol.end()) return it->second;
    int id = ensure(*this, g.nonterminal(m + "{" + P.state_label(m, exit) + "}"), {SymbolInfo::Clone, m, -1, exit});
    clone_symbol[key] = id;
    return id;
}

std::string ProgramGrammar::to_text() const {
    std::ostringstream os;
    os << "start: " << g.name(g.start) << ";\n";
    for (size_t i = 0; i < g.prods.size(); ++i) {
        auto& p = g.prods[i];
        os << g.name(p.lhs) << " ->";
        if (p.rhs.empty()) os << " eps";
        for (int s : p.rhs) os << " " << g.name(s);
        os << " ;  // rule " << prod[i].rule;
        if (!prod[i].steps.empty()) {
            os << " edge";
            for (auto& e : prod[i].steps) os << " " << e.label;
        }
        os << "\n";
    }
    return os.str();
}

std::set<int> backward_reachable(const Pcfa& A, int exit) {
    std::map<int, std::vector<int>> pred;
    for (auto& e : A.edges) pred[e.dst].push_back(e.src);
    std::set<int> seen{exit};
    std::vector<int> work{exit};
    while (!work.empty()) {
        int s = work.back();
        work.pop_back();
        for (int p : pred[s])
            if (seen.insert(p).second) work.push_back(p);
    }
    return seen;
}

void gen_grammar(ProgramGrammar& G, const ProgramPcfa& P, const std::string& m, int exit, Solver& s,
                 std::map<std::tuple<int, int, std::string, int>, bool>& memo, AbstractionStats* stats) {
    const Pcfa& A = P.at(m);
    auto back = backward_reachable(A, exit);
    int M = G.clone(P, m, exit);
    // rule 4
    for (int e : A.entry_states())
        if (back.count(e)) G.add(M, {G.state_symbol(P, m, e, exit)}, {RuleEntry, m, exit, {}, "", -1});
    for (auto& e : A.edges) {
        if (!back.count(e.dst)) continue;
        const Atom& a = A.edge(e.label).atom;
        int S = G.state_symbol(P, m, e.src, exit), S2 = G.state_symbol(P, m, e.dst, exit);
        if (a.kind == Atom::Api) {
            G.add(S, {G.g.terminal(a.terminal), S2}, {RuleApi, m, exit, {e}, "", -1});
        } else if (a.kind == Atom::Call) {
            const Pcfa& C = P.at(a.name);
            for (int c : C.exit_states()) {
                auto key = std::make_tuple(e.src, e.dst, a.name, c);
                auto it = memo.find(key);
                if (it == memo.end()) {
                    bool ok = call_clone_feasible(P, m, a.name, A.states.at(e.src).pred, A.states.at(e.dst).pred,
                                                  C.states.at(c).pred, s);
                    it = memo.emplace(key, ok).first;
                    if (stats) {
                        ++stats->clone_checks;
                        stats->clone_pruned += !ok;
                    }
                }
                if (it->second) G.add(S, {G.clone(P, a.name, c), S2}, {RuleCall, m, exit, {e}, a.name, c});
            }
        } else {
            G.add(S, {S2}, {RuleStmt, m, exit, {e}, "", -1});
        }
    }
    // rule 5
    G.add(G.state_symbol(P, m, exit, exit), {}, {RuleExit, m, exit, {}, "", -1});
}

ProgramGrammar construct_cfg(const ProgramPcfa& P, Solver& s, AbstractionStats* stats) {
    ProgramGrammar G;
    std::map<std::tuple<int, int, std::string, int>, bool> memo;
    // clone symbols first so ids are stable
    for (auto& m : P.order)
        for (int c : P.at(m).exit_states()) G.clone(P, m, c);
    for (auto& m : P.order)
        for (int c : P.at(m).exit_states()) gen_grammar(G, P, m, c, s, memo, stats);
    auto mains = P.at(P.entry).exit_states();
    if (mains.empty()) throw std::runtime_error("entry method has no exit state");
    if (mains.size() == 1) {
        G.g.start = G.clone(P, P.entry, mains[0]);
    } else {
        int S = ensure(G, G.g.nonterminal("START"), {SymbolInfo::Start, P.entry, -1, -1});
        for (int c : mains) G.add(S, {G.clone(P, P.entry, c)}, {RuleStart, P.entry, c, {}, "", -1});
        G.g.start = S;
    }
    for (int i = 0; i < G.g.num_symbols(); ++i)
        if (G.g.is_terminal(i)) ensure(G, i, {SymbolInfo::Terminal, "", -1, -1});
    return G;
}

ProgramGrammar compact(const ProgramGrammar& G0) {
    ProgramGrammar G = G0;
    int n = G.g.num_symbols();
    std::vector<std::vector<int>> by_lhs(n);
    for (size_t i = 0; i < G.g.prods.size(); ++i) by_lhs[G.g.prods[i].lhs].push_back(static_cast<int>(i));
    // X -> Y (single statement step) as the only production of X
    std::vector<int> target(n, -1);
    for (int x = 0; x < n; ++x) {
        if (G.g.is_terminal(x) || G.sym[x].kind != SymbolInfo::State || x == G.g.start) continue;
        if (by_lhs[x].size() != 1) continue;
        int p = by_lhs[x][0];
        auto& pr = G.g.prods[p];
        if (G.prod[p].rule == RuleStmt && pr.rhs.size() == 1 && pr.rhs[0] != x) target[x] = p;
    }
    // resolve chains, collecting steps
    std::vector<int> done(n, 0);
    std::vector<int> final_sym(n);
    std::vector<std::vector<PEdge>> chain(n);
    for (int x = 0; x < n; ++x) final_sym[x] = x;
    std::function<void(int)> resolve = [&](int x) {
        if (done[x]) return;
        done[x] = 1;  // in progress; a cycle stops here
        if (target[x] >= 0) {
            int p = target[x];
            int y = G.g.prods[p].rhs[0];
            resolve(y);
            if (done[y] == 2) {
                final_sym[x] = final_sym[y];
                chain[x] = G.prod[p].steps;
                chain[x].insert(chain[x].end(), chain[y].begin(), chain[y].end());
            }
        }
        done[x] = 2;
    };
    for (int x = 0; x < n; ++x) resolve(x);
    ProgramGrammar out;
    // rebuild with the same symbol table, dropping contracted lhs
    out.g = Grammar();
    for (int i = 0; i < n; ++i) {
        if (G.g.is_terminal(i))
            out.g.terminal(G.g.name(i));
        else
            out.g.nonterminal(G.g.name(i));
    }
    out.sym = G.sym;
    out.clone_symbol = G.clone_symbol;
    out.g.start = G.g.start;
    for (size_t i = 0; i < G.g.prods.size(); ++i) {
        const auto& pr = G.g.prods[i];
        if (final_sym[pr.lhs] != pr.lhs) continue;
        ProdInfo info = G.prod[i];
        std::vector<int> rhs = pr.rhs;
        if (!rhs.empty()) {
            int last = rhs.back();
            if (!G.g.is_terminal(last) && final_sym[last] != last) {
                rhs.back() = final_sym[last];
                info.steps.insert(info.steps.end(), chain[last].begin(), chain[last].end());
            }
        }
        // provenance stays with the production's own edge
        int i2 = out.g.add(pr.lhs, rhs, pr.provenance, pr.rule);
        (void)i2;
        out.prod.push_back(std::move(info));
    }
    return out;
}

}  // namespace cfproto

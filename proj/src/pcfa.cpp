#include "cfproto/pcfa.hpp"

#include "cfproto/instrument.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace cfproto {

using namespace ast;

std::string heap_name(const std::string& field) { return "heap." + field; }
std::string slot_name(const std::string& callee, const std::string& param) { return callee + "#" + param; }
std::string global_ghost(const std::string& g) { return g + "@in"; }
bool is_array_var(const std::string& name) { return name.rfind("heap.", 0) == 0; }

static Expr named_var(const std::string& n) { return mk_var(n, is_array_var(n) ? Sort::Array : Sort::Int); }

std::string Atom::str() const {
    auto args_str = [&] {
        std::string s;
        for (size_t i = 0; i < args.size(); ++i) s += (i ? ", " : "") + to_string(args[i]);
        return s;
    };
    switch (kind) {
        case Skip: return "skip";
        case Assign: return var + " := " + to_string(e);
        case Store: return var + "." + field + " := " + to_string(e);
        case Assume: return neg ? "assume(!(" + to_string(p) + "))" : "assume(" + to_string(p) + ")";
        case New: return var + " := new " + name;
        case Call: return "call " + name + "(" + args_str() + ")";
        case Api: return terminal.empty() ? var + "." + name + "(" + args_str() + ")" : terminal;
    }
    return "?";
}

std::vector<int> Pcfa::states_at(int loc) const {
    std::vector<int> out;
    for (auto& [id, s] : states)
        if (s.loc == loc) out.push_back(id);
    return out;
}

const CfaEdge& Pcfa::edge(int label) const {
    for (auto& e : cfa)
        if (e.id == label) return e;
    throw std::out_of_range("no edge " + std::to_string(label) + " in " + method);
}

const CfaEdge& ProgramPcfa::edge(int label) const {
    auto& [m, i] = label_index.at(label);
    return methods.at(m).cfa.at(i);
}

std::string ProgramPcfa::state_label(const std::string& m, int id) const {
    const auto& a = methods.at(m);
    const auto& st = a.states.at(id);
    auto same = a.states_at(st.loc);
    auto rank = std::find(same.begin(), same.end(), id) - same.begin();
    return locs.at(st.loc).label() + std::string(rank, '\'');
}

std::size_t ProgramPcfa::num_states() const {
    std::size_t n = 0;
    for (auto& [m, a] : methods) n += a.states.size();
    return n;
}

std::size_t ProgramPcfa::num_edges() const {
    std::size_t n = 0;
    for (auto& [m, a] : methods) n += a.edges.size();
    return n;
}

// ---------------------------------------------------------------- ast -> formula

Expr exp_formula(const Exp& e, const Naming& nm) {
    switch (e.kind) {
        case Exp::Var: return nm.var(e.name);
        case Exp::Load: return mk_select(nm.heap(e.field), nm.var(e.name));
        case Exp::Const: return mk_int(e.val);
        case Exp::Star: return nm.fresh();
        case Exp::Add: return mk_add(exp_formula(e.kids[0], nm), exp_formula(e.kids[1], nm));
        case Exp::Sub: return mk_sub(exp_formula(e.kids[0], nm), exp_formula(e.kids[1], nm));
        case Exp::Mul: return mk_mul(exp_formula(e.kids[0], nm), exp_formula(e.kids[1], nm));
    }
    return mk_int(0);
}

Expr pred_formula(const Pred& p, bool neg, const Naming& nm) {
    // a bare `*` is a free choice either way
    if (p.is_star()) return mk_true();
    Expr f;
    switch (p.kind) {
        case Pred::Truth: f = mk_ne(exp_formula(p.es[0], nm), mk_int(0)); break;
        case Pred::Not: f = pred_formula(p.ps[0], true, nm); break;
        case Pred::And: f = mk_and(pred_formula(p.ps[0], false, nm), pred_formula(p.ps[1], false, nm)); break;
        case Pred::Or: f = mk_or(pred_formula(p.ps[0], false, nm), pred_formula(p.ps[1], false, nm)); break;
        default: {
            Expr a = exp_formula(p.es[0], nm), b = exp_formula(p.es[1], nm);
            switch (p.kind) {
                case Pred::Lt: f = mk_lt(a, b); break;
                case Pred::Gt: f = mk_gt(a, b); break;
                case Pred::Eq: f = mk_eq(a, b); break;
                case Pred::Le: f = mk_le(a, b); break;
                case Pred::Ge: f = mk_ge(a, b); break;
                default: f = mk_ne(a, b); break;
            }
        }
    }
    return neg ? mk_not(f) : f;
}

// ---------------------------------------------------------------- build

namespace {

}  // namespace

bool is_global(const ProgramPcfa& P, const std::string& m, const std::string& x) {
    if (x.size() > 3 && x.compare(x.size() - 3, 3, "@in") == 0) return false;
    if (is_array_var(x) || x == kAlloc) return true;
    if (!P.statics.count(x)) return false;
    auto it = P.info.find(m);
    if (it == P.info.end()) return true;
    auto& ps = it->second.params;
    return std::find(ps.begin(), ps.end(), x) == ps.end();
}

namespace {

void direct_mods(const ProgramPcfa& P, const std::string& m, const Stmt& s, std::set<std::string>& out,
                 std::set<std::string>& callees) {
    switch (s.kind) {
        case Stmt::Assign:
            if (is_global(P, m, s.var)) out.insert(s.var);
            break;
        case Stmt::New:
            if (is_global(P, m, s.var)) out.insert(s.var);
            out.insert(kAlloc);
            if (auto* c = P.prog.cls(s.name))
                for (auto& f : c->fields)
                    if (!f.is_static) out.insert(heap_name(f.name));
            break;
        case Stmt::Store: out.insert(heap_name(s.field)); break;
        case Stmt::Call: callees.insert(s.name); break;
        default: break;
    }
    for (auto& b : s.body) direct_mods(P, m, b, out, callees);
}

bool has_edges(const Stmt& s) {
    if (s.kind == Stmt::Skip) return false;
    if (s.kind == Stmt::Seq) return std::any_of(s.body.begin(), s.body.end(), has_edges);
    return true;
}

struct Lowering {
    ProgramPcfa& P;
    Pcfa& A;
    const SpecProtocol* spec;
    int& next_label;

    int new_loc() {
        int id = static_cast<int>(P.locs.size());
        int k = static_cast<int>(A.locs.size());
        P.locs.push_back({A.method, k});
        A.locs.push_back(id);
        return id;
    }
    void edge(int from, int to, Atom a) {
        CfaEdge e{next_label++, from, to, std::move(a)};
        P.label_index[e.id] = {A.method, static_cast<int>(A.cfa.size())};
        A.cfa.push_back(std::move(e));
    }
    int target(int to) { return to >= 0 ? to : new_loc(); }

    // lower s starting at `from`; ends at `to` when given, else at a fresh location (returned)
    int lower(const Stmt& s, int from, int to) {
        switch (s.kind) {
            case Stmt::Skip:
                if (to < 0 || to == from) return from;
                edge(from, to, Atom{});
                return to;
            case Stmt::Seq: {
                std::vector<const Stmt*> items;
                for (auto& b : s.body)
                    if (has_edges(b)) items.push_back(&b);
                if (items.empty()) return lower(Stmt::skip(), from, to);
                int cur = from;
                for (size_t i = 0; i < items.size(); ++i) cur = lower(*items[i], cur, i + 1 == items.size() ? to : -1);
                return cur;
            }
            case Stmt::If: {
                Atom yes, no;
                yes.kind = no.kind = Atom::Assume;
                yes.p = no.p = s.p;
                no.neg = true;
                yes.loc = no.loc = s.loc;
                int join = to;
                if (has_edges(s.body[0])) {
                    int t0 = new_loc();
                    edge(from, t0, yes);
                    join = lower(s.body[0], t0, to);
                } else {
                    join = target(to);
                    edge(from, join, yes);
                }
                if (has_edges(s.body[1])) {
                    int e0 = new_loc();
                    edge(from, e0, no);
                    lower(s.body[1], e0, join);
                } else {
                    edge(from, join, no);
                }
                return join;
            }
            case Stmt::Call: {
                const Method* callee = P.prog.method(s.name);
                int cur = from;
                for (size_t i = 0; i < callee->params.size(); ++i) {
                    Atom b;
                    b.kind = Atom::Assign;
                    b.var = slot_name(s.name, callee->params[i].name);
                    b.e = s.args[i];
                    b.bind = true;
                    b.loc = s.loc;
                    int nx = new_loc();
                    edge(cur, nx, b);
                    cur = nx;
                }
                Atom c;
                c.kind = Atom::Call;
                c.name = s.name;
                c.args = s.args;
                c.loc = s.loc;
                int end = target(to);
                edge(cur, end, c);
                return end;
            }
            default: {
                Atom a;
                a.loc = s.loc;
                a.var = s.var;
                a.field = s.field;
                a.name = s.name;
                a.e = s.e;
                a.args = s.args;
                switch (s.kind) {
                    case Stmt::Assign: a.kind = Atom::Assign; break;
                    case Stmt::Store: a.kind = Atom::Store; break;
                    case Stmt::Assume:
                        a.kind = Atom::Assume;
                        a.p = s.p;
                        break;
                    case Stmt::New: a.kind = Atom::New; break;
                    case Stmt::ApiCall: {
                        a.kind = Atom::Api;
                        std::optional<ApiCallPattern> t;
                        if (spec) t = match_pattern(*spec, s);
                        if (t) {
                            a.terminal = t->str();
                        } else {
                            std::string txt = s.var + "." + s.name + "(";
                            for (size_t i = 0; i < s.args.size(); ++i) txt += (i ? ", " : "") + to_string(s.args[i]);
                            a.terminal = txt + ")";
                        }
                        break;
                    }
                    default: break;
                }
                int end = target(to);
                edge(from, end, a);
                return end;
            }
        }
    }
};

}  // namespace

ProgramPcfa build_initial(const Program& prog, const SpecProtocol* spec) {
    ProgramPcfa P;
    P.prog = prog;
    P.entry = prog.entry;
    for (auto* f : prog.statics()) P.statics.insert(f->name);
    for (auto* m : prog.methods()) {
        P.order.push_back(m->name);
        auto& mi = P.info[m->name];
        for (auto& prm : m->params) mi.params.push_back(prm.name);
        mi.ghosts = m->ghosts;
    }
    // mod-sets, closed under calls
    std::map<std::string, std::set<std::string>> callees;
    for (auto* m : prog.methods()) direct_mods(P, m->name, m->body, P.info[m->name].modset, callees[m->name]);
    for (bool changed = true; changed;) {
        changed = false;
        for (auto& [m, cs] : callees)
            for (auto& c : cs)
                for (auto& g : P.info[c].modset)
                    if (P.info[m].modset.insert(g).second) changed = true;
    }
    int next_label = 0;
    for (auto* m : prog.methods()) {
        Pcfa& A = P.methods[m->name];
        A.method = m->name;
        auto& mi = P.info[m->name];
        Lowering L{P, A, spec, next_label};
        A.entry_loc = L.new_loc();
        int cur = A.entry_loc;
        auto step = [&](Atom a) {
            int nx = L.new_loc();
            L.edge(cur, nx, std::move(a));
            cur = nx;
        };
        if (m->name == prog.entry) {
            for (auto* f : prog.statics()) {
                Atom a;
                a.kind = Atom::Assign;
                a.var = f->name;
                a.e = f->init;
                a.loc = f->loc;
                step(a);
            }
            if (mi.modset.count(kAlloc)) {
                Atom a;
                a.kind = Atom::Assign;
                a.var = kAlloc;
                a.e = Exp::num(0);
                step(a);
            }
        } else {
            for (auto& g : mi.modset) {
                mi.global_ghosts.push_back(g);
                Atom a;
                a.kind = Atom::Assign;
                a.var = global_ghost(g);
                a.e = Exp::var(g);
                a.prelude = true;
                a.loc = m->loc;
                step(a);
            }
        }
        // the AST prelude (symbolic constants) is the head of the body
        int end = L.lower(m->body, cur, -1);
        if (end == cur) {
            end = L.new_loc();
            L.edge(cur, end, Atom{});
        }
        A.exit_loc = end;
        for (auto& e : A.cfa)
            for (auto& gp : mi.ghosts)
                if (e.atom.kind == Atom::Assign && e.atom.var == gp.first) e.atom.prelude = true;
        for (int l : A.locs) {
            int id = P.next_state++;
            A.states[id] = {id, l, mk_true()};
        }
        // initial states: one per location, so state id order follows location order
        std::map<int, int> by_loc;
        for (auto& [id, s] : A.states) by_loc[s.loc] = id;
        for (auto& e : A.cfa) A.edges.insert({by_loc[e.src], e.id, by_loc[e.dst]});
    }
    return P;
}

// ---------------------------------------------------------------- cubes and cloning

std::vector<Expr> complete_cubes(const std::vector<Expr>& preds) {
    std::vector<Expr> out;
    size_t k = preds.size();
    for (size_t bits = 0; bits < (size_t{1} << k); ++bits) {
        std::vector<Expr> lits;
        for (size_t i = 0; i < k; ++i) lits.push_back(bits & (size_t{1} << i) ? normalize(mk_not(preds[i])) : preds[i]);
        out.push_back(mk_and(lits));
    }
    return out;
}

std::map<int, PState> clone_states(const std::map<int, PState>& S, int loc, const std::vector<Expr>& cubes, int& next_id) {
    std::map<int, PState> out;
    for (auto& [id, s] : S)
        if (s.loc != loc) out[id] = s;
    for (auto& [id, s] : S) {
        if (s.loc != loc) continue;
        for (auto& c : cubes) {
            int nid = next_id++;
            out[nid] = {nid, loc, mk_and(s.pred, c)};
        }
    }
    return out;
}

// ---------------------------------------------------------------- feasibility

Expr transition(const ProgramPcfa& P, const std::string& m, const Atom& a, std::map<std::string, Expr>& pre, int& fresh) {
    auto mark = [&](const std::string& x) {
        if (!pre.count(x)) pre[x] = mk_var(x + "~pre", is_array_var(x) ? Sort::Array : Sort::Int);
    };
    switch (a.kind) {
        case Atom::Assign: mark(a.var); break;
        case Atom::Store: mark(heap_name(a.field)); break;
        case Atom::New:
            mark(a.var);
            mark(kAlloc);
            if (auto* c = P.prog.cls(a.name))
                for (auto& f : c->fields)
                    if (!f.is_static) mark(heap_name(f.name));
            break;
        case Atom::Call:
            for (auto& g : P.info.at(a.name).modset) mark(g);
            break;
        default: break;
    }
    Naming old{[&](const std::string& x) { return pre.count(x) ? pre.at(x) : named_var(x); },
               [&](const std::string& f) {
                   auto h = heap_name(f);
                   return pre.count(h) ? pre.at(h) : named_var(h);
               },
               [&]() { return mk_var("*" + std::to_string(fresh++)); }};
    (void)m;
    switch (a.kind) {
        case Atom::Assign: return mk_eq(named_var(a.var), exp_formula(a.e, old));
        case Atom::Store:
            return mk_eq(named_var(heap_name(a.field)),
                         mk_store(old.heap(a.field), old.var(a.var), exp_formula(a.e, old)));
        case Atom::Assume: return pred_formula(a.p, a.neg, old);
        case Atom::New: {
            Expr x = named_var(a.var);
            std::vector<Expr> cs{mk_eq(x, mk_add(pre.at(kAlloc), mk_int(1))), mk_eq(mk_var(kAlloc), x)};
            if (auto* c = P.prog.cls(a.name))
                for (auto& f : c->fields)
                    if (!f.is_static)
                        cs.push_back(mk_eq(named_var(heap_name(f.name)),
                                           mk_store(pre.at(heap_name(f.name)), x, exp_formula(f.init, old))));
            return mk_and(cs);
        }
        default: return mk_true();
    }
}

bool edge_feasible(const ProgramPcfa& P, const std::string& m, const Expr& pre, const Atom& a, const Expr& post, Solver& s) {
    if (is_false(pre) || is_false(post)) return false;
    std::map<std::string, Expr> ren;
    int fresh = 0;
    Expr t = transition(P, m, a, ren, fresh);
    return s.is_sat(mk_and({substitute(pre, ren), t, post}));
}

bool call_edge_feasible(const ProgramPcfa& P, const std::string& callee, const Expr& pre, const Expr& post, Solver& s) {
    if (is_false(pre) || is_false(post)) return false;
    std::map<std::string, Expr> ren;
    for (auto& g : P.info.at(callee).modset) ren[g] = mk_var(g + "@pre", is_array_var(g) ? Sort::Array : Sort::Int);
    return s.is_sat(mk_and(substitute(pre, ren), post));
}

Expr call_clone_formula(const ProgramPcfa& P, const std::string& caller, const std::string& callee, const Expr& pre,
                        const Expr& post, const Expr& exit) {
    (void)caller;
    const auto& ci = P.info.at(callee);
    std::map<std::string, Expr> ren_pre;
    for (auto& g : ci.modset) ren_pre[g] = mk_var(g + "@pre", is_array_var(g) ? Sort::Array : Sort::Int);
    std::map<std::string, Expr> ren_exit;
    for (auto& [name, sort] : var_sorts(exit)) {
        std::string to;
        bool done = false;
        for (auto& [g, prm] : ci.ghosts)
            if (g == name) {
                to = slot_name(callee, prm);
                done = true;
            }
        if (!done)
            for (auto& g : ci.global_ghosts)
                if (global_ghost(g) == name) {
                    to = g + "@pre";
                    done = true;
                }
        if (!done) to = is_global(P, callee, name) ? name : "~" + callee + "~" + name;
        ren_exit[name] = mk_var(to, sort);
    }
    return mk_and({substitute(pre, ren_pre), post, substitute(exit, ren_exit)});
}

bool call_clone_feasible(const ProgramPcfa& P, const std::string& caller, const std::string& callee, const Expr& pre,
                         const Expr& post, const Expr& exit, Solver& s) {
    if (is_false(pre) || is_false(post) || is_false(exit)) return false;
    return s.is_sat(call_clone_formula(P, caller, callee, pre, post, exit));
}

// ---------------------------------------------------------------- refinement

void update_transitions(ProgramPcfa& P, const std::string& m, int loc, const std::set<PEdge>& touching, Solver& s) {
    Pcfa& A = P.methods.at(m);
    auto fresh = A.states_at(loc);
    for (auto& e : touching) A.edges.erase(e);
    for (auto& e : touching) {
        const CfaEdge& ce = A.edge(e.label);
        std::vector<int> srcs, dsts;
        if (ce.src == loc)
            srcs = fresh;
        else if (A.states.count(e.src))
            srcs = {e.src};
        if (ce.dst == loc)
            dsts = fresh;
        else if (A.states.count(e.dst))
            dsts = {e.dst};
        for (int a : srcs)
            for (int b : dsts) {
                PEdge ne{a, e.label, b};
                if (A.edges.count(ne)) continue;
                const Expr& pa = A.states.at(a).pred;
                const Expr& pb = A.states.at(b).pred;
                bool ok = ce.atom.kind == Atom::Call ? call_edge_feasible(P, ce.atom.name, pa, pb, s)
                                                     : edge_feasible(P, m, pa, ce.atom, pb, s);
                if (ok) A.edges.insert(ne);
            }
    }
}

ProgramPcfa refine(const ProgramPcfa& P0, const std::map<int, std::vector<Expr>>& psi, Solver& s, int cap,
                   RefineStats* stats) {
    ProgramPcfa P = P0;
    RefineStats st;
    for (auto& [loc, preds0] : psi) {
        if (preds0.empty()) continue;
        const std::string& m = P.locs.at(loc).method;
        Pcfa& A = P.methods.at(m);
        auto here = A.states_at(loc);
        // drop duplicates and predicates every state at loc already decides
        std::vector<Expr> preds;
        ExprSet seen;
        for (auto& p0 : preds0) {
            Expr p = normalize(p0);
            if (is_true(p) || is_false(p) || !seen.insert(p).second) continue;
            preds.push_back(p);
        }
        if (static_cast<int>(preds.size()) > cap) {
            std::vector<Expr> open;
            for (auto& p : preds) {
                bool decided = true;
                for (int id : here) {
                    const Expr& q = A.states.at(id).pred;
                    if (!s.implies(q, p) && !s.implies(q, mk_not(p))) {
                        decided = false;
                        break;
                    }
                }
                if (!decided) open.push_back(p);
            }
            preds = open;
            if (static_cast<int>(preds.size()) > cap) {
                st.capped += static_cast<int>(preds.size()) - cap;
                preds.resize(cap);
            }
        }
        if (preds.empty()) continue;
        auto cubes = complete_cubes(preds);
        std::set<PEdge> touching;
        for (auto& e : A.edges) {
            const CfaEdge& ce = A.edge(e.label);
            if (ce.src == loc || ce.dst == loc) touching.insert(e);
        }
        auto cloned = clone_states(A.states, loc, cubes, P.next_state);
        // eager drop of unsatisfiable clones
        for (auto it = cloned.begin(); it != cloned.end();) {
            if (it->second.loc == loc) {
                ++st.cloned;
                if (!s.is_sat(it->second.pred)) {
                    ++st.dropped;
                    it = cloned.erase(it);
                    continue;
                }
            }
            ++it;
        }
        A.states = std::move(cloned);
        update_transitions(P, m, loc, touching, s);
    }
    if (stats) *stats = st;
    return P;
}

// ---------------------------------------------------------------- output

std::string dump(const ProgramPcfa& P) {
    std::ostringstream os;
    for (auto& m : P.order) {
        const Pcfa& A = P.methods.at(m);
        os << "pcfa " << m << " entry " << P.locs[A.entry_loc].label() << " exit " << P.locs[A.exit_loc].label() << "\n";
        for (int l : A.locs)
            for (int id : A.states_at(l))
                os << "  state " << P.state_label(m, id) << " #" << id << " [" << to_string(A.states.at(id).pred) << "]\n";
        for (auto& e : A.edges)
            os << "  edge " << P.state_label(m, e.src) << " -[" << A.edge(e.label).atom.str() << "]-> "
               << P.state_label(m, e.dst) << "\n";
    }
    return os.str();
}

std::string dump_dot(const ProgramPcfa& P) {
    std::ostringstream os;
    auto esc = [](std::string s) {
        std::string o;
        for (char c : s) {
            if (c == '"' || c == '\\') o += '\\';
            o += c;
        }
        return o;
    };
    os << "digraph pcfa {\n";
    for (auto& m : P.order) {
        const Pcfa& A = P.methods.at(m);
        os << "  subgraph \"cluster_" << m << "\" {\n    label=\"" << m << "\";\n";
        for (auto& [id, s] : A.states)
            os << "    s" << id << " [label=\"" << esc(P.state_label(m, id)) << "\\n" << esc(to_string(s.pred)) << "\"];\n";
        for (auto& e : A.edges)
            os << "    s" << e.src << " -> s" << e.dst << " [label=\"" << esc(A.edge(e.label).atom.str()) << "\"];\n";
        os << "  }\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace cfproto

#include "cfproto/interpolants.hpp"

#include <algorithm>

#include "cfproto/linear.hpp"

namespace cfproto {

std::string unversion(const std::string& n) {
    auto p = n.find('~');
    return p == std::string::npos ? n : n.substr(0, p);
}

Expr unversion(const Expr& e) {
    return rename(e, [](const std::string& n) { return unversion(n); });
}

bool SsaTrace::in_scope(std::size_t k, const std::string& v) const {
    auto a = v.find('~');
    if (a == std::string::npos) return false;
    auto b = v.find('~', a + 1);
    std::string base = v.substr(0, a);
    auto ver = [](const std::map<std::string, int>& m, const std::string& x) {
        auto it = m.find(x);
        return it == m.end() ? 0 : it->second;
    };
    if (base == "*") return false;
    if (b == std::string::npos) return std::stoi(v.substr(a + 1)) == ver(global_ver[k], base);
    int f = std::stoi(v.substr(a + 1, b - a - 1));
    return f == frame[k] && std::stoi(v.substr(b + 1)) == ver(local_ver[k], base);
}

namespace {

using namespace ast;

struct Frame {
    int id;
    std::string method;
    std::map<std::string, int> ver;
    std::map<std::string, int> globals_at_call;
};

struct Builder {
    const ProgramPcfa& P;
    SsaTrace out;
    std::vector<Frame> stack;
    std::map<std::string, int> gver;
    int next_frame = 0;
    int nondet = 0;

    Frame& top() { return stack.back(); }
    bool global(const std::string& x) { return is_global(P, top().method, x); }
    static Sort sort_of(const std::string& x) { return is_array_var(x) ? Sort::Array : Sort::Int; }

    Expr cur(const std::string& x) {
        if (global(x)) return mk_var(x + "~" + std::to_string(gver[x]), sort_of(x));
        return mk_var(x + "~" + std::to_string(top().id) + "~" + std::to_string(top().ver[x]), sort_of(x));
    }
    Expr bump(const std::string& x) {
        if (global(x)) ++gver[x];
        else ++top().ver[x];
        return cur(x);
    }
    Naming naming() {
        return {[this](const std::string& x) { return cur(x); }, [this](const std::string& f) { return cur(heap_name(f)); },
                [this]() { return mk_var("*~" + std::to_string(nondet++)); }};
    }
    void snapshot() {
        out.frame.push_back(top().id);
        out.local_ver.push_back(top().ver);
        out.global_ver.push_back(gver);
    }

    void add(const Expr& c, bool relaxable, std::string text = "") {
        out.cons.push_back(c);
        out.relaxable.push_back(relaxable);
        out.text.push_back(text.empty() ? to_string(c) : text);
    }

    void stmt(const Atom& a) {
        Naming nm = naming();
        switch (a.kind) {
            case Atom::Assign: {
                Expr rhs = exp_formula(a.e, nm);
                Expr lhs = bump(a.var);
                add(mk_eq(lhs, rhs), !a.bind && !a.prelude, to_string(lhs) + " := " + to_string(rhs));
                return;
            }
            case Atom::Store: {
                Expr base = cur(a.var), rhs = exp_formula(a.e, nm), old = cur(heap_name(a.field));
                add(mk_eq(bump(heap_name(a.field)), mk_store(old, base, rhs)), true);
                return;
            }
            case Atom::Assume: {
                Expr c = pred_formula(a.p, a.neg, nm);
                add(c, !a.p.is_star(), "assume(" + to_string(c) + ")");
                return;
            }
            case Atom::New: {
                std::vector<std::pair<std::string, Expr>> inits;
                if (auto* c = P.prog.cls(a.name))
                    for (auto& f : c->fields)
                        if (!f.is_static) inits.push_back({f.name, exp_formula(f.init, nm)});
                Expr old = cur(kAlloc);
                Expr al = bump(kAlloc);
                Expr x = bump(a.var);
                std::vector<Expr> cs{mk_eq(al, mk_add(old, mk_int(1))), mk_eq(x, al)};
                for (auto& [f, v] : inits) {
                    Expr h = cur(heap_name(f));
                    cs.push_back(mk_eq(bump(heap_name(f)), mk_store(h, x, v)));
                }
                add(mk_and(cs), true);
                return;
            }
            default: add(mk_true(), false); return;
        }
    }
};

}  // namespace

SsaTrace to_ssa(const ProgramPcfa& P, const NestedTrace& t) {
    Builder b{P, {}, {}, {}, 0, 0};
    b.stack.push_back({b.next_frame++, t.state_method.empty() ? P.entry : t.state_method[0], {}, {}});
    b.snapshot();
    for (size_t k = 0; k < t.steps.size(); ++k) {
        const auto& st = t.steps[k];
        switch (st.kind) {
            case TraceStep::Stmt: b.stmt(st.atom); break;
            case TraceStep::Call:
                b.add(mk_true(), false);
                b.stack.push_back({b.next_frame++, st.atom.name, {}, b.gver});
                break;
            case TraceStep::Return: {
                Frame callee = b.top();
                const auto& mi = P.info.at(callee.method);
                std::vector<Expr> links, ghosts;
                for (auto& gp : mi.ghosts) ghosts.push_back(b.cur(gp.first));
                for (auto& g : mi.global_ghosts) {
                    auto it = callee.globals_at_call.find(g);
                    int v = it == callee.globals_at_call.end() ? 0 : it->second;
                    links.push_back(mk_eq(b.cur(global_ghost(g)), mk_var(g + "~" + std::to_string(v), Builder::sort_of(g))));
                }
                b.stack.pop_back();
                for (size_t i = 0; i < ghosts.size(); ++i)
                    links.push_back(mk_eq(ghosts[i], b.cur(slot_name(callee.method, mi.ghosts[i].second))));
                b.add(mk_and(links), false);
                break;
            }
        }
        b.snapshot();
    }
    return b.out;
}

SatResult feasible_trace(const SsaTrace& t, Solver& s) { return s.check(t.formula()); }

// ---------------------------------------------------------------- projection

namespace {

bool inside_opaque(const Expr& e, const std::string& v) {
    // v occurs below a select/app/store/mul-by-var
    if (e->op == Op::Var) return false;
    if (e->op == Op::Add || (e->op == Op::Mul && e->args.size() == 1)) {
        for (auto& a : e->args)
            if (inside_opaque(a, v)) return true;
        return false;
    }
    if (e->op == Op::Int) return false;
    return mentions(e, v);
}

// v = t with unit coefficient and v not under an opaque term
std::optional<Expr> solve_unit(const Expr& atom, const std::string& v) {
    if (atom->op != Op::Eq) return std::nullopt;
    const Expr &a = atom->args[0], &b = atom->args[1];
    if (a->sort == Sort::Array) {
        if (a->op == Op::Var && a->name == v && !mentions(b, v)) return b;
        if (b->op == Op::Var && b->name == v && !mentions(a, v)) return a;
        return std::nullopt;
    }
    if (a->sort != Sort::Int) return std::nullopt;
    Expr diff = mk_sub(a, b);
    if (inside_opaque(diff, v)) return std::nullopt;
    LinForm f = linearize(diff);
    Expr var = mk_var(v);
    auto it = f.coeffs.find(var);
    if (it == f.coeffs.end() || (it->second != 1 && it->second != -1)) return std::nullopt;
    std::int64_t c = it->second;
    f.coeffs.erase(it);
    // c*v + rest = 0  =>  v = -rest/c
    LinForm r;
    r.add(f, -c);
    return from_lin(r);
}

// linear bound c*v + rest <= 0 from an Le/Lt/Eq atom
bool as_bounds(const Expr& atom, const std::string& v, std::vector<LinForm>& out) {
    if ((atom->op != Op::Le && atom->op != Op::Lt && atom->op != Op::Eq) || atom->args[0]->sort != Sort::Int) return false;
    Expr diff = mk_sub(atom->args[0], atom->args[1]);
    if (inside_opaque(diff, v)) return false;
    LinForm f = linearize(diff);
    if (atom->op == Op::Lt) f.constant = add_ck(f.constant, 1);
    out.push_back(f);
    if (atom->op == Op::Eq) {
        LinForm g;
        g.add(f, -1);
        out.push_back(g);
    }
    return true;
}

Expr le_zero(const LinForm& f) { return normalize_atom(mk_le(from_lin(f), mk_int(0))); }

}  // namespace

Expr project(const Expr& f0, const std::function<bool(const std::string&)>& keep) {
    std::vector<Expr> cs;
    for (auto& c : conjuncts(f0)) {
        Expr n = normalize(c);
        if (is_false(n)) return mk_false();
        if (!is_true(n)) cs.push_back(n);
    }
    // A = store(B, i, x)  implies  A[i] = x
    for (size_t i = 0, n0 = cs.size(); i < n0; ++i) {
        const Expr& c = cs[i];
        if (c->op != Op::Eq || c->args[0]->sort != Sort::Array) continue;
        for (int side = 0; side < 2; ++side) {
            const Expr &a = c->args[side], &b = c->args[1 - side];
            if (b->op == Op::Store && a->op != Op::Store) cs.push_back(normalize(mk_eq(mk_select(a, b->args[1]), b->args[2])));
        }
    }
    for (int guard = 0; guard < 10000; ++guard) {
        std::string v;
        Sort vs = Sort::Int;
        for (auto& c : cs) {
            for (auto& [n, s] : var_sorts(c))
                if (!keep(n)) {
                    v = n;
                    vs = s;
                    break;
                }
            if (!v.empty()) break;
        }
        if (v.empty()) break;
        // unit equality
        bool done = false;
        for (size_t i = 0; i < cs.size() && !done; ++i) {
            auto t = solve_unit(cs[i], v);
            if (!t) continue;
            std::map<std::string, Expr> sub{{v, *t}};
            std::vector<Expr> next;
            for (size_t j = 0; j < cs.size(); ++j) {
                if (j == i) continue;
                Expr n = normalize(substitute(cs[j], sub));
                if (is_false(n)) return mk_false();
                if (!is_true(n)) next.push_back(n);
            }
            cs = std::move(next);
            done = true;
        }
        if (done) continue;
        std::vector<Expr> keep_cs, with;
        for (auto& c : cs) (mentions(c, v) ? with : keep_cs).push_back(c);
        if (vs == Sort::Array) {
            // A = store(v, i, x)  gives  select(A, i) = x
            for (auto& c : with) {
                if (c->op != Op::Eq) continue;
                for (int side = 0; side < 2; ++side) {
                    const Expr &a = c->args[side], &b = c->args[1 - side];
                    if (b->op == Op::Store && b->args[0]->op == Op::Var && b->args[0]->name == v && !mentions(a, v) &&
                        !mentions(b->args[1], v) && !mentions(b->args[2], v))
                        keep_cs.push_back(normalize(mk_eq(mk_select(a, b->args[1]), b->args[2])));
                }
            }
            cs = std::move(keep_cs);
            continue;
        }
        // Fourier-Motzkin over the linear bounds on v; other atoms on v are dropped
        std::vector<LinForm> lo, hi;
        Expr var = mk_var(v);
        for (auto& c : with) {
            std::vector<LinForm> bs;
            if (!as_bounds(c, v, bs)) continue;
            for (auto& b : bs) {
                auto it = b.coeffs.find(var);
                if (it == b.coeffs.end()) continue;
                (it->second > 0 ? hi : lo).push_back(b);
            }
        }
        for (auto& h : hi)
            for (auto& l : lo) {
                std::int64_t ch = h.coeffs.at(var), cl = -l.coeffs.at(var);
                LinForm r;
                r.add(h, cl);
                r.add(l, ch);
                Expr n = le_zero(r);
                if (is_false(n)) return mk_false();
                if (!is_true(n)) keep_cs.push_back(n);
            }
        cs = std::move(keep_cs);
    }
    ExprSet uniq(cs.begin(), cs.end());
    return mk_and(std::vector<Expr>(uniq.begin(), uniq.end()));
}

// ---------------------------------------------------------------- interpolants

std::optional<Interpolants> nested_interpolants(const NestedTrace& t, const SsaTrace& ssa, Solver& s) {
    size_t n = ssa.cons.size();
    std::vector<Expr> cur = ssa.cons;
    if (s.is_sat(mk_and(cur))) return std::nullopt;
    Interpolants out;
    out.relaxed.assign(n, false);
    // deletion-based core over the relaxable steps, latest first
    for (size_t k = n; k-- > 0;) {
        if (!ssa.relaxable[k]) continue;
        Expr saved = cur[k];
        cur[k] = mk_true();
        if (s.is_sat(mk_and(cur)))
            cur[k] = saved;
        else
            out.relaxed[k] = true;
    }
    // variables used from each position on
    std::vector<std::set<std::string>> live(n + 1);
    for (size_t k = n; k-- > 0;) {
        live[k] = live[k + 1];
        collect_vars(cur[k], live[k]);
    }
    std::vector<Expr>& I = out.versioned;
    I.assign(n + 1, mk_true());
    for (size_t k = 0; k < n; ++k) {
        Expr base = t.steps[k].kind == TraceStep::Return ? mk_and({I[t.match[k]], I[k], cur[k]}) : mk_and(I[k], cur[k]);
        if (is_false(I[k]) || !s.is_sat(base)) {
            I[k + 1] = mk_false();
            continue;
        }
        // globals stay: the caller side of a return may still need them
        I[k + 1] = project(base, [&](const std::string& v) {
            return ssa.in_scope(k + 1, v) && (std::count(v.begin(), v.end(), '~') == 1 || live[k + 1].count(v));
        });
    }
    if (!is_false(I[n]) && s.is_sat(I[n])) throw SolverError("interpolation lost infeasibility");
    I[n] = mk_false();
    for (auto& f : I) out.plain.push_back(normalize(unversion(f)));
    return out;
}

bool check_interpolant_contract(const NestedTrace& t, const SsaTrace& ssa, const std::vector<Expr>& I, Solver& s,
                                std::string* why) {
    auto fail = [&](const std::string& m) {
        if (why) *why = m;
        return false;
    };
    size_t n = ssa.cons.size();
    if (I.size() != n + 1) return fail("length");
    if (!s.is_valid(I[0])) return fail("first is not true");
    if (s.is_sat(I[n])) return fail("last is not false");
    for (size_t k = 0; k < n; ++k) {
        Expr pre = t.steps[k].kind == TraceStep::Return ? mk_and({I[t.match[k]], I[k], ssa.cons[k]}) : sp(ssa.cons[k], I[k]);
        if (!s.implies(pre, I[k + 1])) return fail("not inductive at " + std::to_string(k));
    }
    return true;
}

}  // namespace cfproto

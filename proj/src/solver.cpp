#include "cfproto/solver.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <sstream>

#include "cfproto/lia.hpp"
#include "cfproto/linear.hpp"

namespace cfproto {

bool Solver::is_sat(const Expr& f) {
    SatResult r = check(f);
    if (r.status == SatResult::Unknown) throw SolverError("solver returned unknown: " + r.reason);
    return r.sat();
}

// ---------------------------------------------------------------- builtin

namespace {

bool has_array_var(const Expr& e) {
    if (e->op == Op::Var) return e->sort == Sort::Array;
    for (auto& a : e->args)
        if (has_array_var(a)) return true;
    return false;
}

Expr eliminate_array_defs(const Expr& f) {
    std::vector<Expr> cs = conjuncts(f);
    std::map<std::string, Expr> defs;
    std::vector<Expr> rest;
    for (auto& c : cs) {
        if (c->op == Op::Eq && c->args[0]->sort == Sort::Array) {
            const Expr& a = c->args[0];
            const Expr& b = c->args[1];
            if (a->op == Op::Var && !defs.count(a->name) && !mentions(b, a->name)) {
                defs[a->name] = b;
                continue;
            }
            if (b->op == Op::Var && !defs.count(b->name) && !mentions(a, b->name)) {
                defs[b->name] = a;
                continue;
            }
        }
        rest.push_back(c);
    }
    if (defs.empty()) return f;
    // resolve definitions against each other; cycles are left in place
    for (size_t round = 0; round <= defs.size(); ++round) {
        bool changed = false;
        for (auto& [name, def] : defs) {
            Expr nd = substitute(def, defs);
            if (nd != def && !mentions(nd, name)) {
                def = nd;
                changed = true;
            }
        }
        if (!changed) break;
    }
    std::vector<Expr> out;
    for (auto& c : rest) out.push_back(substitute(c, defs));
    return mk_and(std::move(out));
}

bool has_array_eq(const Expr& e) {
    if (e->op == Op::Eq && e->args[0]->sort == Sort::Array) return true;
    for (auto& a : e->args)
        if (has_array_eq(a)) return true;
    return false;
}

void index_terms(const Expr& e, std::map<std::string, Expr>& out) {
    if (e->op == Op::Select) out.emplace(e->args[1]->key, e->args[1]);
    if (e->op == Op::Store) out.emplace(e->args[1]->key, e->args[1]);
    for (auto& a : e->args) index_terms(a, out);
}

// extensionality: A = B holds pointwise on the index set, A != B has a fresh witness
struct Extensionality {
    std::map<std::string, Expr> idx;
    std::vector<std::pair<Expr, Expr>> pos;
    int fresh = 0;

    Expr run(const Expr& e, bool neg) {
        switch (e->op) {
            case Op::Not: return mk_not(run(e->args[0], !neg));
            case Op::And:
            case Op::Or: {
                std::vector<Expr> xs;
                for (auto& a : e->args) xs.push_back(run(a, neg));
                return e->op == Op::And ? mk_and(std::move(xs)) : mk_or(std::move(xs));
            }
            case Op::Eq:
                if (e->args[0]->sort != Sort::Array) break;
                if (neg) {
                    Expr k = mk_var("!k" + std::to_string(fresh++));
                    idx.emplace(k->key, k);
                    return mk_eq(mk_select(e->args[0], k), mk_select(e->args[1], k));
                }
                {
                    Expr marker = mk_var("!e" + std::to_string(pos.size()), Sort::Bool);
                    pos.emplace_back(e, marker);
                    return marker;
                }
            default: break;
        }
        if (has_array_eq(e)) throw SolverError("array equality under a non-boolean context: " + to_string(e));
        return e;
    }
};

Expr expand_array_eqs(const Expr& f) {
    Extensionality x;
    index_terms(f, x.idx);
    Expr g = x.run(f, false);
    if (x.pos.empty()) return g;
    std::map<std::string, Expr> sub;
    for (auto& [eq, marker] : x.pos) {
        std::vector<Expr> cs;
        for (auto& [k, i] : x.idx) cs.push_back(mk_eq(mk_select(eq->args[0], i), mk_select(eq->args[1], i)));
        sub[marker->name] = mk_and(std::move(cs));
    }
    return substitute(g, sub);
}

Expr read_over_write(const Expr& e) {
    if (e->args.empty()) return e;
    std::vector<Expr> args;
    for (auto& a : e->args) args.push_back(read_over_write(a));
    if (e->op == Op::Select) {
        const Expr& arr = args[0];
        const Expr& idx = args[1];
        if (arr->op == Op::Store) {
            return mk_ite(mk_eq(arr->args[1], idx), arr->args[2], read_over_write(mk_select(arr->args[0], idx)));
        }
        if (arr->op == Op::Ite) {
            return mk_ite(arr->args[0], read_over_write(mk_select(arr->args[1], idx)),
                          read_over_write(mk_select(arr->args[2], idx)));
        }
        return mk_select(arr, idx);
    }
    if (e->op == Op::Eq && args[0]->sort == Sort::Array) {
        if (args[0]->key == args[1]->key) return mk_true();
        throw SolverError("unsupported array equality: " + to_string(e));
    }
    switch (e->op) {
        case Op::Add: return mk_add(std::move(args));
        case Op::Mul: return mk_scale(e->val, args[0]);
        case Op::App: return mk_app(e->name, std::move(args));
        case Op::Store: return mk_store(args[0], args[1], args[2]);
        case Op::Ite: return mk_ite(args[0], args[1], args[2]);
        case Op::Not: return mk_not(args[0]);
        case Op::And: return mk_and(std::move(args));
        case Op::Or: return mk_or(std::move(args));
        case Op::Eq: return mk_eq(args[0], args[1]);
        case Op::Le: return mk_le(args[0], args[1]);
        case Op::Lt: return mk_lt(args[0], args[1]);
        default: return e;
    }
}

struct Ackermann {
    struct App {
        std::string symbol;
        std::vector<Expr> args;
        Expr var;
    };
    std::map<std::string, Expr> by_key;
    std::vector<App> apps;
    int counter = 0;

    Expr run(const Expr& e) {
        if (e->args.empty()) return e;
        std::vector<Expr> args;
        bool changed = false;
        for (auto& a : e->args) {
            args.push_back(run(a));
            changed |= args.back() != a;
        }
        Expr cur = e;
        if (changed) {
            switch (e->op) {
                case Op::Add: cur = mk_add(args); break;
                case Op::Mul: cur = mk_scale(e->val, args[0]); break;
                case Op::App: cur = mk_app(e->name, args); break;
                case Op::Select: cur = mk_select(args[0], args[1]); break;
                case Op::Ite: cur = mk_ite(args[0], args[1], args[2]); break;
                case Op::Not: cur = mk_not(args[0]); break;
                case Op::And: cur = mk_and(args); break;
                case Op::Or: cur = mk_or(args); break;
                case Op::Eq: cur = mk_eq(args[0], args[1]); break;
                case Op::Le: cur = mk_le(args[0], args[1]); break;
                case Op::Lt: cur = mk_lt(args[0], args[1]); break;
                default: break;
            }
        }
        if (cur->op != Op::App && cur->op != Op::Select) return cur;
        auto it = by_key.find(cur->key);
        if (it != by_key.end()) return it->second;
        std::string sym;
        std::vector<Expr> xs;
        if (cur->op == Op::App) {
            sym = cur->name + "/" + std::to_string(cur->args.size());
            xs = cur->args;
        } else {
            if (cur->args[0]->op != Op::Var) throw SolverError("unsupported array term: " + to_string(cur));
            sym = "[]" + cur->args[0]->name;
            xs = {cur->args[1]};
        }
        Expr v = mk_var("!a" + std::to_string(counter++));
        by_key[cur->key] = v;
        apps.push_back({sym, xs, v});
        return v;
    }

    std::vector<Expr> congruence() const {
        std::vector<Expr> out;
        for (size_t i = 0; i < apps.size(); ++i) {
            for (size_t j = i + 1; j < apps.size(); ++j) {
                if (apps[i].symbol != apps[j].symbol) continue;
                std::vector<Expr> diff;
                for (size_t k = 0; k < apps[i].args.size(); ++k) diff.push_back(mk_ne(apps[i].args[k], apps[j].args[k]));
                diff.push_back(mk_eq(apps[i].var, apps[j].var));
                out.push_back(mk_or(std::move(diff)));
            }
        }
        return out;
    }
};

Expr find_ite(const Expr& e) {
    if (e->op == Op::Ite) return e;
    for (auto& a : e->args)
        if (auto r = find_ite(a)) return r;
    return nullptr;
}

Expr replace_node(const Expr& e, const Expr& target, const Expr& with) {
    if (e == target || e->key == target->key) return with;
    if (e->args.empty()) return e;
    std::map<std::string, Expr> none;
    std::vector<Expr> args;
    for (auto& a : e->args) args.push_back(replace_node(a, target, with));
    switch (e->op) {
        case Op::Add: return mk_add(args);
        case Op::Mul: return mk_scale(e->val, args[0]);
        case Op::App: return mk_app(e->name, args);
        case Op::Select: return mk_select(args[0], args[1]);
        case Op::Store: return mk_store(args[0], args[1], args[2]);
        case Op::Ite: return mk_ite(args[0], args[1], args[2]);
        case Op::Eq: return mk_eq(args[0], args[1]);
        case Op::Le: return mk_le(args[0], args[1]);
        case Op::Lt: return mk_lt(args[0], args[1]);
        default: return e;
    }
}

Expr lift_ite(const Expr& e) {
    switch (e->op) {
        case Op::Not: return mk_not(lift_ite(e->args[0]));
        case Op::And:
        case Op::Or: {
            std::vector<Expr> xs;
            for (auto& a : e->args) xs.push_back(lift_ite(a));
            return e->op == Op::And ? mk_and(std::move(xs)) : mk_or(std::move(xs));
        }
        case Op::Eq:
        case Op::Le:
        case Op::Lt: {
            Expr ite = find_ite(e);
            if (!ite) return e;
            Expr c = lift_ite(ite->args[0]);
            Expr t = lift_ite(replace_node(e, ite, ite->args[1]));
            Expr f = lift_ite(replace_node(e, ite, ite->args[2]));
            return mk_or(mk_and(c, t), mk_and(mk_not(c), f));
        }
        default: return e;
    }
}

Expr nnf(const Expr& e, bool neg) {
    switch (e->op) {
        case Op::True: return mk_bool(!neg);
        case Op::False: return mk_bool(neg);
        case Op::Not: return nnf(e->args[0], !neg);
        case Op::And:
        case Op::Or: {
            std::vector<Expr> xs;
            for (auto& a : e->args) xs.push_back(nnf(a, neg));
            bool conj = (e->op == Op::And) != neg;
            return conj ? mk_and(std::move(xs)) : mk_or(std::move(xs));
        }
        default: return neg ? mk_not(e) : e;
    }
}

class Search {
public:
    std::map<std::string, int> index;
    std::vector<std::string> names;
    LiaSolver lia;
    std::vector<std::int64_t> model;

    int var_index(const Expr& t) {
        if (t->op != Op::Var) throw SolverError("non-linear term survived preprocessing: " + to_string(t));
        auto it = index.find(t->name);
        if (it != index.end()) return it->second;
        int i = static_cast<int>(names.size());
        index[t->name] = i;
        names.push_back(t->name);
        return i;
    }

    LinCon literal(const Expr& lit) {
        bool neg = lit->op == Op::Not;
        const Expr& a = neg ? lit->args[0] : lit;
        LinForm f = linearize(mk_sub(a->args[0], a->args[1]));
        LinCon c;
        for (auto& [t, k] : f.coeffs) c.coeffs[var_index(t)] = k;
        c.constant = f.constant;
        switch (a->op) {
            case Op::Eq: c.kind = neg ? LinCon::Ne : LinCon::Eq; break;
            case Op::Le:
                c.kind = LinCon::Le;
                if (neg) negate_le(c, 1);  // t > 0  <=>  -t + 1 <= 0
                break;
            case Op::Lt:
                c.kind = LinCon::Le;
                if (neg) negate_le(c, 0);  // t >= 0  <=>  -t <= 0
                else c.constant = add_ck(c.constant, 1);
                break;
            default: throw SolverError("unexpected literal: " + to_string(lit));
        }
        return c;
    }

    static void negate_le(LinCon& c, std::int64_t plus) {
        for (auto& [v, k] : c.coeffs) k = -k;
        c.constant = add_ck(-c.constant, plus);
    }

    bool theory(const std::vector<LinCon>& lits) {
        auto r = lia.solve(lits, static_cast<int>(names.size()));
        if (!r) return false;
        model = *r;
        return true;
    }

    void split(const Expr& e, std::vector<LinCon>& lits, std::vector<Expr>& ors, bool& bottom) {
        if (e->op == Op::True) return;
        if (e->op == Op::False) {
            bottom = true;
            return;
        }
        if (e->op == Op::And) {
            for (auto& a : e->args) split(a, lits, ors, bottom);
            return;
        }
        if (e->op == Op::Or) {
            ors.push_back(e);
            return;
        }
        lits.push_back(literal(e));
    }

    bool run(std::vector<LinCon> lits, std::vector<Expr> ors) {
        if (!theory(lits)) return false;
        if (ors.empty()) return true;
        // prefer an already satisfied disjunction, else the narrowest one
        size_t pick = 0;
        for (size_t i = 0; i < ors.size(); ++i) {
            if (ors[i]->args.size() < ors[pick]->args.size()) pick = i;
        }
        Expr chosen = ors[pick];
        ors.erase(ors.begin() + pick);
        for (auto& alt : chosen->args) {
            std::vector<LinCon> l2 = lits;
            std::vector<Expr> o2 = ors;
            bool bottom = false;
            split(alt, l2, o2, bottom);
            if (bottom) continue;
            if (run(std::move(l2), std::move(o2))) return true;
        }
        return false;
    }
};

}  // namespace

SatResult BuiltinSolver::check(const Expr& input) {
    SatResult res;
    try {
        Expr f = input;
        if (has_array_var(f)) f = eliminate_array_defs(f);
        if (has_array_eq(f)) f = expand_array_eqs(f);
        f = read_over_write(f);
        Ackermann ack;
        f = ack.run(f);
        std::vector<Expr> all{f};
        for (auto& c : ack.congruence()) all.push_back(c);
        f = nnf(lift_ite(mk_and(std::move(all))), false);
        Search s;
        std::vector<LinCon> lits;
        std::vector<Expr> ors;
        bool bottom = false;
        // register variables up front so models cover all of them
        for (auto& [name, sort] : var_sorts(f))
            if (sort == Sort::Int) s.var_index(mk_var(name));
        s.split(f, lits, ors, bottom);
        if (bottom || !s.run(std::move(lits), std::move(ors))) {
            res.status = SatResult::Unsat;
            return res;
        }
        res.status = SatResult::Sat;
        for (size_t i = 0; i < s.names.size(); ++i) {
            if (s.names[i].rfind("!a", 0) == 0 || s.names[i].rfind("!k", 0) == 0) continue;
            res.model[s.names[i]] = i < s.model.size() ? s.model[i] : 0;
        }
    } catch (const SolverError& e) {
        res.status = SatResult::Unknown;
        res.reason = e.what();
    } catch (const ArithOverflow& e) {
        res.status = SatResult::Unknown;
        res.reason = e.what();
    } catch (const std::runtime_error& e) {
        res.status = SatResult::Unknown;
        res.reason = e.what();
    }
    return res;
}

// ---------------------------------------------------------------- external

ExternalSolver::ExternalSolver(std::string command, int timeout_ms)
    : command_(std::move(command)), timeout_ms_(timeout_ms) {}

ExternalSolver::~ExternalSolver() { stop(); }

void ExternalSolver::start() {
    int in[2], out[2];
    if (pipe(in) != 0 || pipe(out) != 0) throw SolverError("pipe failed");
    pid_ = fork();
    if (pid_ < 0) throw SolverError("fork failed");
    if (pid_ == 0) {
        dup2(in[0], 0);
        dup2(out[1], 1);
        close(in[1]);
        close(out[0]);
        execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(in[0]);
    close(out[1]);
    to_child_ = in[1];
    from_child_ = out[0];
    buffer_.clear();
    signal(SIGPIPE, SIG_IGN);
    send("(set-option :print-success false)\n(set-option :produce-models true)\n(set-logic QF_AUFLIA)\n");
}

void ExternalSolver::stop() {
    if (pid_ <= 0) return;
    close(to_child_);
    close(from_child_);
    kill(pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
    pid_ = -1;
}

void ExternalSolver::send(const std::string& s) {
    size_t off = 0;
    while (off < s.size()) {
        ssize_t n = write(to_child_, s.data() + off, s.size() - off);
        if (n <= 0) throw SolverError("write to solver failed");
        off += static_cast<size_t>(n);
    }
}

std::string ExternalSolver::read_sexpr() {
    std::string out;
    int depth = 0;
    size_t i = 0;
    for (;;) {
        for (; i < buffer_.size(); ++i) {
            char c = buffer_[i];
            bool space = std::isspace(static_cast<unsigned char>(c));
            if (out.empty() && space) continue;
            if (depth == 0 && space) {
                buffer_.erase(0, i + 1);
                return out;
            }
            out.push_back(c);
            if (c == '(') ++depth;
            if (c == ')' && --depth == 0) {
                buffer_.erase(0, i + 1);
                return out;
            }
        }
        buffer_.clear();
        i = 0;
        pollfd p{from_child_, POLLIN, 0};
        int r = poll(&p, 1, timeout_ms_);
        if (r <= 0) throw SolverError("solver timeout");
        char buf[4096];
        ssize_t n = read(from_child_, buf, sizeof buf);
        if (n <= 0) throw SolverError("solver closed its output");
        buffer_.append(buf, static_cast<size_t>(n));
    }
}

namespace {

void collect_apps(const Expr& e, std::map<std::string, size_t>& funs) {
    if (e->op == Op::App) funs[e->name] = e->args.size();
    for (auto& a : e->args) collect_apps(a, funs);
}

std::string quote(const std::string& n) {
    for (char c : n)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$')) return "|" + n + "|";
    return n;
}

std::int64_t parse_value(const std::string& s) {
    std::string t;
    for (char c : s)
        if (c != '(' && c != ')') t.push_back(c);
    std::istringstream is(t);
    std::string tok;
    bool neg = false;
    std::int64_t v = 0;
    while (is >> tok) {
        if (tok == "-") neg = true;
        else v = std::stoll(tok);
    }
    return neg ? -v : v;
}

}  // namespace

SatResult ExternalSolver::check(const Expr& f) {
    std::lock_guard<std::mutex> lock(mu_);
    SatResult res;
    try {
        if (pid_ <= 0) start();
        std::ostringstream q;
        q << "(push 1)\n";
        auto sorts = var_sorts(f);
        for (auto& [n, s] : sorts)
            q << "(declare-fun " << quote(n) << " () " << (s == Sort::Array ? "(Array Int Int)" : "Int") << ")\n";
        std::map<std::string, size_t> funs;
        collect_apps(f, funs);
        for (auto& [n, k] : funs) {
            q << "(declare-fun " << quote(n) << " (";
            for (size_t i = 0; i < k; ++i) q << (i ? " Int" : "Int");
            q << ") Int)\n";
        }
        q << "(assert " << to_smtlib(f) << ")\n(check-sat)\n";
        send(q.str());
        std::string answer = read_sexpr();
        if (answer == "sat") {
            res.status = SatResult::Sat;
            std::vector<std::string> ints;
            for (auto& [n, s] : sorts)
                if (s == Sort::Int) ints.push_back(n);
            if (!ints.empty()) {
                std::ostringstream g;
                g << "(get-value (";
                for (auto& n : ints) g << quote(n) << " ";
                g << "))\n";
                send(g.str());
                std::string vals = read_sexpr();
                // ((x 1) (y (- 2)) ...)
                size_t pos = 1;
                for (auto& n : ints) {
                    size_t open = vals.find('(', pos);
                    if (open == std::string::npos) break;
                    int depth = 0;
                    size_t end = open;
                    for (; end < vals.size(); ++end) {
                        if (vals[end] == '(') ++depth;
                        else if (vals[end] == ')' && --depth == 0) break;
                    }
                    std::string item = vals.substr(open + 1, end - open - 1);
                    std::string qn = quote(n);
                    std::string rest = item.substr(item.find(qn) + qn.size());
                    res.model[n] = parse_value(rest);
                    pos = end + 1;
                }
            }
        } else if (answer == "unsat") {
            res.status = SatResult::Unsat;
        } else {
            res.status = SatResult::Unknown;
            res.reason = answer;
        }
        send("(pop 1)\n");
    } catch (const SolverError& e) {
        stop();
        res.status = SatResult::Unknown;
        res.reason = e.what();
    }
    return res;
}

// ---------------------------------------------------------------- cache

SatResult CachedSolver::check(const Expr& f) {
    if (enabled_) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find(f->key);
        if (it != cache_.end()) {
            ++hits_;
            return it->second;
        }
    }
    SatResult r = inner_->check(f);
    std::lock_guard<std::mutex> lock(mu_);
    ++misses_;
    if (enabled_ && r.status != SatResult::Unknown) cache_.emplace(f->key, r);
    return r;
}

std::shared_ptr<Solver> make_solver(const std::string& spec) {
    if (spec.empty() || spec == "builtin") return std::make_shared<CachedSolver>(std::make_shared<BuiltinSolver>());
    const std::string prefix = "external:";
    if (spec.rfind(prefix, 0) == 0)
        return std::make_shared<CachedSolver>(std::make_shared<ExternalSolver>(spec.substr(prefix.size())));
    throw std::invalid_argument("unknown solver backend: " + spec);
}

}  // namespace cfproto

#include "cfproto/formula.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "cfproto/linear.hpp"

namespace cfproto {

namespace {

const char* op_name(Op op) {
    switch (op) {
        case Op::Add: return "+";
        case Op::Mul: return "*";
        case Op::Select: return "select";
        case Op::Store: return "store";
        case Op::Ite: return "ite";
        case Op::Not: return "not";
        case Op::And: return "and";
        case Op::Or: return "or";
        case Op::Eq: return "=";
        case Op::Le: return "<=";
        case Op::Lt: return "<";
        default: return "?";
    }
}

Expr make(Op op, Sort sort, std::string name, std::int64_t val, std::vector<Expr> args) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->sort = sort;
    n->name = std::move(name);
    n->val = val;
    n->args = std::move(args);
    switch (op) {
        case Op::Int: n->key = std::to_string(val); break;
        case Op::Var: n->key = n->name; break;
        case Op::True: n->key = "true"; break;
        case Op::False: n->key = "false"; break;
        default: {
            std::string k = "(";
            if (op == Op::App) k += n->name;
            else if (op == Op::Mul) k += "* " + std::to_string(val);
            else k += op_name(op);
            for (auto& a : n->args) k += " " + a->key;
            k += ")";
            n->key = std::move(k);
        }
    }
    return n;
}

const Expr& true_node() {
    static const Expr t = make(Op::True, Sort::Bool, "", 0, {});
    return t;
}
const Expr& false_node() {
    static const Expr f = make(Op::False, Sort::Bool, "", 0, {});
    return f;
}

}  // namespace

Expr mk_int(std::int64_t v) { return make(Op::Int, Sort::Int, "", v, {}); }

Expr mk_var(const std::string& name, Sort s) { return make(Op::Var, s, name, 0, {}); }

Expr mk_add(std::vector<Expr> xs) {
    std::vector<Expr> flat;
    std::int64_t c = 0;
    for (auto& x : xs) {
        if (x->op == Op::Add) {
            for (auto& y : x->args) {
                if (y->op == Op::Int) c = add_ck(c, y->val);
                else flat.push_back(y);
            }
        } else if (x->op == Op::Int) {
            c = add_ck(c, x->val);
        } else {
            flat.push_back(x);
        }
    }
    if (c != 0) flat.push_back(mk_int(c));
    if (flat.empty()) return mk_int(0);
    if (flat.size() == 1) return flat[0];
    std::sort(flat.begin(), flat.end(), ExprLess{});
    return make(Op::Add, Sort::Int, "", 0, std::move(flat));
}

Expr mk_add(const Expr& a, const Expr& b) { return mk_add(std::vector<Expr>{a, b}); }

Expr mk_neg(const Expr& a) { return mk_scale(-1, a); }

Expr mk_sub(const Expr& a, const Expr& b) { return mk_add(a, mk_neg(b)); }

Expr mk_scale(std::int64_t c, const Expr& a) {
    if (c == 0) return mk_int(0);
    if (c == 1) return a;
    switch (a->op) {
        case Op::Int: return mk_int(mul_ck(c, a->val));
        case Op::Mul: return mk_scale(mul_ck(c, a->val), a->args[0]);
        case Op::Add: {
            std::vector<Expr> xs;
            for (auto& x : a->args) xs.push_back(mk_scale(c, x));
            return mk_add(std::move(xs));
        }
        default: return make(Op::Mul, Sort::Int, "", c, {a});
    }
}

Expr mk_mul(const Expr& a, const Expr& b) {
    if (a->op == Op::Int) return mk_scale(a->val, b);
    if (b->op == Op::Int) return mk_scale(b->val, a);
    std::vector<Expr> xs{a, b};
    std::sort(xs.begin(), xs.end(), ExprLess{});
    return mk_app("mul", std::move(xs));
}

Expr mk_app(const std::string& f, std::vector<Expr> args) {
    return make(Op::App, Sort::Int, f, 0, std::move(args));
}

Expr mk_select(const Expr& arr, const Expr& idx) { return make(Op::Select, Sort::Int, "", 0, {arr, idx}); }

Expr mk_store(const Expr& arr, const Expr& idx, const Expr& v) {
    return make(Op::Store, Sort::Array, "", 0, {arr, idx, v});
}

Expr mk_ite(const Expr& c, const Expr& t, const Expr& e) {
    if (is_true(c)) return t;
    if (is_false(c)) return e;
    if (t->key == e->key) return t;
    return make(Op::Ite, t->sort, "", 0, {c, t, e});
}

Expr mk_true() { return true_node(); }
Expr mk_false() { return false_node(); }
Expr mk_bool(bool b) { return b ? true_node() : false_node(); }

bool is_true(const Expr& e) { return e->op == Op::True; }
bool is_false(const Expr& e) { return e->op == Op::False; }
bool is_atom(const Expr& e) {
    return e->op == Op::Eq || e->op == Op::Le || e->op == Op::Lt || e->op == Op::True || e->op == Op::False;
}

Expr mk_not(const Expr& a) {
    if (a->op == Op::True) return mk_false();
    if (a->op == Op::False) return mk_true();
    if (a->op == Op::Not) return a->args[0];
    return make(Op::Not, Sort::Bool, "", 0, {a});
}

static Expr mk_junction(Op op, std::vector<Expr> xs) {
    const bool is_and = op == Op::And;
    std::vector<Expr> flat;
    for (auto& x : xs) {
        if (x->op == op) {
            for (auto& y : x->args) flat.push_back(y);
        } else {
            flat.push_back(x);
        }
    }
    std::vector<Expr> out;
    std::set<std::string> seen;
    for (auto& x : flat) {
        if (is_and ? is_true(x) : is_false(x)) continue;
        if (is_and ? is_false(x) : is_true(x)) return is_and ? mk_false() : mk_true();
        if (seen.insert(x->key).second) out.push_back(x);
    }
    for (auto& x : out) {
        std::string neg = x->op == Op::Not ? x->args[0]->key : "(not " + x->key + ")";
        if (seen.count(neg)) return is_and ? mk_false() : mk_true();
    }
    if (out.empty()) return is_and ? mk_true() : mk_false();
    if (out.size() == 1) return out[0];
    std::sort(out.begin(), out.end(), ExprLess{});
    return make(op, Sort::Bool, "", 0, std::move(out));
}

Expr mk_and(std::vector<Expr> xs) { return mk_junction(Op::And, std::move(xs)); }
Expr mk_and(const Expr& a, const Expr& b) { return mk_and(std::vector<Expr>{a, b}); }
Expr mk_or(std::vector<Expr> xs) { return mk_junction(Op::Or, std::move(xs)); }
Expr mk_or(const Expr& a, const Expr& b) { return mk_or(std::vector<Expr>{a, b}); }
Expr mk_implies(const Expr& a, const Expr& b) { return mk_or(mk_not(a), b); }

Expr mk_eq(const Expr& a, const Expr& b) {
    if (a->op == Op::Int && b->op == Op::Int) return mk_bool(a->val == b->val);
    if (a->key == b->key) return mk_true();
    if (a->sort == Sort::Bool) {
        return mk_and(mk_implies(a, b), mk_implies(b, a));
    }
    if (b->key < a->key) return make(Op::Eq, Sort::Bool, "", 0, {b, a});
    return make(Op::Eq, Sort::Bool, "", 0, {a, b});
}

Expr mk_ne(const Expr& a, const Expr& b) { return mk_not(mk_eq(a, b)); }

Expr mk_le(const Expr& a, const Expr& b) {
    if (a->op == Op::Int && b->op == Op::Int) return mk_bool(a->val <= b->val);
    if (a->key == b->key) return mk_true();
    return make(Op::Le, Sort::Bool, "", 0, {a, b});
}

Expr mk_lt(const Expr& a, const Expr& b) {
    if (a->op == Op::Int && b->op == Op::Int) return mk_bool(a->val < b->val);
    if (a->key == b->key) return mk_false();
    return make(Op::Lt, Sort::Bool, "", 0, {a, b});
}

Expr mk_ge(const Expr& a, const Expr& b) { return mk_le(b, a); }
Expr mk_gt(const Expr& a, const Expr& b) { return mk_lt(b, a); }

// ---------------------------------------------------------------- printing

namespace {

int prec(const Expr& e) {
    switch (e->op) {
        case Op::Or: return 1;
        case Op::And: return 2;
        case Op::Not: return 3;
        case Op::Eq: case Op::Le: case Op::Lt: return 4;
        case Op::Add: return 5;
        case Op::Mul: return 6;
        default: return 9;
    }
}

void print(std::ostream& os, const Expr& e, int ctx);

void print_sum(std::ostream& os, const Expr& e) {
    bool first = true;
    for (auto& a : e->args) {
        std::int64_t c = 1;
        Expr t = a;
        if (a->op == Op::Int) {
            c = a->val;
            t = nullptr;
        } else if (a->op == Op::Mul) {
            c = a->val;
            t = a->args[0];
        }
        bool neg = c < 0;
        std::int64_t mag = neg ? -c : c;
        if (first) os << (neg ? "-" : "");
        else os << (neg ? " - " : " + ");
        if (!t) os << mag;
        else {
            if (mag != 1) os << mag << "*";
            print(os, t, 6);
        }
        first = false;
    }
}

void print(std::ostream& os, const Expr& e, int ctx) {
    int p = prec(e);
    bool paren = p < ctx;
    if (paren) os << "(";
    switch (e->op) {
        case Op::Int: os << e->val; break;
        case Op::Var: os << e->name; break;
        case Op::True: os << "true"; break;
        case Op::False: os << "false"; break;
        case Op::Add: print_sum(os, e); break;
        case Op::Mul:
            os << e->val << "*";
            print(os, e->args[0], 7);
            break;
        case Op::App:
            os << e->name << "(";
            for (size_t i = 0; i < e->args.size(); ++i) {
                if (i) os << ", ";
                print(os, e->args[i], 0);
            }
            os << ")";
            break;
        case Op::Select:
            print(os, e->args[0], 9);
            os << "[";
            print(os, e->args[1], 0);
            os << "]";
            break;
        case Op::Store:
            os << "store(";
            print(os, e->args[0], 0);
            os << ", ";
            print(os, e->args[1], 0);
            os << ", ";
            print(os, e->args[2], 0);
            os << ")";
            break;
        case Op::Ite:
            os << "ite(";
            print(os, e->args[0], 0);
            os << ", ";
            print(os, e->args[1], 0);
            os << ", ";
            print(os, e->args[2], 0);
            os << ")";
            break;
        case Op::Not:
            if (e->args[0]->op == Op::Eq) {
                print(os, e->args[0]->args[0], 5);
                os << " != ";
                print(os, e->args[0]->args[1], 5);
            } else {
                os << "!";
                print(os, e->args[0], 4);
            }
            break;
        case Op::And:
        case Op::Or:
            for (size_t i = 0; i < e->args.size(); ++i) {
                if (i) os << (e->op == Op::And ? " && " : " || ");
                print(os, e->args[i], p + 1);
            }
            break;
        case Op::Eq:
        case Op::Le:
        case Op::Lt:
            print(os, e->args[0], 5);
            os << (e->op == Op::Eq ? " = " : e->op == Op::Le ? " <= " : " < ");
            print(os, e->args[1], 5);
            break;
    }
    if (paren) os << ")";
}

bool plain_symbol(const std::string& s) {
    if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) return false;
    for (char c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$')) return false;
    }
    return true;
}

void smt(std::ostream& os, const Expr& e) {
    switch (e->op) {
        case Op::Int:
            if (e->val < 0) os << "(- " << -e->val << ")";
            else os << e->val;
            return;
        case Op::Var:
            if (plain_symbol(e->name)) os << e->name;
            else os << "|" << e->name << "|";
            return;
        case Op::True: os << "true"; return;
        case Op::False: os << "false"; return;
        case Op::Mul:
            os << "(* ";
            smt(os, mk_int(e->val));
            os << " ";
            smt(os, e->args[0]);
            os << ")";
            return;
        case Op::App:
            os << "(" << (plain_symbol(e->name) ? e->name : "|" + e->name + "|");
            break;
        default:
            os << "(" << op_name(e->op);
    }
    for (auto& a : e->args) {
        os << " ";
        smt(os, a);
    }
    os << ")";
}

}  // namespace

std::string to_string(const Expr& e) {
    std::ostringstream os;
    print(os, e, 0);
    return os.str();
}

std::string to_smtlib(const Expr& e) {
    std::ostringstream os;
    smt(os, e);
    return os.str();
}

std::vector<Expr> conjuncts(const Expr& e) {
    if (is_true(e)) return {};
    if (e->op == Op::And) return e->args;
    return {e};
}

void collect_vars(const Expr& e, std::set<std::string>& out) {
    if (e->op == Op::Var) {
        out.insert(e->name);
        return;
    }
    for (auto& a : e->args) collect_vars(a, out);
}

std::set<std::string> free_vars(const Expr& e) {
    std::set<std::string> s;
    collect_vars(e, s);
    return s;
}

static void sorts_rec(const Expr& e, std::map<std::string, Sort>& out) {
    if (e->op == Op::Var) {
        out[e->name] = e->sort;
        return;
    }
    for (auto& a : e->args) sorts_rec(a, out);
}

std::map<std::string, Sort> var_sorts(const Expr& e) {
    std::map<std::string, Sort> m;
    sorts_rec(e, m);
    return m;
}

bool mentions(const Expr& e, const std::string& var) {
    if (e->op == Op::Var) return e->name == var;
    for (auto& a : e->args)
        if (mentions(a, var)) return true;
    return false;
}

static Expr rebuild(const Expr& e, std::vector<Expr> args) {
    switch (e->op) {
        case Op::Add: return mk_add(std::move(args));
        case Op::Mul: return mk_scale(e->val, args[0]);
        case Op::App:
            if (e->name == "mul" && args.size() == 2) return mk_mul(args[0], args[1]);
            return mk_app(e->name, std::move(args));
        case Op::Select: return mk_select(args[0], args[1]);
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

Expr substitute(const Expr& e, const std::map<std::string, Expr>& sub) {
    if (e->op == Op::Var) {
        auto it = sub.find(e->name);
        return it == sub.end() ? e : it->second;
    }
    if (e->args.empty()) return e;
    std::vector<Expr> args;
    args.reserve(e->args.size());
    bool changed = false;
    for (auto& a : e->args) {
        args.push_back(substitute(a, sub));
        changed |= args.back() != a;
    }
    return changed ? rebuild(e, std::move(args)) : e;
}

Expr rename(const Expr& e, const std::function<std::string(const std::string&)>& f) {
    if (e->op == Op::Var) {
        std::string n = f(e->name);
        return n == e->name ? e : mk_var(n, e->sort);
    }
    if (e->args.empty()) return e;
    std::vector<Expr> args;
    bool changed = false;
    for (auto& a : e->args) {
        args.push_back(rename(a, f));
        changed |= args.back() != a;
    }
    return changed ? rebuild(e, std::move(args)) : e;
}

Expr rename(const Expr& e, const std::map<std::string, std::string>& ren) {
    return rename(e, [&](const std::string& n) {
        auto it = ren.find(n);
        return it == ren.end() ? n : it->second;
    });
}

// ---------------------------------------------------------------- normal form

namespace {

// wildcard symbols sort last so they land on the right of "="
bool term_before(const Expr& a, const Expr& b) {
    bool wa = a->op == Op::Var && !a->name.empty() && a->name[0] == '$';
    bool wb = b->op == Op::Var && !b->name.empty() && b->name[0] == '$';
    if (wa != wb) return !wa;
    return a->key < b->key;
}

Expr side(const std::vector<std::pair<Expr, std::int64_t>>& terms, std::int64_t c) {
    std::vector<Expr> xs;
    for (auto& [t, k] : terms) xs.push_back(mk_scale(k, t));
    if (c != 0) xs.push_back(mk_int(c));
    if (xs.empty()) return mk_int(0);
    if (xs.size() == 1) return xs[0];
    // keep display order instead of key order
    std::string key = "(+";
    for (auto& x : xs) key += " " + x->key;
    key += ")";
    auto n = std::make_shared<Node>();
    n->op = Op::Add;
    n->sort = Sort::Int;
    n->args = std::move(xs);
    n->key = std::move(key);
    return n;
}

}  // namespace

Expr normalize_atom(const Expr& atom) {
    if (atom->op != Op::Eq && atom->op != Op::Le && atom->op != Op::Lt) return atom;
    if (atom->args[0]->sort != Sort::Int) return atom;
    LinForm f = linearize(mk_sub(atom->args[0], atom->args[1]));
    if (atom->op == Op::Lt) f.constant = add_ck(f.constant, 1);  // t < 0  <=>  t + 1 <= 0
    if (f.is_const()) {
        if (atom->op == Op::Eq) return mk_bool(f.constant == 0);
        return mk_bool(f.constant <= 0);
    }
    std::vector<std::pair<Expr, std::int64_t>> terms(f.coeffs.begin(), f.coeffs.end());
    std::sort(terms.begin(), terms.end(), [](auto& x, auto& y) { return term_before(x.first, y.first); });
    std::int64_t g = 0;
    for (auto& t : terms) g = gcd64(g, t.second);
    if (atom->op == Op::Eq) {
        if (f.constant % g != 0) return mk_false();
        std::int64_t sgn = terms[0].second < 0 ? -1 : 1;
        for (auto& t : terms) t.second = t.second / g * sgn;
        f.constant = f.constant / g * sgn;
    } else {
        for (auto& t : terms) t.second /= g;
        // g*t + c <= 0  <=>  t <= floor(-c/g)
        f.constant = -floor_div(-f.constant, g);
    }
    std::vector<std::pair<Expr, std::int64_t>> lhs, rhs;
    for (auto& [t, k] : terms) {
        if (k > 0) lhs.push_back({t, k});
        else rhs.push_back({t, -k});
    }
    Expr l = side(lhs, 0);
    Expr r = side(rhs, f.constant == 0 ? 0 : -f.constant);
    auto n = std::make_shared<Node>();
    n->op = atom->op == Op::Eq ? Op::Eq : Op::Le;
    n->sort = Sort::Bool;
    n->args = {l, r};
    n->key = std::string(n->op == Op::Eq ? "(= " : "(<= ") + l->key + " " + r->key + ")";
    return n;
}

Expr normalize(const Expr& e) {
    switch (e->op) {
        case Op::Eq:
        case Op::Le:
        case Op::Lt: return normalize_atom(e);
        case Op::Not: {
            Expr a = normalize(e->args[0]);
            if (a->op == Op::Le) {
                // !(l <= r)  <=>  r + 1 <= l
                return normalize_atom(mk_le(mk_add(a->args[1], mk_int(1)), a->args[0]));
            }
            return mk_not(a);
        }
        case Op::And:
        case Op::Or: {
            std::vector<Expr> xs;
            for (auto& a : e->args) xs.push_back(normalize(a));
            return e->op == Op::And ? mk_and(std::move(xs)) : mk_or(std::move(xs));
        }
        default: return e;
    }
}

// ---------------------------------------------------------------- evaluation

static std::map<std::int64_t, std::int64_t> eval_array(const Expr& e, const Valuation& v) {
    if (e->op == Op::Var) {
        auto it = v.arrays.find(e->name);
        return it == v.arrays.end() ? std::map<std::int64_t, std::int64_t>{} : it->second;
    }
    if (e->op == Op::Store) {
        auto m = eval_array(e->args[0], v);
        m[eval_int(e->args[1], v)] = eval_int(e->args[2], v);
        return m;
    }
    if (e->op == Op::Ite) return eval_bool(e->args[0], v) ? eval_array(e->args[1], v) : eval_array(e->args[2], v);
    throw std::runtime_error("eval: not an array term: " + to_string(e));
}

std::int64_t eval_int(const Expr& e, const Valuation& v) {
    switch (e->op) {
        case Op::Int: return e->val;
        case Op::Var: {
            auto it = v.ints.find(e->name);
            return it == v.ints.end() ? 0 : it->second;
        }
        case Op::Add: {
            std::int64_t s = 0;
            for (auto& a : e->args) s = add_ck(s, eval_int(a, v));
            return s;
        }
        case Op::Mul: return mul_ck(e->val, eval_int(e->args[0], v));
        case Op::App: {
            std::vector<std::int64_t> xs;
            for (auto& a : e->args) xs.push_back(eval_int(a, v));
            if (e->name == "mul" && xs.size() == 2) return mul_ck(xs[0], xs[1]);
            auto it = v.funs.find(e->name);
            if (it == v.funs.end()) return 0;
            auto jt = it->second.find(xs);
            return jt == it->second.end() ? 0 : jt->second;
        }
        case Op::Select: {
            auto m = eval_array(e->args[0], v);
            auto it = m.find(eval_int(e->args[1], v));
            return it == m.end() ? 0 : it->second;
        }
        case Op::Ite: return eval_bool(e->args[0], v) ? eval_int(e->args[1], v) : eval_int(e->args[2], v);
        default: throw std::runtime_error("eval: not an integer term: " + to_string(e));
    }
}

bool eval_bool(const Expr& e, const Valuation& v) {
    switch (e->op) {
        case Op::True: return true;
        case Op::False: return false;
        case Op::Not: return !eval_bool(e->args[0], v);
        case Op::And:
            for (auto& a : e->args)
                if (!eval_bool(a, v)) return false;
            return true;
        case Op::Or:
            for (auto& a : e->args)
                if (eval_bool(a, v)) return true;
            return false;
        case Op::Eq:
            if (e->args[0]->sort == Sort::Array) return eval_array(e->args[0], v) == eval_array(e->args[1], v);
            return eval_int(e->args[0], v) == eval_int(e->args[1], v);
        case Op::Le: return eval_int(e->args[0], v) <= eval_int(e->args[1], v);
        case Op::Lt: return eval_int(e->args[0], v) < eval_int(e->args[1], v);
        default: throw std::runtime_error("eval: not a formula: " + to_string(e));
    }
}

}  // namespace cfproto

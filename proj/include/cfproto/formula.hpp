#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace cfproto {

enum class Op : std::uint8_t {
    Int, Var, Add, Mul, App, Select, Store, Ite,
    True, False, Not, And, Or, Eq, Le, Lt
};

enum class Sort : std::uint8_t { Int, Bool, Array };

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
    Op op;
    Sort sort;
    std::string name;          // Var / App symbol
    std::int64_t val = 0;      // Int literal, Mul coefficient
    std::vector<Expr> args;
    std::string key;           // canonical s-expression
};

struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return a->key < b->key; }
};
using ExprSet = std::set<Expr, ExprLess>;

// builders (light simplification only)
Expr mk_int(std::int64_t v);
Expr mk_var(const std::string& name, Sort s = Sort::Int);
Expr mk_add(std::vector<Expr> xs);
Expr mk_add(const Expr& a, const Expr& b);
Expr mk_sub(const Expr& a, const Expr& b);
Expr mk_neg(const Expr& a);
Expr mk_scale(std::int64_t c, const Expr& a);
Expr mk_mul(const Expr& a, const Expr& b);   // var*var becomes uninterpreted "mul"
Expr mk_app(const std::string& f, std::vector<Expr> args);
Expr mk_select(const Expr& arr, const Expr& idx);
Expr mk_store(const Expr& arr, const Expr& idx, const Expr& v);
Expr mk_ite(const Expr& c, const Expr& t, const Expr& e);

Expr mk_true();
Expr mk_false();
Expr mk_bool(bool b);
Expr mk_not(const Expr& a);
Expr mk_and(std::vector<Expr> xs);
Expr mk_and(const Expr& a, const Expr& b);
Expr mk_or(std::vector<Expr> xs);
Expr mk_or(const Expr& a, const Expr& b);
Expr mk_implies(const Expr& a, const Expr& b);
Expr mk_eq(const Expr& a, const Expr& b);
Expr mk_ne(const Expr& a, const Expr& b);
Expr mk_le(const Expr& a, const Expr& b);
Expr mk_lt(const Expr& a, const Expr& b);
Expr mk_ge(const Expr& a, const Expr& b);
Expr mk_gt(const Expr& a, const Expr& b);

bool is_true(const Expr& e);
bool is_false(const Expr& e);
bool is_atom(const Expr& e);   // Eq / Le / Lt or a boolean constant

std::string to_string(const Expr& e);   // infix, for humans
std::string to_smtlib(const Expr& e);   // SMT-LIB term

// top-level conjuncts (And flattened); true yields {}
std::vector<Expr> conjuncts(const Expr& e);

void collect_vars(const Expr& e, std::set<std::string>& out);
std::set<std::string> free_vars(const Expr& e);
std::map<std::string, Sort> var_sorts(const Expr& e);
bool mentions(const Expr& e, const std::string& var);

Expr substitute(const Expr& e, const std::map<std::string, Expr>& sub);
Expr rename(const Expr& e, const std::map<std::string, std::string>& ren);
Expr rename(const Expr& e, const std::function<std::string(const std::string&)>& f);

// Arithmetic atom normal form: collect linear terms, move everything to one side,
// fix sign so predicates print stably ("l1_acq = $1", not "$1 = l1_acq").
Expr normalize_atom(const Expr& atom);
Expr normalize(const Expr& e);

// concrete evaluation; missing vars read as 0, arrays as all-zero maps
struct Valuation {
    std::map<std::string, std::int64_t> ints;
    std::map<std::string, std::map<std::int64_t, std::int64_t>> arrays;
    std::map<std::string, std::map<std::vector<std::int64_t>, std::int64_t>> funs;
};
std::int64_t eval_int(const Expr& e, const Valuation& v);
bool eval_bool(const Expr& e, const Valuation& v);

}  // namespace cfproto

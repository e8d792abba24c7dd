#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cfproto::ast {

// source position; never part of structural equality
struct Loc {
    int line = 0, col = 0;
    friend bool operator==(const Loc&, const Loc&) { return true; }
};

struct Exp {
    enum Kind { Var, Load, Const, Star, Add, Sub, Mul } kind = Const;
    std::string name;   // Var; Load base
    std::string field;  // Load
    std::int64_t val = 0;
    std::vector<Exp> kids;
    Loc loc;
    bool operator==(const Exp&) const = default;

    static Exp var(std::string n) { return {Var, std::move(n), {}, 0, {}, {}}; }
    static Exp num(std::int64_t v) { return {Const, {}, {}, v, {}, {}}; }
    static Exp star() { return {Star, {}, {}, 0, {}, {}}; }
};

struct Pred {
    // Truth: es[0] != 0; a bare `*` is a nondeterministic choice
    enum Kind { Truth, Not, And, Or, Lt, Gt, Eq, Le, Ge, Ne } kind = Truth;
    std::vector<Exp> es;
    std::vector<Pred> ps;
    bool operator==(const Pred&) const = default;

    bool is_star() const { return kind == Truth && es.size() == 1 && es[0].kind == Exp::Star; }
    static Pred cmp(Kind k, Exp a, Exp b) { return {k, {std::move(a), std::move(b)}, {}}; }
    static Pred truth(Exp e) { return {Truth, {std::move(e)}, {}}; }
    static Pred tt() { return truth(Exp::num(1)); }
};

struct Stmt {
    enum Kind { Skip, Seq, Assign, Store, Assume, If, New, Call, ApiCall } kind = Skip;
    std::string var;    // Assign/Store/New target; Call/ApiCall receiver ("" if none)
    std::string field;  // Store
    std::string name;   // New: class; Call/ApiCall: method
    Exp e;              // Assign/Store rhs
    Pred p;             // Assume/If
    std::vector<Stmt> body;  // Seq items; If: {then, else}
    std::vector<Exp> args;   // Call/ApiCall: Var or Const
    Loc loc;
    bool operator==(const Stmt&) const = default;

    static Stmt skip() { return {}; }
    static Stmt seq(std::vector<Stmt> ss) {
        Stmt s;
        s.kind = Seq;
        s.body = std::move(ss);
        return s;
    }
};

struct Param {
    std::string name, type;
    bool operator==(const Param&) const = default;
};

struct Field {
    std::string name, type;
    bool is_static = false;
    Exp init;
    Loc loc;
    bool operator==(const Field&) const = default;
};

struct Method {
    std::string name;
    std::vector<Param> params;
    Stmt body;
    std::vector<std::pair<std::string, std::string>> ghosts;  // (ghost, param) symbolic constants
    Loc loc;
    bool operator==(const Method&) const = default;
};

struct Class {
    std::string name;
    std::vector<Field> fields;
    std::vector<Method> methods;
    Loc loc;
    bool operator==(const Class&) const = default;
};

struct Program {
    std::vector<Class> classes;
    std::string entry = "main";
    bool operator==(const Program&) const = default;

    const Method* method(const std::string& n) const;
    Method* method(const std::string& n);
    std::vector<const Method*> methods() const;   // declaration order
    std::vector<const Field*> statics() const;    // static fields, declaration order
    const Field* instance_field(const std::string& n) const;
    const Class* cls(const std::string& n) const;
};

std::string to_string(const Exp& e);
std::string to_string(const Pred& p);
// one-line rendering of an atomic statement (no nested bodies)
std::string head_string(const Stmt& s);
std::string to_source(const Program& p);

}  // namespace cfproto::ast

#include "cfproto/ast.hpp"

#include <sstream>

namespace cfproto::ast {

const Method* Program::method(const std::string& n) const {
    for (auto& c : classes)
        for (auto& m : c.methods)
            if (m.name == n) return &m;
    return nullptr;
}

Method* Program::method(const std::string& n) {
    for (auto& c : classes)
        for (auto& m : c.methods)
            if (m.name == n) return &m;
    return nullptr;
}

std::vector<const Method*> Program::methods() const {
    std::vector<const Method*> out;
    for (auto& c : classes)
        for (auto& m : c.methods) out.push_back(&m);
    return out;
}

std::vector<const Field*> Program::statics() const {
    std::vector<const Field*> out;
    for (auto& c : classes)
        for (auto& f : c.fields)
            if (f.is_static) out.push_back(&f);
    return out;
}

const Field* Program::instance_field(const std::string& n) const {
    for (auto& c : classes)
        for (auto& f : c.fields)
            if (!f.is_static && f.name == n) return &f;
    return nullptr;
}

const Class* Program::cls(const std::string& n) const {
    for (auto& c : classes)
        if (c.name == n) return &c;
    return nullptr;
}

namespace {

int level(const Exp& e) {
    switch (e.kind) {
        case Exp::Add:
        case Exp::Sub: return 1;
        case Exp::Mul: return 2;
        case Exp::Const: return e.val < 0 ? 2 : 3;
        default: return 3;
    }
}

std::string paren_if(const Exp& e, bool p) { return p ? "(" + to_string(e) + ")" : to_string(e); }

int plevel(const Pred& p) {
    switch (p.kind) {
        case Pred::Or: return 1;
        case Pred::And: return 2;
        default: return 3;
    }
}

std::string pparen_if(const Pred& p, bool b) { return b ? "(" + to_string(p) + ")" : to_string(p); }

}  // namespace

std::string to_string(const Exp& e) {
    switch (e.kind) {
        case Exp::Var: return e.name;
        case Exp::Load: return e.name + "." + e.field;
        case Exp::Const: return std::to_string(e.val);
        case Exp::Star: return "*";
        case Exp::Add:
        case Exp::Sub:
        case Exp::Mul: {
            int l = level(e);
            const char* op = e.kind == Exp::Add ? " + " : e.kind == Exp::Sub ? " - " : " * ";
            return paren_if(e.kids[0], level(e.kids[0]) < l) + op + paren_if(e.kids[1], level(e.kids[1]) <= l);
        }
    }
    return "?";
}

std::string to_string(const Pred& p) {
    static const char* ops[] = {"", "", "", "", " < ", " > ", " == ", " <= ", " >= ", " != "};
    switch (p.kind) {
        case Pred::Truth: return to_string(p.es[0]);
        case Pred::Not: return "!(" + to_string(p.ps[0]) + ")";
        case Pred::And:
        case Pred::Or: {
            int l = plevel(p);
            return pparen_if(p.ps[0], plevel(p.ps[0]) < l) + (p.kind == Pred::And ? " && " : " || ") +
                   pparen_if(p.ps[1], plevel(p.ps[1]) <= l);
        }
        default: return to_string(p.es[0]) + ops[p.kind] + to_string(p.es[1]);
    }
}

static std::string args_string(const std::vector<Exp>& args) {
    std::string s;
    for (size_t i = 0; i < args.size(); ++i) s += (i ? ", " : "") + to_string(args[i]);
    return s;
}

std::string head_string(const Stmt& s) {
    switch (s.kind) {
        case Stmt::Skip: return "skip";
        case Stmt::Seq: return "{...}";
        case Stmt::Assign: return s.var + " := " + to_string(s.e);
        case Stmt::Store: return s.var + "." + s.field + " := " + to_string(s.e);
        case Stmt::Assume: return "assume(" + to_string(s.p) + ")";
        case Stmt::If: return "if (" + to_string(s.p) + ")";
        case Stmt::New: return s.var + " := new " + s.name;
        case Stmt::Call: return "call " + (s.var.empty() ? "" : s.var + ".") + s.name + "(" + args_string(s.args) + ")";
        case Stmt::ApiCall: return "api_call " + s.var + "." + s.name + "(" + args_string(s.args) + ")";
    }
    return "?";
}

namespace {

void emit(std::ostringstream& os, const Stmt& s, int ind);

void emit_block(std::ostringstream& os, const Stmt& s, int ind) {
    os << "{\n";
    if (s.kind != Stmt::Skip) emit(os, s, ind + 1);
    os << std::string(ind * 2, ' ') << "}";
}

void emit(std::ostringstream& os, const Stmt& s, int ind) {
    std::string pad(ind * 2, ' ');
    switch (s.kind) {
        case Stmt::Seq:
            for (auto& x : s.body) emit(os, x, ind);
            return;
        case Stmt::If: {
            os << pad << "if (" << to_string(s.p) << ") ";
            emit_block(os, s.body[0], ind);
            const Stmt* el = &s.body[1];
            while (el->kind == Stmt::If) {
                os << " else if (" << to_string(el->p) << ") ";
                emit_block(os, el->body[0], ind);
                el = &el->body[1];
            }
            if (el->kind != Stmt::Skip) {
                os << " else ";
                emit_block(os, *el, ind);
            }
            os << "\n";
            return;
        }
        default: os << pad << head_string(s) << ";\n";
    }
}

}  // namespace

std::string to_source(const Program& p) {
    std::ostringstream os;
    for (auto& c : p.classes) {
        os << "class " << c.name << " {\n";
        for (auto& f : c.fields)
            os << "  " << (f.is_static ? "static " : "") << f.type << " " << f.name << " = " << to_string(f.init) << ";\n";
        for (auto& m : c.methods) {
            os << "  void " << m.name << "(";
            for (size_t i = 0; i < m.params.size(); ++i)
                os << (i ? ", " : "") << m.params[i].type << " " << m.params[i].name;
            os << ") ";
            emit_block(os, m.body, 1);
            os << "\n";
        }
        os << "}\n";
    }
    return os.str();
}

}  // namespace cfproto::ast

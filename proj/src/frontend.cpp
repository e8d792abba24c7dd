#include "cfproto/frontend.hpp"

#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

namespace cfproto {

using namespace ast;

// ---------------------------------------------------------------- lexer

namespace {

struct Tok {
    enum Kind { Ident, Int, Punct, End } kind = End;
    std::string text;
    std::int64_t val = 0;
    int line = 1, col = 1;
};

std::vector<Tok> lex(const std::string& src) {
    std::vector<Tok> out;
    size_t i = 0;
    int line = 1, col = 1;
    auto adv = [&](size_t k = 1) {
        for (size_t j = 0; j < k && i < src.size(); ++j, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else
                ++col;
        }
    };
    static const char* puncts[] = {":=", "->", "==", "!=", "<=", ">=", "&&", "||", "{", "}", "(", ")", ";", ",",
                                   ".",  ":",  "=",  "<",  ">",  "!",  "+",  "-",  "*", "|"};
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            adv();
            continue;
        }
        if (src.compare(i, 2, "//") == 0) {
            while (i < src.size() && src[i] != '\n') adv();
            continue;
        }
        if (src.compare(i, 2, "/*") == 0) {
            int l0 = line, c0 = col;
            adv(2);
            while (i < src.size() && src.compare(i, 2, "*/") != 0) adv();
            if (i >= src.size()) throw ParseError(l0, c0, "unterminated comment");
            adv(2);
            continue;
        }
        Tok t;
        t.line = line;
        t.col = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
            size_t j = i + 1;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
            t.kind = Tok::Ident;
            t.text = src.substr(i, j - i);
            if (t.text == "$") throw ParseError(line, col, "bare '$'");
            adv(j - i);
            out.push_back(t);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            t.kind = Tok::Int;
            t.text = src.substr(i, j - i);
            try {
                t.val = std::stoll(t.text);
            } catch (...) {
                throw ParseError(line, col, "integer literal out of range");
            }
            adv(j - i);
            out.push_back(t);
            continue;
        }
        bool hit = false;
        for (const char* p : puncts) {
            size_t n = std::char_traits<char>::length(p);
            if (src.compare(i, n, p) == 0) {
                t.kind = Tok::Punct;
                t.text = p;
                adv(n);
                out.push_back(t);
                hit = true;
                break;
            }
        }
        if (!hit) throw ParseError(line, col, std::string("unexpected character '") + c + "'");
    }
    Tok end;
    end.line = line;
    end.col = col;
    out.push_back(end);
    return out;
}

struct Parser {
    std::vector<Tok> toks;
    size_t pos = 0;

    const Tok& peek(size_t k = 0) const { return toks[std::min(pos + k, toks.size() - 1)]; }
    bool is(const char* p, size_t k = 0) const { return peek(k).kind == Tok::Punct && peek(k).text == p; }
    bool is_kw(const char* w, size_t k = 0) const { return peek(k).kind == Tok::Ident && peek(k).text == w; }
    [[noreturn]] void fail(const std::string& msg) const {
        const Tok& t = peek();
        std::string near = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
        throw ParseError(t.line, t.col, msg + " near " + near);
    }
    void expect(const char* p) {
        if (!is(p)) fail(std::string("expected '") + p + "'");
        ++pos;
    }
    void expect_kw(const char* w) {
        if (!is_kw(w)) fail(std::string("expected '") + w + "'");
        ++pos;
    }
    bool accept(const char* p) {
        if (!is(p)) return false;
        ++pos;
        return true;
    }
    std::string ident(const char* what) {
        if (peek().kind != Tok::Ident) fail(std::string("expected ") + what);
        return toks[pos++].text;
    }
    Loc loc() const { return {peek().line, peek().col}; }

    // ---- expressions
    Exp primary() {
        Loc l = loc();
        Exp e;
        if (peek().kind == Tok::Int) {
            e = Exp::num(toks[pos++].val);
        } else if (accept("*")) {
            e = Exp::star();
        } else if (is_kw("true")) {
            ++pos;
            e = Exp::num(1);
        } else if (is_kw("false") || is_kw("null")) {
            ++pos;
            e = Exp::num(0);
        } else if (peek().kind == Tok::Ident) {
            std::string n = toks[pos++].text;
            if (accept(".")) {
                e.kind = Exp::Load;
                e.name = n;
                e.field = ident("field name");
            } else {
                e = Exp::var(n);
            }
        } else if (accept("(")) {
            e = exp();
            expect(")");
        } else {
            fail("expected expression");
        }
        e.loc = l;
        return e;
    }
    Exp unary() {
        if (is("-")) {
            Loc l = loc();
            ++pos;
            if (peek().kind == Tok::Int) {
                Exp e = Exp::num(-toks[pos++].val);
                e.loc = l;
                return e;
            }
            Exp e{Exp::Sub, {}, {}, 0, {Exp::num(0), unary()}, l};
            return e;
        }
        return primary();
    }
    Exp term() {
        Exp e = unary();
        while (is("*")) {
            Loc l = loc();
            ++pos;
            e = Exp{Exp::Mul, {}, {}, 0, {e, unary()}, l};
        }
        return e;
    }
    Exp exp() {
        Exp e = term();
        while (is("+") || is("-")) {
            Loc l = loc();
            auto k = is("+") ? Exp::Add : Exp::Sub;
            ++pos;
            e = Exp{k, {}, {}, 0, {e, term()}, l};
        }
        return e;
    }

    // ---- predicates
    bool cmp_ahead(Pred::Kind& k) const {
        static const std::pair<const char*, Pred::Kind> ops[] = {{"==", Pred::Eq}, {"=", Pred::Eq}, {"!=", Pred::Ne},
                                                                 {"<=", Pred::Le}, {">=", Pred::Ge}, {"<", Pred::Lt},
                                                                 {">", Pred::Gt}};
        for (auto& [s, kk] : ops)
            if (is(s)) {
                k = kk;
                return true;
            }
        return false;
    }
    Pred atom() {
        if (is("(")) {
            // parenthesized predicate unless it turns out to be an arithmetic operand
            size_t save = pos;
            try {
                ++pos;
                Pred p = pred();
                expect(")");
                Pred::Kind k;
                if (!cmp_ahead(k) && !is("+") && !is("-") && !is("*")) return p;
            } catch (const ParseError&) {
            }
            pos = save;
        }
        Exp a = exp();
        Pred::Kind k;
        if (cmp_ahead(k)) {
            ++pos;
            return Pred::cmp(k, a, exp());
        }
        return Pred::truth(a);
    }
    Pred negation() {
        if (accept("!")) return Pred{Pred::Not, {}, {negation()}};
        return atom();
    }
    Pred conj() {
        Pred p = negation();
        while (accept("&&")) p = Pred{Pred::And, {}, {p, negation()}};
        return p;
    }
    Pred pred() {
        Pred p = conj();
        while (accept("||")) p = Pred{Pred::Or, {}, {p, conj()}};
        return p;
    }

    // ---- statements
    Exp arg() {
        Exp e = unary();
        if (e.kind != Exp::Var && e.kind != Exp::Const) fail("call arguments must be variables or constants");
        return e;
    }
    std::vector<Exp> args() {
        std::vector<Exp> out;
        expect("(");
        if (!is(")")) {
            out.push_back(arg());
            while (accept(",")) out.push_back(arg());
        }
        expect(")");
        return out;
    }
    Stmt block() {
        expect("{");
        std::vector<Stmt> ss;
        while (!is("}")) {
            if (peek().kind == Tok::End) fail("unterminated block");
            ss.push_back(stmt());
        }
        ++pos;
        if (ss.empty()) return Stmt::skip();
        if (ss.size() == 1) return ss[0];
        return Stmt::seq(std::move(ss));
    }
    Stmt body_or_stmt() { return is("{") ? block() : stmt(); }
    Stmt stmt() {
        Stmt s;
        s.loc = loc();
        if (is_kw("skip")) {
            ++pos;
            expect(";");
        } else if (is_kw("assume")) {
            ++pos;
            s.kind = Stmt::Assume;
            expect("(");
            s.p = pred();
            expect(")");
            expect(";");
        } else if (is_kw("if")) {
            ++pos;
            s.kind = Stmt::If;
            expect("(");
            s.p = pred();
            expect(")");
            s.body.push_back(body_or_stmt());
            if (is_kw("else")) {
                ++pos;
                s.body.push_back(body_or_stmt());
            } else {
                s.body.push_back(Stmt::skip());
            }
        } else if (is_kw("call") || is_kw("api_call")) {
            s.kind = is_kw("call") ? Stmt::Call : Stmt::ApiCall;
            ++pos;
            std::string a = ident("method or receiver");
            if (accept(".")) {
                s.var = a;
                s.name = ident("method name");
            } else {
                if (s.kind == Stmt::ApiCall) fail("api_call needs a receiver");
                s.name = a;
            }
            s.args = args();
            expect(";");
        } else if (peek().kind == Tok::Ident) {
            s.var = ident("variable");
            if (accept(".")) {
                s.kind = Stmt::Store;
                s.field = ident("field name");
                expect(":=");
                s.e = exp();
            } else {
                expect(":=");
                if (is_kw("new")) {
                    ++pos;
                    s.kind = Stmt::New;
                    s.name = ident("class name");
                } else {
                    s.kind = Stmt::Assign;
                    s.e = exp();
                }
            }
            expect(";");
        } else {
            fail("expected statement");
        }
        return s;
    }

    // ---- declarations
    Class cls() {
        Class c;
        c.loc = loc();
        expect_kw("class");
        c.name = ident("class name");
        expect("{");
        while (!is("}")) {
            if (peek().kind == Tok::End) fail("unterminated class");
            Loc l = loc();
            if (is_kw("void")) {
                ++pos;
                Method m;
                m.loc = l;
                m.name = ident("method name");
                expect("(");
                if (!is(")")) {
                    do {
                        Param p;
                        p.type = ident("parameter type");
                        p.name = ident("parameter name");
                        m.params.push_back(p);
                    } while (accept(","));
                }
                expect(")");
                m.body = block();
                c.methods.push_back(std::move(m));
            } else {
                Field f;
                f.loc = l;
                if (is_kw("static")) {
                    ++pos;
                    f.is_static = true;
                }
                f.type = ident("field type");
                f.name = ident("field name");
                f.init = accept("=") ? exp() : Exp::num(0);
                expect(";");
                c.fields.push_back(std::move(f));
            }
        }
        ++pos;
        return c;
    }
};

}  // namespace

// ---------------------------------------------------------------- program checks

namespace {

void collect_assigned(const Stmt& s, std::set<std::string>& out) {
    if (s.kind == Stmt::Assign || s.kind == Stmt::New) out.insert(s.var);
    for (auto& b : s.body) collect_assigned(b, out);
}

struct Checker {
    const Program& p;
    std::set<std::string> vars;

    void fail(const std::string& id, const std::string& msg) const { throw ResolveError(id, msg); }
    void var(const std::string& v) const {
        if (!vars.count(v)) fail(v, "unresolved variable '" + v + "'");
    }
    void field(const std::string& f) const {
        if (!p.instance_field(f)) fail(f, "unknown instance field '" + f + "'");
    }
    void exp(const Exp& e) const {
        if (e.kind == Exp::Var) var(e.name);
        if (e.kind == Exp::Load) {
            var(e.name);
            field(e.field);
        }
        for (auto& k : e.kids) exp(k);
    }
    void pred(const Pred& q) const {
        for (auto& e : q.es) exp(e);
        for (auto& x : q.ps) pred(x);
    }
    void stmt(const Stmt& s) const {
        switch (s.kind) {
            case Stmt::Assign: exp(s.e); break;
            case Stmt::Store:
                var(s.var);
                field(s.field);
                exp(s.e);
                break;
            case Stmt::Assume:
            case Stmt::If: pred(s.p); break;
            case Stmt::New:
                if (!p.cls(s.name)) fail(s.name, "unknown class '" + s.name + "'");
                break;
            case Stmt::Call: {
                const Method* m = p.method(s.name);
                if (!m) fail(s.name, "call to undefined method '" + s.name + "'");
                if (m->params.size() != s.args.size()) fail(s.name, "arity mismatch in call to '" + s.name + "'");
                if (!s.var.empty()) var(s.var);
                for (auto& a : s.args) exp(a);
                break;
            }
            case Stmt::ApiCall:
                if (p.method(s.name)) fail(s.name, "api_call target '" + s.name + "' is defined in the program");
                var(s.var);
                for (auto& a : s.args) exp(a);
                break;
            default: break;
        }
        for (auto& b : s.body) stmt(b);
    }
};

}  // namespace

void check_program(const Program& p) {
    std::set<std::string> names, classes;
    int mains = 0;
    for (auto& c : p.classes) {
        if (!classes.insert(c.name).second) throw ResolveError(c.name, "duplicate class '" + c.name + "'");
        for (auto& m : c.methods) {
            if (!names.insert(m.name).second) throw ResolveError(m.name, "duplicate method '" + m.name + "'");
            if (m.name == p.entry) {
                ++mains;
                if (!m.params.empty()) throw ResolveError(m.name, "entry method takes no parameters");
            }
        }
    }
    if (mains != 1) throw ResolveError(p.entry, "program needs exactly one '" + p.entry + "' method");
    std::set<std::string> statics;
    for (auto* f : p.statics()) {
        if (!statics.insert(f->name).second) throw ResolveError(f->name, "duplicate static field '" + f->name + "'");
    }
    std::set<std::string> inst;
    for (auto& c : p.classes)
        for (auto& f : c.fields)
            if (!f.is_static) inst.insert(f.name);
    for (auto& c : p.classes) {
        for (auto& f : c.fields) {
            Checker ck{p, statics};
            ck.exp(f.init);
        }
        for (auto& m : c.methods) {
            Checker ck{p, statics};
            for (auto& prm : m.params) ck.vars.insert(prm.name);
            for (auto& [g, prm] : m.ghosts) ck.vars.insert(g);
            collect_assigned(m.body, ck.vars);
            ck.stmt(m.body);
        }
    }
}

Program parse_program(const std::string& text) {
    Parser ps{lex(text)};
    Program p;
    while (ps.peek().kind != Tok::End) p.classes.push_back(ps.cls());
    check_program(p);
    return p;
}

// ---------------------------------------------------------------- protocols

bool is_wildcard(const std::string& s) { return s.size() > 1 && s[0] == '$'; }

std::int64_t literal_value(const std::string& s) {
    if (s == "true") return 1;
    if (s == "false" || s == "null") return 0;
    return std::stoll(s);
}

std::string ApiCallPattern::str() const {
    std::string s = recv + "." + method + "(";
    for (size_t i = 0; i < args.size(); ++i) s += (i ? ", " : "") + args[i];
    return s + ")";
}

bool SpecProtocol::is_terminal(const std::string& sym) const { return terminal(sym) != nullptr; }

const ApiCallPattern* SpecProtocol::terminal(const std::string& sym) const {
    for (auto& t : terminals)
        if (t.str() == sym) return &t;
    return nullptr;
}

Grammar SpecProtocol::grammar() const {
    Grammar g;
    for (auto& n : nonterminals) g.nonterminal(n);
    for (auto& t : terminals) g.terminal(t.str());
    for (auto& pr : prods) {
        std::vector<int> rhs;
        for (auto& s : pr.rhs) rhs.push_back(*g.find(s));
        g.add(*g.find(pr.lhs), rhs);
    }
    g.start = *g.find(start);
    return g;
}

SpecProtocol parse_spec(const std::string& text) {
    Parser ps{lex(text)};
    SpecProtocol s;
    std::set<std::string> seen_terms;
    std::vector<std::pair<std::string, Loc>> used_nts;
    auto slot = [&]() -> std::string {
        if (ps.is("-")) {
            ++ps.pos;
            if (ps.peek().kind != Tok::Int) ps.fail("expected integer");
            return "-" + ps.toks[ps.pos++].text;
        }
        if (ps.peek().kind == Tok::Int) return ps.toks[ps.pos++].text;
        std::string id = ps.ident("argument");
        if (!is_wildcard(id) && id != "true" && id != "false" && id != "null")
            ps.fail("terminal arguments must be wildcards or literals");
        return id;
    };
    while (ps.peek().kind != Tok::End) {
        if (ps.is_kw("wildcards") && ps.is(":", 1)) {
            ps.pos += 2;
            if (!ps.is(";")) {
                do {
                    Loc l = ps.loc();
                    std::string w = ps.ident("wildcard");
                    if (!is_wildcard(w)) throw ParseError(l.line, l.col, "wildcards start with '$'");
                    ps.expect(":");
                    s.wildcard_types[w] = ps.ident("type");
                } while (ps.accept(","));
            }
            ps.expect(";");
        } else if (ps.is_kw("start") && ps.is(":", 1)) {
            ps.pos += 2;
            s.start = ps.ident("start symbol");
            ps.expect(";");
        } else {
            std::string lhs = ps.ident("nonterminal");
            if (is_wildcard(lhs)) ps.fail("nonterminal expected");
            ps.expect("->");
            if (std::find(s.nonterminals.begin(), s.nonterminals.end(), lhs) == s.nonterminals.end())
                s.nonterminals.push_back(lhs);
            do {
                SpecProduction pr{lhs, {}};
                if (ps.is_kw("eps")) {
                    ++ps.pos;
                } else {
                    do {
                        Loc l = ps.loc();
                        std::string a = ps.ident("symbol");
                        if (ps.accept(".")) {
                            ApiCallPattern t;
                            t.recv = a;
                            if (!is_wildcard(a)) throw ParseError(l.line, l.col, "terminal receiver must be a wildcard");
                            t.method = ps.ident("method name");
                            ps.expect("(");
                            if (!ps.is(")")) {
                                t.args.push_back(slot());
                                while (ps.accept(",")) t.args.push_back(slot());
                            }
                            ps.expect(")");
                            for (auto& w : t.args)
                                if (is_wildcard(w) && !s.wildcard_types.count(w))
                                    throw ResolveError(w, "undeclared wildcard '" + w + "'");
                            if (!s.wildcard_types.count(a)) throw ResolveError(a, "undeclared wildcard '" + a + "'");
                            if (seen_terms.insert(t.str()).second) s.terminals.push_back(t);
                            pr.rhs.push_back(t.str());
                        } else {
                            if (is_wildcard(a)) throw ParseError(l.line, l.col, "wildcard used as a symbol");
                            if (a == "eps") throw ParseError(l.line, l.col, "'eps' must stand alone");
                            used_nts.push_back({a, l});
                            pr.rhs.push_back(a);
                        }
                    } while (!ps.is("|") && !ps.is(";"));
                }
                s.prods.push_back(std::move(pr));
            } while (ps.accept("|"));
            ps.expect(";");
        }
    }
    if (s.prods.empty()) ps.fail("protocol has no productions");
    if (s.start.empty()) s.start = s.prods[0].lhs;
    auto defined = [&](const std::string& n) {
        return std::find(s.nonterminals.begin(), s.nonterminals.end(), n) != s.nonterminals.end();
    };
    if (!defined(s.start)) throw ResolveError(s.start, "start symbol '" + s.start + "' has no productions");
    for (auto& [n, l] : used_nts)
        if (!defined(n)) throw ResolveError(n, "undeclared nonterminal '" + n + "'");
    return s;
}

std::string to_source(const SpecProtocol& s) {
    std::ostringstream os;
    os << "wildcards:";
    bool first = true;
    for (auto& [w, t] : s.wildcard_types) {
        os << (first ? " " : ", ") << w << ": " << t;
        first = false;
    }
    os << ";\nstart: " << s.start << ";\n";
    for (auto& n : s.nonterminals) {
        os << n << " ->";
        bool f = true;
        for (auto& p : s.prods) {
            if (p.lhs != n) continue;
            os << (f ? " " : " | ");
            f = false;
            if (p.rhs.empty()) os << "eps";
            for (size_t i = 0; i < p.rhs.size(); ++i) os << (i ? " " : "") << p.rhs[i];
        }
        os << " ;\n";
    }
    return os.str();
}

std::set<std::string> wildcards(const SpecProtocol& s) {
    std::set<std::string> out;
    for (auto& t : s.terminals) {
        out.insert(t.recv);
        for (auto& a : t.args)
            if (is_wildcard(a)) out.insert(a);
    }
    return out;
}

std::vector<ApiCallPattern> terminals_for_method(const SpecProtocol& s, const std::string& m) {
    std::vector<ApiCallPattern> out;
    for (auto& t : s.terminals)
        if (t.method == m) out.push_back(t);
    return out;
}

std::vector<std::string> lint_uniform_wildcards(const SpecProtocol& s) {
    std::vector<std::string> out;
    auto ws = [](const ApiCallPattern& t) {
        std::set<std::string> w{t.recv};
        for (auto& a : t.args)
            if (is_wildcard(a)) w.insert(a);
        return w;
    };
    for (size_t i = 0; i < s.terminals.size(); ++i)
        for (size_t j = i + 1; j < s.terminals.size(); ++j)
            if (ws(s.terminals[i]) != ws(s.terminals[j]))
                out.push_back("terminals " + s.terminals[i].str() + " and " + s.terminals[j].str() +
                              " use different wildcard sets; instrumentation may be incomplete");
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace cfproto

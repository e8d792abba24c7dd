#include "cfproto/instrument.hpp"

#include <functional>
#include <set>

namespace cfproto {

using namespace ast;

namespace {

Exp slot_exp(const std::string& slot) { return is_wildcard(slot) ? Exp::var(slot) : Exp::num(literal_value(slot)); }

Pred conj(std::vector<Pred> ps) {
    if (ps.empty()) return Pred::tt();
    Pred acc = ps[0];
    for (size_t i = 1; i < ps.size(); ++i) acc = Pred{Pred::And, {}, {acc, ps[i]}};
    return acc;
}

}  // namespace

Pred guard(const ApiCallPattern& t, const Stmt& s) {
    if (s.kind != Stmt::ApiCall) throw InstrumentError("guard: not an api_call");
    if (t.args.size() != s.args.size())
        throw InstrumentError("arity mismatch between " + t.str() + " and " + head_string(s));
    std::vector<Pred> ps;
    ps.push_back(Pred::cmp(Pred::Eq, Exp::var(t.recv), Exp::var(s.var)));
    for (size_t j = 0; j < t.args.size(); ++j) {
        if (is_wildcard(t.args[j]))
            ps.push_back(Pred::cmp(Pred::Eq, Exp::var(t.args[j]), s.args[j]));
        else
            ps.push_back(Pred::cmp(Pred::Eq, s.args[j], Exp::num(literal_value(t.args[j]))));
    }
    return conj(std::move(ps));
}

Stmt pattern_call(const ApiCallPattern& t, Loc loc) {
    Stmt s;
    s.kind = Stmt::ApiCall;
    s.var = t.recv;
    s.name = t.method;
    for (auto& a : t.args) s.args.push_back(slot_exp(a));
    s.loc = loc;
    return s;
}

std::optional<ApiCallPattern> match_pattern(const SpecProtocol& spec, const Stmt& s) {
    if (s.kind != Stmt::ApiCall) return std::nullopt;
    for (auto& t : terminals_for_method(spec, s.name)) {
        if (t.recv != s.var || t.args.size() != s.args.size()) continue;
        bool ok = true;
        for (size_t j = 0; j < t.args.size() && ok; ++j) {
            const Exp& a = s.args[j];
            if (is_wildcard(t.args[j]))
                ok = a.kind == Exp::Var && a.name == t.args[j];
            else
                ok = a.kind == Exp::Const && a.val == literal_value(t.args[j]);
        }
        if (ok) return t;
    }
    return std::nullopt;
}

namespace {

Stmt rewrite(const Stmt& s, const SpecProtocol& spec) {
    if (s.kind == Stmt::ApiCall) {
        auto ts = terminals_for_method(spec, s.name);
        // else-if chain built back to front, ending in skip
        Stmt chain = Stmt::skip();
        chain.loc = s.loc;
        for (auto it = ts.rbegin(); it != ts.rend(); ++it) {
            Stmt iff;
            iff.kind = Stmt::If;
            iff.loc = s.loc;
            iff.p = guard(*it, s);
            iff.body = {pattern_call(*it, s.loc), chain};
            chain = iff;
        }
        return chain;
    }
    Stmt out = s;
    for (auto& b : out.body) b = rewrite(b, spec);
    return out;
}

void collect_names(const Stmt& s, std::set<std::string>& out) {
    if (!s.var.empty()) out.insert(s.var);
    std::function<void(const Exp&)> ex = [&](const Exp& e) {
        if (e.kind == Exp::Var || e.kind == Exp::Load) out.insert(e.name);
        for (auto& k : e.kids) ex(k);
    };
    std::function<void(const Pred&)> pr = [&](const Pred& p) {
        for (auto& e : p.es) ex(e);
        for (auto& q : p.ps) pr(q);
    };
    ex(s.e);
    pr(s.p);
    for (auto& a : s.args) ex(a);
    for (auto& b : s.body) collect_names(b, out);
}

}  // namespace

Program instrument(const Program& p, const SpecProtocol& spec) {
    Program out = p;
    std::set<std::string> statics;
    for (auto* f : p.statics()) statics.insert(f->name);
    auto ws = wildcards(spec);
    Class* home = nullptr;
    for (auto& c : out.classes)
        for (auto& m : c.methods)
            if (m.name == out.entry) home = &c;
    if (!home) throw InstrumentError("no entry method");
    std::vector<Field> added;
    for (auto& w : ws) {
        if (statics.count(w)) throw InstrumentError("wildcard " + w + " clashes with an existing static field");
        Field f;
        f.name = w;
        f.type = spec.wildcard_types.count(w) ? spec.wildcard_types.at(w) : "int";
        f.is_static = true;
        f.init = Exp::star();
        added.push_back(f);
    }
    home->fields.insert(home->fields.begin(), added.begin(), added.end());
    for (auto& c : out.classes)
        for (auto& m : c.methods) m.body = rewrite(m.body, spec);
    check_program(out);
    return out;
}

Program add_symbolic_constants(const Program& p) {
    Program out = p;
    std::set<std::string> statics;
    for (auto* f : p.statics()) statics.insert(f->name);
    for (auto& c : out.classes) {
        for (auto& m : c.methods) {
            if (m.params.empty()) continue;
            std::set<std::string> taken = statics;
            for (auto& prm : m.params) taken.insert(prm.name);
            collect_names(m.body, taken);
            std::vector<Stmt> prelude;
            for (auto& prm : m.params) {
                std::string g = prm.name + "_" + m.name.substr(0, 3);
                if (taken.count(g)) g = prm.name + "_" + m.name;
                for (int k = 2; taken.count(g); ++k) g = prm.name + "_" + m.name + "_" + std::to_string(k);
                taken.insert(g);
                m.ghosts.push_back({g, prm.name});
                Stmt a;
                a.kind = Stmt::Assign;
                a.var = g;
                a.e = Exp::var(prm.name);
                a.loc = m.loc;
                prelude.push_back(a);
            }
            if (m.body.kind == Stmt::Seq)
                prelude.insert(prelude.end(), m.body.body.begin(), m.body.body.end());
            else if (m.body.kind != Stmt::Skip)
                prelude.push_back(m.body);
            m.body = prelude.size() == 1 ? prelude[0] : Stmt::seq(prelude);
        }
    }
    return out;
}

Program prepare(const Program& p, const SpecProtocol& spec) { return add_symbolic_constants(instrument(p, spec)); }

}  // namespace cfproto

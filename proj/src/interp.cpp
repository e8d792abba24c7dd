#include "cfproto/interp.hpp"

#include <algorithm>
#include <stdexcept>

namespace cfproto {

using namespace ast;

std::string ApiEvent::str() const {
    std::string s = std::to_string(recv) + "." + method + "(";
    for (size_t i = 0; i < args.size(); ++i) s += (i ? ", " : "") + std::to_string(args[i]);
    return s + ")";
}

std::int64_t ScriptChooser::choose(Choice, const std::vector<std::int64_t>& options) {
    if (pos < script.size()) return script[pos++];
    exhausted = true;
    return options.empty() ? 0 : options.front();
}

namespace {

struct Stop {
    Execution::Status status;
};

struct Machine {
    const Program& prog;
    Chooser& ch;
    const InterpConfig& cfg;
    Execution ex;
    ConcreteState st;
    std::set<std::string> statics;
    const Method* cur = nullptr;
    int depth = 0;

    bool is_global(const std::string& x) const {
        if (!statics.count(x)) return false;
        for (auto& p : cur->params)
            if (p.name == x) return false;
        return true;
    }
    std::int64_t read(const std::string& x) {
        auto& m = is_global(x) ? st.globals : st.locals;
        auto it = m.find(x);
        return it == m.end() ? 0 : it->second;
    }
    void write(const std::string& x, std::int64_t v) { (is_global(x) ? st.globals : st.locals)[x] = v; }

    std::int64_t star() {
        std::vector<std::int64_t> opts;
        for (auto v = cfg.lo; v <= cfg.hi; ++v) opts.push_back(v);
        for (auto a : ex.addresses) opts.push_back(a);
        std::sort(opts.begin(), opts.end());
        opts.erase(std::unique(opts.begin(), opts.end()), opts.end());
        return ch.choose(Choice::Value, opts);
    }

    std::int64_t eval(const Exp& e) {
        switch (e.kind) {
            case Exp::Var: return read(e.name);
            case Exp::Load: {
                auto it = st.heap.find({read(e.name), e.field});
                return it == st.heap.end() ? 0 : it->second;
            }
            case Exp::Const: return e.val;
            case Exp::Star: return star();
            case Exp::Add: return eval(e.kids[0]) + eval(e.kids[1]);
            case Exp::Sub: return eval(e.kids[0]) - eval(e.kids[1]);
            case Exp::Mul: return eval(e.kids[0]) * eval(e.kids[1]);
        }
        return 0;
    }

    bool test(const Pred& p) {
        switch (p.kind) {
            case Pred::Truth: return eval(p.es[0]) != 0;
            case Pred::Not: return !test(p.ps[0]);
            case Pred::And: return test(p.ps[0]) && test(p.ps[1]);
            case Pred::Or: return test(p.ps[0]) || test(p.ps[1]);
            default: break;
        }
        std::int64_t a = eval(p.es[0]), b = eval(p.es[1]);
        switch (p.kind) {
            case Pred::Lt: return a < b;
            case Pred::Gt: return a > b;
            case Pred::Eq: return a == b;
            case Pred::Le: return a <= b;
            case Pred::Ge: return a >= b;
            default: return a != b;
        }
    }

    void record(const std::string& text, Loc loc) {
        if (static_cast<int>(ex.steps.size()) >= cfg.budget) throw Stop{Execution::BudgetExhausted};
        ExecStep s{cur->name, text, loc, depth, std::nullopt};
        if (cfg.record_states) s.state = st;
        ex.steps.push_back(std::move(s));
    }

    void exec(const Stmt& s) {
        switch (s.kind) {
            case Stmt::Skip: record("skip", s.loc); return;
            case Stmt::Seq:
                for (auto& b : s.body) exec(b);
                return;
            case Stmt::Assign: write(s.var, eval(s.e)); break;
            case Stmt::Store: {
                std::int64_t base = read(s.var);
                st.heap[{base, s.field}] = eval(s.e);
                break;
            }
            case Stmt::Assume:
                if (!s.p.is_star() && !test(s.p)) {
                    record(head_string(s), s.loc);
                    throw Stop{Execution::Blocked};
                }
                break;
            case Stmt::If: {
                bool yes = s.p.is_star() ? ch.choose(Choice::Branch, {1, 0}) != 0 : test(s.p);
                record(yes ? "assume(" + to_string(s.p) + ")" : "assume(!(" + to_string(s.p) + "))", s.loc);
                exec(s.body[yes ? 0 : 1]);
                return;
            }
            case Stmt::New: {
                std::int64_t a = ++st.alloc;
                ex.addresses.insert(a);
                if (auto* c = prog.cls(s.name))
                    for (auto& f : c->fields)
                        if (!f.is_static) st.heap[{a, f.name}] = eval(f.init);
                write(s.var, a);
                break;
            }
            case Stmt::Call: {
                const Method* callee = prog.method(s.name);
                if (depth + 1 > cfg.max_depth) throw Stop{Execution::DepthExceeded};
                std::map<std::string, std::int64_t> frame;
                for (size_t i = 0; i < callee->params.size(); ++i) frame[callee->params[i].name] = eval(s.args[i]);
                record(head_string(s), s.loc);
                auto saved = std::move(st.locals);
                const Method* back = cur;
                st.locals = std::move(frame);
                cur = callee;
                ++depth;
                exec(callee->body);
                --depth;
                cur = back;
                st.locals = std::move(saved);
                return;
            }
            case Stmt::ApiCall: {
                ApiEvent e{s.name, read(s.var), {}, s.loc, s.var + "." + s.name + "("};
                for (size_t i = 0; i < s.args.size(); ++i) {
                    e.args.push_back(eval(s.args[i]));
                    e.symbolic += (i ? ", " : "") + to_string(s.args[i]);
                }
                e.symbolic += ")";
                ex.events.push_back(std::move(e));
                break;
            }
        }
        record(head_string(s), s.loc);
    }
};

}  // namespace

Execution interpret(const Program& p, Chooser& c, const InterpConfig& cfg) {
    Machine m{p, c, cfg, {}, {}, {}, p.method(p.entry), 0};
    for (auto* f : p.statics()) m.statics.insert(f->name);
    try {
        for (auto* f : p.statics()) m.st.globals[f->name] = m.eval(f->init);
        m.exec(m.cur->body);
        m.ex.status = Execution::Complete;
    } catch (const Stop& s) {
        m.ex.status = s.status;
    }
    m.ex.final_state = m.st;
    return m.ex;
}

namespace {

struct TreeChooser : Chooser {
    std::vector<std::size_t> prefix;
    std::vector<std::size_t> counts;
    std::size_t pos = 0;
    std::int64_t choose(Choice, const std::vector<std::int64_t>& options) override {
        std::size_t i = pos < prefix.size() ? prefix[pos] : 0;
        if (pos >= prefix.size()) prefix.push_back(0);
        if (counts.size() <= pos) counts.resize(pos + 1);
        counts[pos] = options.size();
        ++pos;
        return options.at(i);
    }
    bool advance() {
        prefix.resize(pos);
        counts.resize(pos);
        while (!prefix.empty()) {
            if (prefix.back() + 1 < counts.back()) {
                ++prefix.back();
                return true;
            }
            prefix.pop_back();
            counts.pop_back();
        }
        return false;
    }
};

}  // namespace

Enumerated all_executions(const Program& p, const InterpConfig& cfg, std::size_t cap, bool keep_partial) {
    Enumerated out;
    TreeChooser tc;
    for (std::size_t n = 0;; ++n) {
        if (n >= cap) {
            out.truncated = true;
            break;
        }
        tc.pos = 0;
        Execution e = interpret(p, tc, cfg);
        if (e.status == Execution::Complete || keep_partial) out.runs.push_back(std::move(e));
        if (e.status == Execution::BudgetExhausted) out.truncated = true;
        if (!tc.advance()) break;
    }
    return out;
}

Grammar instantiate_spec(const SpecProtocol& spec, const std::map<std::string, std::int64_t>& values,
                         const std::map<std::int64_t, std::string>* value_types) {
    for (auto& w : wildcards(spec)) {
        auto it = values.find(w);
        if (it == values.end()) throw std::invalid_argument("no value for wildcard " + w);
        if (value_types) {
            auto ty = spec.wildcard_types.find(w);
            auto vt = value_types->find(it->second);
            if (ty != spec.wildcard_types.end() && ty->second != "int" && vt != value_types->end() && vt->second != ty->second)
                throw std::invalid_argument("wildcard " + w + " of type " + ty->second + " bound to a " + vt->second);
        }
    }
    Grammar base = spec.grammar();
    Grammar g;
    std::map<int, int> sym;
    auto concrete = [&](const ApiCallPattern& t) {
        ApiEvent e{t.method, values.at(t.recv), {}, {}, {}};
        for (auto& a : t.args) e.args.push_back(is_wildcard(a) ? values.at(a) : literal_value(a));
        return e.str();
    };
    std::map<std::string, std::string> rename;
    for (auto& t : spec.terminals) rename[t.str()] = concrete(t);
    for (int s = 0; s < base.num_symbols(); ++s)
        sym[s] = base.is_terminal(s) ? g.terminal(rename.count(base.name(s)) ? rename[base.name(s)] : base.name(s))
                                     : g.nonterminal(base.name(s));
    for (auto& p : base.prods) {
        std::vector<int> rhs;
        for (int r : p.rhs) rhs.push_back(sym[r]);
        g.add(sym[p.lhs], rhs);
    }
    g.start = sym[base.start];
    return g;
}

Word trace_to_word(const Execution& e, const Grammar& ghat) {
    Word w;
    for (auto& ev : e.events) {
        auto id = ghat.find(ev.str());
        if (id && ghat.is_terminal(*id)) w.push_back(*id);
    }
    return w;
}

ConformResult conforms(const Program& p, const SpecProtocol& spec, const InterpConfig& cfg) {
    ConformResult res;
    auto runs = all_executions(p, cfg);
    res.truncated = runs.truncated;
    res.executions = runs.runs.size();
    auto ws = wildcards(spec);
    std::vector<std::string> names(ws.begin(), ws.end());
    std::map<std::vector<std::int64_t>, std::pair<Grammar, CnfConversion>> cache;
    for (auto& e : runs.runs) {
        std::set<std::int64_t> dom = e.addresses;
        for (auto& ev : e.events) {
            dom.insert(ev.recv);
            dom.insert(ev.args.begin(), ev.args.end());
        }
        std::int64_t fresh = 1;
        for (auto v : dom) fresh = std::max(fresh, v + 1);
        dom.insert(fresh);
        std::vector<std::int64_t> vals(dom.begin(), dom.end());
        std::vector<std::size_t> idx(names.size(), 0);
        while (true) {
            std::vector<std::int64_t> key;
            std::map<std::string, std::int64_t> inst;
            for (size_t i = 0; i < names.size(); ++i) {
                key.push_back(vals[idx[i]]);
                inst[names[i]] = vals[idx[i]];
            }
            auto it = cache.find(key);
            if (it == cache.end()) {
                Grammar g = instantiate_spec(spec, inst);
                auto c = to_cnf(g);
                it = cache.emplace(key, std::make_pair(std::move(g), std::move(c))).first;
            }
            Word w = trace_to_word(e, it->second.first);
            // keep the failing run with the fewest events
            if (!cyk_member(it->second.second, w) && (res.pass || e.events.size() < res.witness.events.size())) {
                res.pass = false;
                res.witness = e;
                res.instantiation = inst;
                res.word = it->second.first.word_string(w);
            }
            size_t i = 0;
            while (i < idx.size() && ++idx[i] == vals.size()) idx[i++] = 0;
            if (i == idx.size()) break;
        }
    }
    return res;
}

}  // namespace cfproto

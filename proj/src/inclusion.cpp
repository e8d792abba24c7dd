#include "cfproto/inclusion.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

namespace cfproto {

// ---------------------------------------------------------------- machine

namespace {
int find_or_add(std::vector<std::string>& v, const std::string& n) {
    auto it = std::find(v.begin(), v.end(), n);
    if (it != v.end()) return static_cast<int>(it - v.begin());
    v.push_back(n);
    return static_cast<int>(v.size()) - 1;
}
}  // namespace

int Dpda::state(const std::string& n) { return find_or_add(states, n); }
int Dpda::letter(const std::string& n) { return find_or_add(alphabet, n); }
int Dpda::symbol(const std::string& n) { return find_or_add(stack, n); }

std::optional<int> Dpda::find_letter(const std::string& n) const {
    auto it = std::find(alphabet.begin(), alphabet.end(), n);
    if (it == alphabet.end()) return std::nullopt;
    return static_cast<int>(it - alphabet.begin());
}

void Dpda::on(int q, int a, int top, Move m) {
    auto clash = [&](int t) { return delta.count({q, a, t}) != 0; };
    bool bad = clash(top) || (top != kAny && clash(kAny));
    if (top == kAny)
        for (int z = 0; z < static_cast<int>(stack.size()); ++z) bad = bad || clash(z);
    if (bad) throw DpdaError("nondeterministic move from " + states[q] + " on " + alphabet[a]);
    if (m.op == Push && m.sym == 0) throw DpdaError("bottom marker pushed");
    if (m.op == Pop && top == 0) throw DpdaError("bottom marker popped");
    delta[{q, a, top}] = m;
}

const Dpda::Move* Dpda::move(int q, int a, int top) const {
    auto it = delta.find({q, a, top});
    if (it == delta.end()) it = delta.find({q, a, kAny});
    if (it == delta.end()) return nullptr;
    if (it->second.op == Pop && top == 0) return nullptr;
    return &it->second;
}

bool Dpda::accepting(int q, int top) const { return accept.count({q, top}) || accept.count({q, kAny}); }

namespace {
// runs a word of letter ids; false on a missing move
bool run(const Dpda& d, const std::vector<int>& w, int& q, std::vector<int>& st) {
    for (int a : w) {
        if (a < 0) return false;
        const Dpda::Move* m = d.move(q, a, st.back());
        if (!m) return false;
        if (m->op == Dpda::Push) st.push_back(m->sym);
        if (m->op == Dpda::Pop) st.pop_back();
        q = m->to;
    }
    return true;
}
}  // namespace

bool Dpda::accepts(const std::vector<std::string>& word) const {
    std::vector<int> w;
    for (auto& s : word) {
        auto a = find_letter(s);
        w.push_back(a ? *a : -1);
    }
    int q = initial;
    std::vector<int> st{0};
    return run(*this, w, q, st) && accepting(q, st.back());
}

bool dpda_accepts(const Dpda& d, const Grammar& g, const Word& w) {
    std::vector<std::string> names;
    for (int s : w) names.push_back(g.name(s));
    return d.accepts(names);
}

std::string Dpda::to_text() const {
    std::ostringstream os;
    auto top = [&](int z) { return z == kAny ? std::string("_") : stack[z]; };
    auto quote = [](const std::string& s) { return "\"" + s + "\""; };
    if (!name.empty()) os << "// " << name << "\n";
    os << "state " << states[initial] << ";\n";
    for (size_t i = 0; i < states.size(); ++i)
        if (static_cast<int>(i) != initial) os << "state " << states[i] << ";\n";
    os << "bottom " << stack[0] << ";\n";
    for (auto& [q, z] : accept) os << "accept (" << states[q] << ", " << top(z) << ");\n";
    for (auto& [k, m] : delta) {
        auto [q, a, z] = k;
        os << "on (" << states[q] << ", " << quote(alphabet[a]) << ", " << top(z) << ") ";
        if (m.op == Push) os << "push " << stack[m.sym] << " ";
        if (m.op == Pop) os << "pop ";
        os << "goto " << states[m.to] << ";\n";
    }
    return os.str();
}

// ---------------------------------------------------------------- .dpda files

namespace {

struct Lexer {
    const std::string& s;
    std::size_t i = 0;
    int line = 1;

    void ws() {
        while (i < s.size()) {
            if (s[i] == '\n') ++line;
            if (std::isspace(static_cast<unsigned char>(s[i]))) ++i;
            else if (s.compare(i, 2, "//") == 0 || s[i] == '#')
                while (i < s.size() && s[i] != '\n') ++i;
            else break;
        }
    }
    [[noreturn]] void fail(const std::string& msg) { throw DpdaError("line " + std::to_string(line) + ": " + msg); }
    bool at_end() {
        ws();
        return i >= s.size();
    }
    // identifier, quoted string, or single punctuation
    std::string next(bool* quoted = nullptr) {
        ws();
        if (quoted) *quoted = false;
        if (i >= s.size()) fail("unexpected end of input");
        char c = s[i];
        if (c == '"') {
            auto j = s.find('"', i + 1);
            if (j == std::string::npos) fail("unterminated string");
            std::string t = s.substr(i + 1, j - i - 1);
            i = j + 1;
            if (quoted) *quoted = true;
            return t;
        }
        if (c == '(' || c == ')' || c == ',' || c == ';') {
            ++i;
            return std::string(1, c);
        }
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])) && std::string("(),;\"").find(s[j]) == std::string::npos)
            ++j;
        std::string t = s.substr(i, j - i);
        i = j;
        return t;
    }
    void expect(const std::string& t) {
        auto got = next();
        if (got != t) fail("expected '" + t + "', got '" + got + "'");
    }
};

}  // namespace

Dpda parse_dpda(const std::string& text, const SpecProtocol* spec) {
    Dpda d;
    d.stack.clear();
    Lexer lx{text};
    bool have_state = false;
    if (spec)
        for (auto& t : spec->terminals) d.letter(t.str());
    auto resolve = [&](const std::string& t, bool quoted) {
        if (quoted || !spec) return d.letter(t);
        std::vector<std::string> hits;
        for (auto& p : spec->terminals)
            if (p.method == t || p.str() == t) hits.push_back(p.str());
        if (hits.size() == 1) return d.letter(hits[0]);
        if (hits.size() > 1) lx.fail("ambiguous letter " + t);
        return d.letter(t);
    };
    auto top = [&](const std::string& z) {
        if (z == "_") return Dpda::kAny;
        if (d.stack.empty()) lx.fail("bottom not declared");
        return d.symbol(z);
    };
    while (!lx.at_end()) {
        auto kw = lx.next();
        if (kw == "state" || kw == "initial") {
            auto q = lx.next();
            int id = d.state(q);
            if (kw == "initial" || !have_state) d.initial = id;
            have_state = true;
            lx.expect(";");
        } else if (kw == "bottom") {
            if (!d.stack.empty()) lx.fail("bottom declared twice");
            d.stack.push_back(lx.next());
            lx.expect(";");
        } else if (kw == "accept") {
            lx.expect("(");
            int q = d.state(lx.next());
            lx.expect(",");
            int z = top(lx.next());
            lx.expect(")");
            lx.expect(";");
            d.accept.insert({q, z});
        } else if (kw == "on") {
            lx.expect("(");
            int q = d.state(lx.next());
            lx.expect(",");
            bool quoted = false;
            auto a = lx.next(&quoted);
            int ai = resolve(a, quoted);
            lx.expect(",");
            int z = top(lx.next());
            lx.expect(")");
            Dpda::Move m;
            auto w = lx.next();
            if (w == "push") {
                m.op = Dpda::Push;
                m.sym = d.symbol(lx.next());
                w = lx.next();
            } else if (w == "pop") {
                m.op = Dpda::Pop;
                w = lx.next();
            } else if (w == "nop") {
                w = lx.next();
            }
            if (w != "goto") lx.fail("expected goto");
            m.to = d.state(lx.next());
            lx.expect(";");
            try {
                d.on(q, ai, z, m);
            } catch (const DpdaError& e) {
                lx.fail(e.what());
            }
        } else {
            lx.fail("unknown statement '" + kw + "'");
        }
    }
    if (d.stack.empty()) throw DpdaError("no bottom declaration");
    if (d.states.empty()) throw DpdaError("no states");
    return d;
}

// ---------------------------------------------------------------- templates

namespace {

Dpda balanced(const std::string& open, const std::string& close, bool any_top) {
    Dpda d;
    d.name = any_top ? "prefix-counter" : "balanced-counter";
    int q = d.state("q0");
    int c = d.symbol("C");
    int o = d.letter(open), x = d.letter(close);
    d.on(q, o, Dpda::kAny, {q, Dpda::Push, c});
    d.on(q, x, c, {q, Dpda::Pop, -1});
    d.accept.insert({q, any_top ? Dpda::kAny : 0});
    return d;
}

// counted mode is balanced; after the mode switch the counter tracks
// #acquire - 2 #release, one letter late, so that only underflow can block
Dpda two_mode(const std::string& mode, const std::string& acq, const std::string& rel) {
    Dpda d;
    d.name = "two-mode-counter";
    int q0 = d.state("q0"), rc = d.state("RC"), n0 = d.state("N0"), na = d.state("Na"), nr = d.state("Nr");
    int c = d.symbol("C");
    int s = d.letter(mode), a = d.letter(acq), r = d.letter(rel);
    const int any = Dpda::kAny;
    d.on(q0, s, any, {n0, Dpda::Nop, -1});
    d.on(q0, a, any, {rc, Dpda::Push, c});
    d.on(rc, a, any, {rc, Dpda::Push, c});
    d.on(rc, r, c, {rc, Dpda::Pop, -1});
    d.on(n0, a, any, {na, Dpda::Nop, -1});
    d.on(na, a, any, {na, Dpda::Push, c});
    d.on(na, r, any, {nr, Dpda::Nop, -1});
    d.on(nr, a, c, {na, Dpda::Pop, -1});
    d.accept.insert({q0, 0});
    d.accept.insert({rc, 0});
    d.accept.insert({n0, any});
    d.accept.insert({nr, any});
    return d;
}

// X is the state after a closing letter; the stack top then tells the context
Dpda json(const std::map<std::string, std::string>& role, const std::vector<std::string>& scalars) {
    Dpda d;
    d.name = "json-element-stack";
    int t0 = d.state("T0"), t1 = d.state("T1"), ar = d.state("A"), f = d.state("F"), v = d.state("V"), x = d.state("X");
    int obj = d.symbol("Obj"), arr = d.symbol("Arr");
    int so = d.letter(role.at("so")), eo = d.letter(role.at("eo")), sa = d.letter(role.at("sa")),
        ea = d.letter(role.at("ea")), fn = d.letter(role.at("fn"));
    std::vector<int> sc;
    for (auto& s : scalars) sc.push_back(d.letter(s));
    // value-accepting contexts: (state, top) -> state after a scalar
    std::vector<std::tuple<int, int, int>> value_ctx{{t0, 0, t1}, {ar, arr, ar}, {v, obj, f}, {x, arr, ar}};
    for (auto [q, z, after] : value_ctx) {
        for (int s : sc) d.on(q, s, z, {after, Dpda::Nop, -1});
        d.on(q, so, z, {f, Dpda::Push, obj});
        d.on(q, sa, z, {ar, Dpda::Push, arr});
    }
    for (int q : {f, v}) {
        d.on(q, eo, obj, {x, Dpda::Pop, -1});
        d.on(q, fn, obj, {v, Dpda::Nop, -1});
    }
    d.on(x, eo, obj, {x, Dpda::Pop, -1});
    d.on(x, fn, obj, {v, Dpda::Nop, -1});
    d.on(ar, ea, arr, {x, Dpda::Pop, -1});
    d.on(x, ea, arr, {x, Dpda::Pop, -1});
    for (int q : {t0, t1, x}) d.accept.insert({q, 0});
    return d;
}

}  // namespace

Dpda compile_spec_to_dpda(const SpecProtocol& spec, int check_len) {
    std::vector<std::string> ts;
    for (auto& t : spec.terminals) ts.push_back(t.str());
    std::vector<Dpda> cand;
    if (ts.size() == 2)
        for (int i = 0; i < 2; ++i) {
            cand.push_back(balanced(ts[i], ts[1 - i], false));
            cand.push_back(balanced(ts[i], ts[1 - i], true));
        }
    if (ts.size() == 3) {
        std::vector<int> perm{0, 1, 2};
        do cand.push_back(two_mode(ts[perm[0]], ts[perm[1]], ts[perm[2]]));
        while (std::next_permutation(perm.begin(), perm.end()));
    }
    {
        std::map<std::string, std::string> role;
        std::vector<std::string> rest;
        const std::map<std::string, std::string> by_method{{"writeStartObject", "so"}, {"writeEndObject", "eo"},
                                                           {"writeStartArray", "sa"},  {"writeEndArray", "ea"},
                                                           {"writeFieldName", "fn"}};
        for (auto& t : spec.terminals) {
            auto it = by_method.find(t.method);
            if (it != by_method.end() && !role.count(it->second)) role[it->second] = t.str();
            else rest.push_back(t.str());
        }
        if (role.size() == 5) cand.push_back(json(role, rest));
    }
    Grammar g = spec.grammar();
    for (auto& d : cand) {
        // alphabet follows the protocol's terminal order
        Dpda c = d;
        std::vector<std::string> order = ts;
        for (auto& a : d.alphabet)
            if (std::find(order.begin(), order.end(), a) == order.end()) order.push_back(a);
        c.alphabet = order;
        c.delta.clear();
        for (auto& [k, m] : d.delta) {
            auto [q, a, z] = k;
            int na = static_cast<int>(std::find(order.begin(), order.end(), d.alphabet[a]) - order.begin());
            c.delta[{q, na, z}] = m;
        }
        if (dpda_agrees(c, g, check_len)) return c;
    }
    throw CannotCompile("no built-in recognizer matches the protocol; supply a .dpda file");
}

std::vector<std::vector<std::string>> dpda_words(const Dpda& d, int n) {
    std::vector<std::vector<int>> found;
    std::vector<int> w;
    std::vector<int> st{0};
    std::function<void(int)> dfs = [&](int q) {
        if (d.accepting(q, st.back())) found.push_back(w);
        if (static_cast<int>(w.size()) == n) return;
        for (int a = 0; a < static_cast<int>(d.alphabet.size()); ++a) {
            const Dpda::Move* m = d.move(q, a, st.back());
            if (!m) continue;
            int popped = st.back();
            if (m->op == Dpda::Push) st.push_back(m->sym);
            if (m->op == Dpda::Pop) st.pop_back();
            w.push_back(a);
            dfs(m->to);
            w.pop_back();
            if (m->op == Dpda::Push) st.pop_back();
            if (m->op == Dpda::Pop) st.push_back(popped);
        }
    };
    dfs(d.initial);
    std::sort(found.begin(), found.end(), [](auto& a, auto& b) { return a.size() != b.size() ? a.size() < b.size() : a < b; });
    std::vector<std::vector<std::string>> out;
    for (auto& f : found) {
        std::vector<std::string> s;
        for (int a : f) s.push_back(d.alphabet[a]);
        out.push_back(std::move(s));
    }
    return out;
}

bool dpda_agrees(const Dpda& d, const Grammar& g, int n, std::string* mismatch) {
    auto dw = dpda_words(d, n);
    std::set<std::vector<std::string>> dset(dw.begin(), dw.end());
    auto en = enumerate_words(g, n);
    std::set<std::vector<std::string>> gset;
    for (auto& w : en.words) {
        std::vector<std::string> s;
        for (int a : w) s.push_back(g.name(a));
        gset.insert(std::move(s));
    }
    auto show = [](const std::vector<std::string>& w) {
        std::string s;
        for (auto& a : w) s += (s.empty() ? "" : " ") + a;
        return s.empty() ? std::string("eps") : s;
    };
    for (auto& w : gset)
        if (!dset.count(w)) {
            if (mismatch) *mismatch = "grammar only: " + show(w);
            return false;
        }
    for (auto& w : dset)
        if (!gset.count(w)) {
            if (mismatch) *mismatch = "machine only: " + show(w);
            return false;
        }
    return true;
}

// ---------------------------------------------------------------- effects

Effect effect_compose(const Effect& a, const Effect& b) { return {std::min(a.m, a.n + b.m), a.n + b.n}; }

namespace {

std::int64_t sat_add(std::int64_t a, std::int64_t b) {
    if (a <= -kInf || b <= -kInf) return -kInf;
    if (a >= kInf || b >= kInf) return kInf;
    return std::clamp<std::int64_t>(a + b, -kInf, kInf);
}

EffectSet to_box(const EffectSet& s) {
    if (s.widened) return s;
    EffectSet b;
    b.widened = true;
    if (s.points.empty()) {
        b.nlo = 1;
        b.nhi = 0;
        return b;
    }
    b.mlo = kInf;
    b.nlo = kInf;
    b.nhi = -kInf;
    for (auto& e : s.points) {
        b.mlo = std::min(b.mlo, e.m);
        b.nlo = std::min(b.nlo, e.n);
        b.nhi = std::max(b.nhi, e.n);
    }
    return b;
}

EffectSet compose(const EffectSet& a, const EffectSet& b) {
    EffectSet r;
    if (a.empty() || b.empty()) return r;
    if (!a.widened && !b.widened && a.points.size() * b.points.size() <= (1u << 16)) {
        for (auto& x : a.points)
            for (auto& y : b.points) r.points.insert(effect_compose(x, y));
        return r;
    }
    EffectSet x = to_box(a), y = to_box(b);
    r.widened = true;
    r.mlo = std::min(x.mlo, sat_add(x.nlo, y.mlo));
    r.nlo = sat_add(x.nlo, y.nlo);
    r.nhi = sat_add(x.nhi, y.nhi);
    return r;
}

void unite(EffectSet& into, const EffectSet& s) {
    if (s.empty()) return;
    if (!into.widened && !s.widened) {
        into.points.insert(s.points.begin(), s.points.end());
        return;
    }
    bool was_empty = into.empty();
    EffectSet a = to_box(into), b = to_box(s);
    if (was_empty) a = b;
    else {
        a.mlo = std::min(a.mlo, b.mlo);
        a.nlo = std::min(a.nlo, b.nlo);
        a.nhi = std::max(a.nhi, b.nhi);
    }
    into = a;
}

bool subset(const EffectSet& a, const EffectSet& b) {
    if (a.empty()) return true;
    if (b.empty()) return false;
    if (!a.widened) {
        for (auto& e : a.points)
            if (!b.contains(e)) return false;
        return true;
    }
    if (!b.widened) return false;
    return a.mlo >= b.mlo && a.nlo >= b.nlo && a.nhi <= b.nhi;
}

EffectSet widen(const EffectSet& old, const EffectSet& now) {
    EffectSet o = to_box(old), n = to_box(now);
    if (old.empty()) return n;
    EffectSet w = n;
    if (n.mlo < o.mlo) w.mlo = -kInf;
    if (n.nlo < o.nlo) w.nlo = -kInf;
    if (n.nhi > o.nhi) w.nhi = kInf;
    return w;
}

struct LetterStep {
    int to;
    Effect e;
};

// per (state, letter) effect, or nullopt when the move depends on the stack top
std::optional<LetterStep> letter_step(const Dpda& d, int q, int a, int reject) {
    if (q == reject || a < 0) return LetterStep{reject, {0, 0}};
    const Dpda::Move* low = d.move(q, a, 0);
    const Dpda::Move* high = d.move(q, a, 1);
    if (!low && !high) return LetterStep{reject, {0, 0}};
    if (!low && high && high->op == Dpda::Pop) return LetterStep{high->to, {-1, -1}};
    if (low && high && low->to == high->to && low->op == high->op && low->op != Dpda::Pop)
        return LetterStep{low->to, low->op == Dpda::Push ? Effect{0, 1} : Effect{0, 0}};
    return std::nullopt;
}

}  // namespace

bool EffectSet::contains(const Effect& e) const {
    if (!widened) return points.count(e) != 0;
    return e.m >= mlo && e.n >= nlo && e.n <= nhi;
}

std::string EffectSet::str() const {
    auto b = [](std::int64_t v) {
        if (v >= kInf) return std::string("inf");
        if (v <= -kInf) return std::string("-inf");
        return std::to_string(v);
    };
    if (widened) {
        if (empty()) return "{}";
        return "{(m,n) | m >= " + b(mlo) + ", " + b(nlo) + " <= n <= " + b(nhi) + "}";
    }
    std::string s = "{";
    for (auto& e : points) s += (s.size() > 1 ? ", " : "") + std::string("(") + std::to_string(e.m) + "," + std::to_string(e.n) + ")";
    return s + "}";
}

const std::map<int, EffectSet>& EffectTable::at(int nt, int q) const {
    static const std::map<int, EffectSet> none;
    auto it = sets.find({nt, q});
    return it == sets.end() ? none : it->second;
}

std::pair<int, Effect> word_effect(const Dpda& d, const Grammar& g, const Word& w, int from) {
    int reject = static_cast<int>(d.states.size());
    int q = from;
    Effect acc{0, 0};
    for (int s : w) {
        auto a = d.find_letter(g.name(s));
        auto st = letter_step(d, q, a ? *a : -1, reject);
        if (!st) throw DpdaError("machine is not counter-uniform");
        acc = effect_compose(acc, st->e);
        q = st->to;
    }
    return {q, acc};
}

EffectTable effect_fixpoint(const Grammar& g, const Dpda& d, int max_rounds, std::size_t max_points) {
    EffectTable t;
    const int nq = static_cast<int>(d.states.size()) + 1;
    t.reject = nq - 1;
    std::map<std::pair<int, int>, LetterStep> steps;
    for (int s : g.terminals()) {
        auto a = d.find_letter(g.name(s));
        for (int q = 0; q < nq; ++q) {
            auto st = letter_step(d, q, a ? *a : -1, t.reject);
            if (!st) {
                t.uniform = false;
                return t;
            }
            steps[{s, q}] = *st;
        }
    }
    using Row = std::map<int, EffectSet>;
    auto& E = t.sets;
    auto eval = [&](const Production& p, int q) {
        Row cur;
        cur[q].points.insert({0, 0});
        for (int s : p.rhs) {
            Row nxt;
            for (auto& [q1, es] : cur) {
                if (es.empty()) continue;
                if (g.is_terminal(s)) {
                    auto& st = steps.at({s, q1});
                    EffectSet one;
                    one.points.insert(st.e);
                    unite(nxt[st.to], compose(es, one));
                } else {
                    auto it = E.find({s, q1});
                    if (it == E.end()) continue;
                    for (auto& [q2, ys] : it->second) unite(nxt[q2], compose(es, ys));
                }
            }
            cur = std::move(nxt);
            if (cur.empty()) break;
        }
        return cur;
    };
    auto round = [&]() {
        std::map<std::pair<int, int>, Row> next;
        for (auto& p : g.prods)
            for (int q = 0; q < nq; ++q) {
                Row r = eval(p, q);
                for (auto& [q2, es] : r)
                    if (!es.empty()) unite(next[{p.lhs, q}][q2], es);
            }
        return next;
    };
    std::map<std::pair<int, int>, int> widened_rounds;
    for (int iter = 0;; ++iter) {
        auto next = round();
        ++t.rounds;
        bool changed = false;
        for (auto& [k, row] : next)
            for (auto& [q2, es] : row) {
                EffectSet& old = E[k][q2];
                if (subset(es, old)) continue;
                changed = true;
                bool grow = iter >= max_rounds || es.widened || old.widened || es.points.size() > max_points;
                EffectSet u = old;
                unite(u, es);
                if (!grow) {
                    old = u;
                    continue;
                }
                int& wr = widened_rounds[{k.first * nq + k.second, q2}];
                old = (old.widened && wr++ >= 2) ? widen(old, to_box(u)) : to_box(u);
                t.widened = true;
            }
        if (!changed) break;
    }
    // one more round must not escape the table
    auto check = round();
    for (auto& [k, row] : check)
        for (auto& [q2, es] : row)
            if (!subset(es, E[k][q2])) throw std::logic_error("effect table is not a post-fixpoint");
    for (auto& [k, row] : E)
        for (auto& [q2, es] : row) t.widened = t.widened || es.widened;
    return t;
}

ProofResult prove_inclusion(const Grammar& g, const Dpda& d) {
    ProofResult r;
    if (!d.one_counter()) {
        r.reason = "machine has more than one stack symbol";
        return r;
    }
    EffectTable t = effect_fixpoint(g, d);
    if (!t.uniform) {
        r.reason = "machine moves depend on the stack top beyond underflow";
        return r;
    }
    r.widened = t.widened;
    for (auto& [q, es] : t.at(g.start, d.initial)) {
        if (es.empty()) continue;
        if (q == t.reject) {
            r.reason = "some word takes a missing move";
            return r;
        }
        if (!es.widened) {
            for (auto& e : es.points) {
                if (e.m < 0) {
                    r.reason = "some word pops the bottom marker";
                    return r;
                }
                if (!d.accepting(q, e.n == 0 ? 0 : 1)) {
                    r.reason = "some word ends outside acceptance";
                    return r;
                }
            }
            continue;
        }
        if (es.mlo < 0) {
            r.reason = std::string(t.widened ? "widened: " : "") + "underflow not excluded";
            return r;
        }
        bool ok = d.accepting(q, Dpda::kAny) || (d.accepting(q, 0) && d.accepting(q, 1)) ||
                  (d.accepting(q, 0) && es.nlo == 0 && es.nhi == 0) || (d.accepting(q, 1) && es.nlo >= 1);
        if (!ok) {
            r.reason = "widened: final counter not pinned";
            return r;
        }
    }
    r.proved = true;
    return r;
}

std::optional<Refutation> refute_inclusion(const Grammar& g, const Dpda& d, int bound, bool* truncated) {
    auto c = to_cnf(g);
    auto en = enumerate_words(g, c, bound);
    if (truncated) *truncated = en.truncated;
    for (auto& w : en.words) {
        if (dpda_accepts(d, g, w)) continue;
        auto der = parse(g, c, w);
        if (!der) throw std::logic_error("enumerated word does not parse");
        return Refutation{w, *der};
    }
    return std::nullopt;
}

InclusionResult inclusion_check(const Grammar& g, const Dpda& d, int bound, bool prove) {
    InclusionResult r;
    bool trunc = false;
    if (auto ref = refute_inclusion(g, d, bound, &trunc)) {
        r.kind = InclusionResult::Counterexample;
        r.word = ref->word;
        r.derivation = ref->derivation;
        return r;
    }
    if (prove) {
        auto p = prove_inclusion(g, d);
        r.widened = p.widened;
        if (p.proved) {
            r.kind = InclusionResult::Included;
            return r;
        }
        r.reason = p.reason;
    } else {
        r.reason = "proof strategy disabled";
    }
    r.reason = "bound " + std::to_string(bound) + " reached" + (trunc ? " (enumeration truncated)" : "") + "; " + r.reason;
    return r;
}

}  // namespace cfproto

#include "cfproto/grammar.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cfproto {

int Grammar::terminal(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) {
        if (!is_term_[it->second]) throw std::invalid_argument("symbol is a nonterminal: " + name);
        return it->second;
    }
    int id = num_symbols();
    names_.push_back(name);
    is_term_.push_back(true);
    index_[name] = id;
    return id;
}

int Grammar::nonterminal(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) {
        if (is_term_[it->second]) throw std::invalid_argument("symbol is a terminal: " + name);
        return it->second;
    }
    int id = num_symbols();
    names_.push_back(name);
    is_term_.push_back(false);
    index_[name] = id;
    return id;
}

std::optional<int> Grammar::find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

int Grammar::add(int lhs, std::vector<int> rhs, int provenance, int rule) {
    if (lhs < 0 || lhs >= num_symbols() || is_term_[lhs]) throw std::invalid_argument("bad production lhs");
    for (int s : rhs)
        if (s < 0 || s >= num_symbols()) throw std::invalid_argument("bad production rhs");
    prods.push_back({lhs, std::move(rhs), provenance, rule});
    return static_cast<int>(prods.size()) - 1;
}

std::vector<int> Grammar::terminals() const {
    std::vector<int> out;
    for (int i = 0; i < num_symbols(); ++i)
        if (is_term_[i]) out.push_back(i);
    return out;
}

std::vector<int> Grammar::nonterminals() const {
    std::vector<int> out;
    for (int i = 0; i < num_symbols(); ++i)
        if (!is_term_[i]) out.push_back(i);
    return out;
}

std::string Grammar::word_string(const Word& w) const {
    if (w.empty()) return "eps";
    std::string s;
    for (size_t i = 0; i < w.size(); ++i) {
        if (i) s += ' ';
        s += names_[w[i]];
    }
    return s;
}

std::string Grammar::to_text(bool with_provenance) const {
    std::ostringstream os;
    if (start >= 0) os << "start: " << names_[start] << ";\n";
    std::vector<int> order;
    std::vector<bool> seen(names_.size(), false);
    if (start >= 0) {
        order.push_back(start);
        seen[start] = true;
    }
    for (auto& p : prods)
        if (!seen[p.lhs]) {
            seen[p.lhs] = true;
            order.push_back(p.lhs);
        }
    for (int a : order) {
        os << names_[a] << " ->";
        bool first = true;
        for (auto& p : prods) {
            if (p.lhs != a) continue;
            os << (first ? " " : "\n    | ");
            first = false;
            if (p.rhs.empty()) os << "eps";
            for (size_t i = 0; i < p.rhs.size(); ++i) os << (i ? " " : "") << names_[p.rhs[i]];
            if (with_provenance && p.provenance >= 0) os << "  [e" << p.provenance << "]";
        }
        os << " ;\n";
    }
    return os.str();
}

// ---------------------------------------------------------------- derivations

static void yield_into(const Grammar& g, const Derivation& d, Word& out) {
    const auto& p = g.prods.at(d.prod);
    size_t k = 0;
    for (int s : p.rhs) {
        if (g.is_terminal(s))
            out.push_back(s);
        else
            yield_into(g, d.kids.at(k++), out);
    }
}

Word yield(const Grammar& g, const Derivation& d) {
    Word w;
    yield_into(g, d, w);
    return w;
}

static void leftmost_into(const Derivation& d, std::vector<int>& out) {
    out.push_back(d.prod);
    for (auto& k : d.kids) leftmost_into(k, out);
}

std::vector<int> leftmost(const Derivation& d) {
    std::vector<int> out;
    leftmost_into(d, out);
    return out;
}

bool derivation_valid(const Grammar& g, const Derivation& d, int root) {
    if (d.prod < 0 || d.prod >= static_cast<int>(g.prods.size())) return false;
    const auto& p = g.prods[d.prod];
    if (p.lhs != root) return false;
    size_t k = 0;
    for (int s : p.rhs) {
        if (g.is_terminal(s)) continue;
        if (k >= d.kids.size() || !derivation_valid(g, d.kids[k], s)) return false;
        ++k;
    }
    return k == d.kids.size();
}

// ---------------------------------------------------------------- analyses

std::vector<bool> generating(const Grammar& g) {
    std::vector<bool> gen(g.num_symbols(), false);
    for (int t : g.terminals()) gen[t] = true;
    for (bool changed = true; changed;) {
        changed = false;
        for (auto& p : g.prods) {
            if (gen[p.lhs]) continue;
            if (std::all_of(p.rhs.begin(), p.rhs.end(), [&](int s) { return gen[s]; })) {
                gen[p.lhs] = true;
                changed = true;
            }
        }
    }
    return gen;
}

std::vector<bool> nullable(const Grammar& g) {
    std::vector<bool> nul(g.num_symbols(), false);
    for (bool changed = true; changed;) {
        changed = false;
        for (auto& p : g.prods) {
            if (nul[p.lhs]) continue;
            if (std::all_of(p.rhs.begin(), p.rhs.end(), [&](int s) { return nul[s]; })) {
                nul[p.lhs] = true;
                changed = true;
            }
        }
    }
    return nul;
}

bool is_empty(const Grammar& g) { return g.start < 0 || !generating(g)[g.start]; }

// Knuth's generalization of Dijkstra: finalize the cheapest nonterminal whose
// candidate production only uses finalized symbols.
std::optional<Derivation> shortest_derivation(const Grammar& g, int sym) {
    if (sym < 0 || g.is_terminal(sym)) return std::nullopt;
    const long INF = std::numeric_limits<long>::max();
    int ns = g.num_symbols();
    std::vector<long> dist(ns, INF);
    std::vector<int> best(ns, -1);
    std::vector<bool> fin(ns, false);
    for (int t : g.terminals()) {
        dist[t] = 1;
        fin[t] = true;
    }
    // per production: number of unfinalized rhs nonterminals, running cost
    std::vector<int> pending(g.prods.size(), 0);
    std::vector<long> cost(g.prods.size(), 0);
    std::vector<std::vector<int>> uses(ns);
    for (size_t i = 0; i < g.prods.size(); ++i) {
        for (int s : g.prods[i].rhs) {
            if (g.is_terminal(s))
                cost[i] += 1;
            else {
                pending[i]++;
                if (uses[s].empty() || uses[s].back() != static_cast<int>(i)) uses[s].push_back(static_cast<int>(i));
            }
        }
    }
    std::set<std::pair<long, int>> ready;  // (cost, prod)
    for (size_t i = 0; i < g.prods.size(); ++i)
        if (pending[i] == 0) ready.insert({cost[i], static_cast<int>(i)});
    while (!ready.empty()) {
        auto [c, p] = *ready.begin();
        ready.erase(ready.begin());
        int a = g.prods[p].lhs;
        if (fin[a]) continue;
        fin[a] = true;
        dist[a] = c;
        best[a] = p;
        if (a == sym) break;
        for (int q : uses[a]) {
            // a may occur several times in the rhs
            for (int s : g.prods[q].rhs)
                if (s == a) {
                    cost[q] += c;
                    if (--pending[q] == 0) ready.insert({cost[q], q});
                }
        }
    }
    if (!fin[sym]) return std::nullopt;
    // build tree; all rhs of best productions were finalized before their lhs
    std::function<Derivation(int)> build = [&](int a) {
        Derivation d{best[a], {}};
        for (int s : g.prods[best[a]].rhs)
            if (!g.is_terminal(s)) d.kids.push_back(build(s));
        return d;
    };
    return build(sym);
}

std::optional<Word> shortest_word(const Grammar& g, int sym) {
    if (sym >= 0 && g.is_terminal(sym)) return Word{sym};
    auto d = shortest_derivation(g, sym);
    if (!d) return std::nullopt;
    return yield(g, *d);
}

// ---------------------------------------------------------------- CNF

namespace {

enum NtKind { KOrig = 0, KWrap = -1, KSuffix = -2, KStart = -3 };

struct Builder {
    const Grammar& g;
    CnfConversion out;
    std::map<int, int> orig_nt;  // original nonterminal -> cnf nt
    std::map<int, int> wrap_nt;  // terminal -> cnf nt

    explicit Builder(const Grammar& gr) : g(gr) {}

    int new_nt(const std::string& name, int origin) {
        out.cnf.nt_names.push_back(name);
        out.cnf.nt_origin.push_back(origin);
        return out.cnf.num_nt++;
    }
    int of_orig(int a) {
        auto it = orig_nt.find(a);
        if (it != orig_nt.end()) return it->second;
        return orig_nt[a] = new_nt(g.name(a), a);
    }
    int of_sym(int s) {
        if (!g.is_terminal(s)) return of_orig(s);
        auto it = wrap_nt.find(s);
        if (it != wrap_nt.end()) return it->second;
        int n = new_nt("T<" + g.name(s) + ">", KWrap);
        wrap_nt[s] = n;
        out.cnf.rules.push_back({CnfRule::Terminal, n, s, -1});
        out.cnf.back.push_back({CnfBack::Wrap, {}, -1, 0});
        return n;
    }
    void rule(CnfRule r, CnfBack b) {
        out.cnf.rules.push_back(r);
        out.cnf.back.push_back(std::move(b));
    }
};

}  // namespace

CnfConversion to_cnf(const Grammar& g) {
    Builder B(g);
    int ns = g.num_symbols();
    auto gen = generating(g);
    auto nul = nullable(g);

    // epsilon derivations
    B.out.eps_tree.assign(ns, std::nullopt);
    for (bool changed = true; changed;) {
        changed = false;
        for (size_t i = 0; i < g.prods.size(); ++i) {
            const auto& p = g.prods[i];
            if (B.out.eps_tree[p.lhs]) continue;
            bool ok = true;
            for (int s : p.rhs)
                if (g.is_terminal(s) || !B.out.eps_tree[s]) ok = false;
            if (!ok) continue;
            Derivation d{static_cast<int>(i), {}};
            for (int s : p.rhs) d.kids.push_back(*B.out.eps_tree[s]);
            B.out.eps_tree[p.lhs] = d;
            changed = true;
        }
    }

    struct Unit {
        int to;
        int prod;
        unsigned mask;
    };
    std::vector<std::vector<Unit>> units(ns);
    // base (non-unit) rule indices per original nonterminal
    std::vector<std::vector<int>> base(ns);

    if (g.start >= 0) B.of_orig(g.start);
    for (size_t pi = 0; pi < g.prods.size(); ++pi) {
        const auto& p = g.prods[pi];
        if (!gen[p.lhs]) continue;
        if (!std::all_of(p.rhs.begin(), p.rhs.end(), [&](int s) { return gen[s]; })) continue;
        std::vector<int> npos;
        for (size_t k = 0; k < p.rhs.size(); ++k)
            if (!g.is_terminal(p.rhs[k]) && nul[p.rhs[k]]) npos.push_back(static_cast<int>(k));
        if (npos.size() > 16 || p.rhs.size() > 31) throw std::runtime_error("production too long for CNF conversion");
        for (unsigned sub = 0; sub < (1u << npos.size()); ++sub) {
            unsigned mask = 0;
            for (size_t j = 0; j < npos.size(); ++j)
                if (sub & (1u << j)) mask |= 1u << npos[j];
            std::vector<int> kept;
            for (size_t k = 0; k < p.rhs.size(); ++k)
                if (!(mask & (1u << k))) kept.push_back(p.rhs[k]);
            if (kept.empty()) continue;
            int lhs = B.of_orig(p.lhs);
            if (kept.size() == 1) {
                if (g.is_terminal(kept[0])) {
                    base[p.lhs].push_back(static_cast<int>(B.out.cnf.rules.size()));
                    B.rule({CnfRule::Terminal, lhs, kept[0], -1}, {CnfBack::Full, {}, static_cast<int>(pi), mask});
                } else {
                    units[p.lhs].push_back({kept[0], static_cast<int>(pi), mask});
                    B.of_orig(kept[0]);
                }
                continue;
            }
            size_t k = kept.size();
            std::vector<int> syms;
            for (int s : kept) syms.push_back(B.of_sym(s));
            // suffix symbols for kept[i..k-1], i = 1..k-2
            std::vector<int> suf(k, -1);
            for (size_t i = 1; i + 1 < k; ++i)
                suf[i] = B.new_nt("<" + std::to_string(pi) + ":" + std::to_string(mask) + ":" + std::to_string(i) + ">",
                                  KSuffix);
            auto right_of = [&](size_t i) { return i + 2 == k ? syms[k - 1] : suf[i + 1]; };
            base[p.lhs].push_back(static_cast<int>(B.out.cnf.rules.size()));
            B.rule({CnfRule::Binary, lhs, syms[0], right_of(0)}, {CnfBack::Full, {}, static_cast<int>(pi), mask});
            for (size_t i = 1; i + 1 < k; ++i)
                B.rule({CnfRule::Binary, suf[i], syms[i], right_of(i)}, {CnfBack::Suffix, {}, -1, 0});
        }
    }

    // unit closure: copy base rules of unit-reachable nonterminals
    std::vector<int> origs;
    for (auto& [a, n] : B.orig_nt) origs.push_back(a);
    std::map<int, std::vector<std::pair<int, std::vector<std::pair<int, unsigned>>>>> chains;
    for (int a : origs) {
        std::map<int, std::vector<std::pair<int, unsigned>>> path;
        std::deque<int> q{a};
        path[a] = {};
        while (!q.empty()) {
            int x = q.front();
            q.pop_front();
            for (auto& u : units[x]) {
                if (path.count(u.to)) continue;
                auto pp = path[x];
                pp.push_back({u.prod, u.mask});
                path[u.to] = pp;
                q.push_back(u.to);
            }
        }
        for (auto& [b, ch] : path)
            if (b != a) chains[a].push_back({b, ch});
    }
    for (int a : origs) {
        int lhs = B.of_orig(a);
        for (auto& [b, ch] : chains[a]) {
            for (int r : base[b]) {
                CnfRule cr = B.out.cnf.rules[r];
                CnfBack cb = B.out.cnf.back[r];
                cr.lhs = lhs;
                cb.units = ch;
                B.rule(cr, cb);
            }
        }
    }

    // fresh start symbol
    auto& C = B.out.cnf;
    if (g.start >= 0 && gen[g.start]) {
        int s0 = B.new_nt("S'", KStart);
        C.start = s0;
        int sn = B.orig_nt.at(g.start);
        size_t nrules = C.rules.size();
        for (size_t r = 0; r < nrules; ++r) {
            if (C.rules[r].lhs != sn) continue;
            CnfRule cr = C.rules[r];
            cr.lhs = s0;
            B.rule(cr, C.back[r]);
        }
        if (nul[g.start]) B.rule({CnfRule::Epsilon, s0, -1, -1}, {CnfBack::Eps, {}, -1, 0});
    }
    return std::move(B.out);
}

std::optional<CnfParse> cyk_member(const CnfConversion& c, const Word& w) {
    const auto& C = c.cnf;
    if (C.start < 0) return std::nullopt;
    size_t n = w.size();
    if (n == 0) {
        for (size_t r = 0; r < C.rules.size(); ++r)
            if (C.rules[r].kind == CnfRule::Epsilon && C.rules[r].lhs == C.start) return CnfParse{static_cast<int>(r), {}};
        return std::nullopt;
    }
    int N = C.num_nt;
    // cell(i, len) -> per nt: rule index and split
    auto idx = [&](size_t i, size_t len) { return (len - 1) * n + i; };
    std::vector<std::vector<int>> rule_at(n * n), split_at(n * n);
    for (size_t i = 0; i < n; ++i) {
        auto& ra = rule_at[idx(i, 1)];
        ra.assign(N, -1);
        for (size_t r = 0; r < C.rules.size(); ++r) {
            const auto& cr = C.rules[r];
            if (cr.kind == CnfRule::Terminal && cr.a == w[i] && ra[cr.lhs] < 0) ra[cr.lhs] = static_cast<int>(r);
        }
    }
    std::vector<int> binary;
    for (size_t r = 0; r < C.rules.size(); ++r)
        if (C.rules[r].kind == CnfRule::Binary) binary.push_back(static_cast<int>(r));
    for (size_t len = 2; len <= n; ++len) {
        for (size_t i = 0; i + len <= n; ++i) {
            auto& ra = rule_at[idx(i, len)];
            auto& sa = split_at[idx(i, len)];
            ra.assign(N, -1);
            sa.assign(N, 0);
            for (int r : binary) {
                const auto& cr = C.rules[r];
                if (ra[cr.lhs] >= 0) continue;
                for (size_t s = 1; s < len; ++s) {
                    if (rule_at[idx(i, s)][cr.a] >= 0 && rule_at[idx(i + s, len - s)][cr.b] >= 0) {
                        ra[cr.lhs] = r;
                        sa[cr.lhs] = static_cast<int>(s);
                        break;
                    }
                }
            }
        }
    }
    if (rule_at[idx(0, n)][C.start] < 0) return std::nullopt;
    std::function<CnfParse(size_t, size_t, int)> build = [&](size_t i, size_t len, int nt) {
        int r = rule_at[idx(i, len)][nt];
        CnfParse p{r, {}};
        if (len > 1) {
            size_t s = split_at[idx(i, len)][nt];
            p.kids.push_back(build(i, s, C.rules[r].a));
            p.kids.push_back(build(i + s, len - s, C.rules[r].b));
        }
        return p;
    };
    return build(0, n, C.start);
}

namespace {

struct Item {
    int terminal = -1;  // >= 0 for a terminal
    Derivation d;
};

struct Rebuild {
    const Grammar& g;
    const CnfConversion& c;

    Item item(const CnfParse& p) {
        const auto& r = c.cnf.rules[p.rule];
        if (c.cnf.back[p.rule].kind == CnfBack::Wrap) return {r.a, {}};
        return {-1, full(p)};
    }

    void collect(const CnfParse& p, std::vector<Item>& out) {
        // p is a Binary rule application (Full or Suffix)
        out.push_back(item(p.kids[0]));
        const auto& right = p.kids[1];
        if (c.cnf.back[right.rule].kind == CnfBack::Suffix)
            collect(right, out);
        else
            out.push_back(item(right));
    }

    Derivation wrap(int prod, unsigned mask, std::vector<Item>& kept) {
        Derivation d{prod, {}};
        size_t k = 0;
        const auto& rhs = g.prods[prod].rhs;
        for (size_t i = 0; i < rhs.size(); ++i) {
            if (mask & (1u << i)) {
                d.kids.push_back(*c.eps_tree[rhs[i]]);
                continue;
            }
            Item& it = kept.at(k++);
            if (!g.is_terminal(rhs[i])) d.kids.push_back(std::move(it.d));
        }
        return d;
    }

    Derivation full(const CnfParse& p) {
        const auto& r = c.cnf.rules[p.rule];
        const auto& b = c.cnf.back[p.rule];
        if (b.kind == CnfBack::Eps) return *c.eps_tree[g.start];
        std::vector<Item> kept;
        if (r.kind == CnfRule::Terminal)
            kept.push_back({r.a, {}});
        else
            collect(p, kept);
        Derivation d = wrap(b.prod, b.mask, kept);
        for (auto it = b.units.rbegin(); it != b.units.rend(); ++it) {
            std::vector<Item> one{{-1, std::move(d)}};
            d = wrap(it->first, it->second, one);
        }
        return d;
    }
};

}  // namespace

Derivation cnf_parse_to_derivation(const Grammar& g, const CnfConversion& c, const CnfParse& p) {
    return Rebuild{g, c}.full(p);
}

std::optional<Derivation> parse(const Grammar& g, const CnfConversion& c, const Word& w) {
    auto p = cyk_member(c, w);
    if (!p) return std::nullopt;
    return cnf_parse_to_derivation(g, c, *p);
}

Enumeration enumerate_words(const Grammar& g, const CnfConversion& c, int max_len, std::size_t cap) {
    (void)g;
    Enumeration out;
    const auto& C = c.cnf;
    if (C.start < 0) return out;
    for (auto& r : C.rules)
        if (r.kind == CnfRule::Epsilon) out.words.push_back({});
    // words[nt][len]
    std::vector<std::vector<std::set<Word>>> W(C.num_nt, std::vector<std::set<Word>>(max_len + 1));
    std::size_t stored = 0;
    for (int len = 1; len <= max_len; ++len) {
        for (auto& r : C.rules) {
            if (len == 1 && r.kind == CnfRule::Terminal) {
                if (W[r.lhs][1].insert(Word{r.a}).second) ++stored;
            } else if (r.kind == CnfRule::Binary) {
                for (int s = 1; s < len; ++s)
                    for (auto& u : W[r.a][s])
                        for (auto& v : W[r.b][len - s]) {
                            Word x = u;
                            x.insert(x.end(), v.begin(), v.end());
                            if (W[r.lhs][len].insert(std::move(x)).second) ++stored;
                        }
            }
            if (stored > cap) {
                out.truncated = true;
                return out;
            }
        }
        for (auto& w : W[C.start][len]) out.words.push_back(w);
    }
    return out;
}

Enumeration enumerate_words(const Grammar& g, int max_len, std::size_t cap) {
    return enumerate_words(g, to_cnf(g), max_len, cap);
}

std::vector<Word> all_words(const std::vector<int>& alphabet, int n) {
    std::vector<Word> out{{}};
    std::vector<int> sorted = alphabet;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < n; ++i) {
        std::vector<Word> next;
        for (auto& w : out)
            for (int a : sorted) {
                Word x = w;
                x.push_back(a);
                next.push_back(std::move(x));
            }
        out = std::move(next);
    }
    return out;
}

}  // namespace cfproto

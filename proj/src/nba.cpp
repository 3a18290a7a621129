#include "mixplan/nba.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <limits>
#include <set>
#include <stdexcept>
#include <tuple>

#include "mixplan/error.hpp"

namespace mixplan {

bool Guard::holds(Label l) const {
    return std::any_of(cubes.begin(), cubes.end(), [l](const Cube& c) { return c.holds(l); });
}

bool Guard::satisfiable() const {
    return std::any_of(cubes.begin(), cubes.end(), [](const Cube& c) { return c.satisfiable(); });
}

int Guard::dist(Label l) const {
    int best = std::numeric_limits<int>::max();
    for (const Cube& c : cubes)
        if (c.satisfiable()) best = std::min(best, std::popcount(l & c.neg));
    return best;
}

std::string Guard::to_string(const std::vector<std::string>& ap) const {
    if (cubes.empty()) return "false";
    std::string out;
    for (std::size_t k = 0; k < cubes.size(); ++k) {
        std::string term;
        for (std::size_t i = 0; i < ap.size(); ++i) {
            const Label bit = Label{1} << i;
            if (cubes[k].pos & bit) term += (term.empty() ? "" : " && ") + ap[i];
            if (cubes[k].neg & bit) term += (term.empty() ? "!" : " && !") + ap[i];
        }
        if (term.empty()) term = "true";
        if (cubes.size() > 1) term = "(" + term + ")";
        out += (k ? " || " : "") + term;
    }
    return out;
}

Nba::Nba(std::vector<std::string> ap, int num_states, std::vector<int> initial,
         std::vector<bool> accepting, std::vector<NbaEdge> edges)
    : ap_(std::move(ap)),
      num_states_(num_states),
      initial_(std::move(initial)),
      accepting_(std::move(accepting)),
      out_(static_cast<std::size_t>(num_states)) {
    if (ap_.size() > 64) throw std::invalid_argument("at most 64 atomic propositions are supported");
    if (initial_.empty()) throw std::invalid_argument("automaton needs an initial state");
    if (accepting_.size() != static_cast<std::size_t>(num_states_))
        throw std::invalid_argument("accepting flags do not match the state count");
    for (int q : initial_) check_state(q);
    for (NbaEdge& e : edges) {
        check_state(e.src);
        check_state(e.dst);
        auto& row = out_[static_cast<std::size_t>(e.src)];
        auto [it, fresh] = index_.emplace(std::pair{e.src, e.dst}, row.size());
        if (fresh) {
            row.push_back(std::move(e));
        } else {
            auto& cubes = row[it->second].guard.cubes;
            cubes.insert(cubes.end(), e.guard.cubes.begin(), e.guard.cubes.end());
        }
    }
}

void Nba::check_state(int q) const {
    if (q < 0 || q >= num_states_) throw UnknownId("automaton state " + std::to_string(q) + " does not exist");
}

std::vector<NbaEdge> Nba::edges() const {
    std::vector<NbaEdge> all;
    for (const auto& row : out_) all.insert(all.end(), row.begin(), row.end());
    return all;
}

const Guard* Nba::guard(int q, int q2) const {
    check_state(q);
    check_state(q2);
    auto it = index_.find({q, q2});
    if (it == index_.end()) return nullptr;
    return &out_[static_cast<std::size_t>(q)][it->second].guard;
}

const LabelSet& Nba::chi(int q, int q2) const {
    const Guard* g = guard(q, q2);
    std::lock_guard lock(chi_mutex_);
    auto& slot = chi_memo_[{q, q2}];
    if (!slot) {
        slot = std::make_unique<LabelSet>();
        if (g) {
            const Label n = Label{1} << ap_.size();
            for (Label l = 0; l < n; ++l)
                if (g->holds(l)) slot->push_back(l);
        }
    }
    return *slot;
}

Label Nba::label_of(const std::vector<std::string>& names) const {
    Label l = 0;
    for (const auto& n : names) {
        auto it = std::find(ap_.begin(), ap_.end(), n);
        if (it == ap_.end()) throw UnknownId("proposition '" + n + "' is not in the automaton alphabet");
        l |= Label{1} << static_cast<unsigned>(it - ap_.begin());
    }
    return l;
}

nlohmann::json Nba::to_json() const {
    nlohmann::json j;
    j["ap"] = ap_;
    std::vector<std::string> names;
    for (int q = 0; q < num_states_; ++q) names.push_back("q" + std::to_string(q));
    j["states"] = names;
    auto& init = j["initial"] = nlohmann::json::array();
    for (int q : initial_) init.push_back(names[static_cast<std::size_t>(q)]);
    auto& acc = j["accepting"] = nlohmann::json::array();
    for (int q = 0; q < num_states_; ++q)
        if (accepting_[static_cast<std::size_t>(q)]) acc.push_back(names[static_cast<std::size_t>(q)]);
    auto& es = j["edges"] = nlohmann::json::array();
    for (const auto& row : out_)
        for (const auto& e : row)
            es.push_back({{"src", names[static_cast<std::size_t>(e.src)]},
                          {"dst", names[static_cast<std::size_t>(e.dst)]},
                          {"guard", e.guard.to_string(ap_)}});
    return j;
}

int dist(Label l, const LabelSet& chi) {
    if (chi.empty()) throw std::invalid_argument("dist requires a non-empty chi set");
    if (std::binary_search(chi.begin(), chi.end(), l)) return 0;
    int best = std::numeric_limits<int>::max();
    for (Label other : chi) best = std::min(best, std::popcount(l & ~other));
    return best;
}

namespace {

// Negation normal form over interned ids.
enum class K { TT, FF, Lit, And, Or, Next, Until, Release };

struct NnfNode {
    K k;
    int a = -1;
    int b = -1;
    int ap = -1;
    bool positive = true;
};

class Nnf {
public:
    explicit Nnf(const std::vector<std::string>& ap) : ap_(ap) {}

    int build(const ltl::Formula& f, bool negated) {
        using ltl::Op;
        switch (f.op()) {
            case Op::True: return intern({negated ? K::FF : K::TT});
            case Op::Atom: {
                auto it = std::find(ap_.begin(), ap_.end(), f.name());
                if (it == ap_.end())
                    throw UnknownId("proposition '" + f.name() + "' is not in the alphabet");
                NnfNode n{K::Lit};
                n.ap = static_cast<int>(it - ap_.begin());
                n.positive = !negated;
                return intern(n);
            }
            case Op::Not: return build(f.lhs(), !negated);
            case Op::And:
                return binary(negated ? K::Or : K::And, build(f.lhs(), negated), build(f.rhs(), negated));
            case Op::Or:
                return binary(negated ? K::And : K::Or, build(f.lhs(), negated), build(f.rhs(), negated));
            case Op::Implies:
                return binary(negated ? K::And : K::Or, build(f.lhs(), !negated), build(f.rhs(), negated));
            case Op::Next: return unary(K::Next, build(f.lhs(), negated));
            case Op::Until:
                return binary(negated ? K::Release : K::Until, build(f.lhs(), negated), build(f.rhs(), negated));
            case Op::Eventually: {
                const int t = intern({negated ? K::FF : K::TT});
                return binary(negated ? K::Release : K::Until, t, build(f.lhs(), negated));
            }
            case Op::Always: {
                const int t = intern({negated ? K::TT : K::FF});
                return binary(negated ? K::Until : K::Release, t, build(f.lhs(), negated));
            }
        }
        throw std::logic_error("unreachable");
    }

    const NnfNode& at(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    int size() const { return static_cast<int>(nodes_.size()); }

    /// Id of the complementary literal, or -1.
    int complement(int id) {
        const NnfNode& n = at(id);
        if (n.k != K::Lit) return -1;
        NnfNode c = n;
        c.positive = !n.positive;
        auto it = ids_.find(key(c));
        return it == ids_.end() ? -1 : it->second;
    }

private:
    using Key = std::tuple<int, int, int, int, bool>;
    static Key key(const NnfNode& n) { return {static_cast<int>(n.k), n.a, n.b, n.ap, n.positive}; }

    int unary(K k, int a) {
        const K ka = at(a).k;
        if (ka == K::TT || ka == K::FF) return a;
        return intern({k, a});
    }

    int binary(K k, int a, int b) {
        const K ka = at(a).k, kb = at(b).k;
        if (a == b) return a;
        switch (k) {
            case K::And:
                if (ka == K::FF || kb == K::TT) return a;
                if (kb == K::FF || ka == K::TT) return b;
                if (a > b) std::swap(a, b);
                break;
            case K::Or:
                if (ka == K::TT || kb == K::FF) return a;
                if (kb == K::TT || ka == K::FF) return b;
                if (a > b) std::swap(a, b);
                break;
            case K::Until:
                if (kb == K::TT || kb == K::FF || ka == K::FF) return b;
                if (ka == K::TT && kb == K::Until && at(at(b).a).k == K::TT) return b;
                break;
            case K::Release:
                if (kb == K::TT || kb == K::FF || ka == K::TT) return b;
                if (ka == K::FF && kb == K::Release && at(at(b).a).k == K::FF) return b;
                break;
            default: break;
        }
        return intern({k, a, b});
    }

    int intern(const NnfNode& n) {
        auto [it, fresh] = ids_.emplace(key(n), static_cast<int>(nodes_.size()));
        if (fresh) nodes_.push_back(n);
        return it->second;
    }

    const std::vector<std::string>& ap_;
    std::vector<NnfNode> nodes_;
    std::map<Key, int> ids_;
};

constexpr int kInit = -1;

struct TableauNode {
    std::set<int> incoming;
    std::set<int> fresh;  // "New" in the classical presentation
    std::set<int> old;
    std::set<int> next;
};

struct Tableau {
    std::vector<TableauNode> done;
};

Tableau expand(Nnf& nnf, int root) {
    Tableau t;
    std::vector<TableauNode> stack;
    stack.push_back(TableauNode{{kInit}, {root}, {}, {}});
    while (!stack.empty()) {
        TableauNode n = std::move(stack.back());
        stack.pop_back();
        if (n.fresh.empty()) {
            auto same = std::find_if(t.done.begin(), t.done.end(), [&](const TableauNode& d) {
                return d.old == n.old && d.next == n.next;
            });
            if (same != t.done.end()) {
                same->incoming.insert(n.incoming.begin(), n.incoming.end());
                continue;
            }
            const int id = static_cast<int>(t.done.size());
            t.done.push_back(n);
            stack.push_back(TableauNode{{id}, n.next, {}, {}});
            continue;
        }
        const int eta = *n.fresh.begin();
        n.fresh.erase(n.fresh.begin());
        if (n.old.count(eta)) {
            stack.push_back(std::move(n));
            continue;
        }
        const NnfNode node = nnf.at(eta);
        auto add_new = [&](TableauNode& m, int f) {
            if (!m.old.count(f)) m.fresh.insert(f);
        };
        switch (node.k) {
            case K::FF: break;
            case K::TT:
                n.old.insert(eta);
                stack.push_back(std::move(n));
                break;
            case K::Lit: {
                const int c = nnf.complement(eta);
                if (c >= 0 && n.old.count(c)) break;
                n.old.insert(eta);
                stack.push_back(std::move(n));
                break;
            }
            case K::And:
                n.old.insert(eta);
                add_new(n, node.a);
                add_new(n, node.b);
                stack.push_back(std::move(n));
                break;
            case K::Next:
                n.old.insert(eta);
                n.next.insert(node.a);
                stack.push_back(std::move(n));
                break;
            case K::Or:
            case K::Until:
            case K::Release: {
                n.old.insert(eta);
                TableauNode n1 = n;
                TableauNode n2 = std::move(n);
                if (node.k == K::Or) {
                    add_new(n1, node.a);
                    add_new(n2, node.b);
                } else if (node.k == K::Until) {
                    add_new(n1, node.a);
                    n1.next.insert(eta);
                    add_new(n2, node.b);
                } else {
                    add_new(n1, node.a);
                    add_new(n1, node.b);
                    add_new(n2, node.b);
                    n2.next.insert(eta);
                }
                // n1 is expanded after n2; order only affects numbering.
                stack.push_back(std::move(n1));
                stack.push_back(std::move(n2));
                break;
            }
        }
    }
    return t;
}

// Coarsest partition in which equivalent states agree on acceptance and on their sets of
// (guard cube, successor block). Merging each block preserves the language.
std::shared_ptr<const Nba> quotient(std::vector<std::string> ap, int n, const std::vector<bool>& acc,
                                    const std::vector<NbaEdge>& edges) {
    std::vector<int> block(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) block[static_cast<std::size_t>(s)] = acc[static_cast<std::size_t>(s)] ? 1 : 0;
    int blocks = 0;
    while (true) {
        using Sig = std::pair<int, std::vector<std::tuple<Label, Label, int>>>;
        std::vector<Sig> sig(static_cast<std::size_t>(n));
        for (int s = 0; s < n; ++s) sig[static_cast<std::size_t>(s)].first = block[static_cast<std::size_t>(s)];
        for (const auto& e : edges)
            for (const auto& c : e.guard.cubes)
                sig[static_cast<std::size_t>(e.src)].second.emplace_back(c.pos, c.neg, block[static_cast<std::size_t>(e.dst)]);
        std::map<Sig, int> ids;
        std::vector<int> next(static_cast<std::size_t>(n));
        for (int s = 0; s < n; ++s) {
            auto& v = sig[static_cast<std::size_t>(s)].second;
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
            next[static_cast<std::size_t>(s)] =
                ids.emplace(std::move(sig[static_cast<std::size_t>(s)]), static_cast<int>(ids.size())).first->second;
        }
        const int count = static_cast<int>(ids.size());
        block = std::move(next);
        if (count == blocks) break;
        blocks = count;
    }

    // Renumber blocks in order of first member so state 0 stays initial.
    std::vector<int> renum(static_cast<std::size_t>(blocks), -1);
    int count = 0;
    for (int s = 0; s < n; ++s) {
        int& r = renum[static_cast<std::size_t>(block[static_cast<std::size_t>(s)])];
        if (r < 0) r = count++;
    }
    std::vector<bool> out_acc(static_cast<std::size_t>(count));
    std::map<std::pair<int, int>, std::vector<Cube>> merged;
    for (int s = 0; s < n; ++s)
        out_acc[static_cast<std::size_t>(renum[static_cast<std::size_t>(block[static_cast<std::size_t>(s)])])] =
            acc[static_cast<std::size_t>(s)];
    for (const auto& e : edges) {
        auto& cubes = merged[{renum[static_cast<std::size_t>(block[static_cast<std::size_t>(e.src)])],
                              renum[static_cast<std::size_t>(block[static_cast<std::size_t>(e.dst)])]}];
        for (const auto& c : e.guard.cubes)
            if (std::find(cubes.begin(), cubes.end(), c) == cubes.end()) cubes.push_back(c);
    }
    std::vector<NbaEdge> out;
    for (auto& [k, cubes] : merged) out.push_back(NbaEdge{k.first, k.second, Guard{std::move(cubes)}});
    return std::make_shared<const Nba>(std::move(ap), count, std::vector<int>{0}, std::move(out_acc), std::move(out));
}

}  // namespace

std::shared_ptr<const Nba> to_nba(const ltl::Formula& phi, std::vector<std::string> ap) {
    if (ap.empty()) ap = ltl::atoms(phi);
    if (ap.size() > 64) throw std::invalid_argument("at most 64 atomic propositions are supported");
    Nnf nnf(ap);
    const int root = nnf.build(phi, false);
    const Tableau tab = expand(nnf, root);
    const int n = static_cast<int>(tab.done.size());

    // Edge guard into a node: the literals it commits to.
    std::vector<Cube> lits(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int f : tab.done[static_cast<std::size_t>(i)].old) {
            const NnfNode& node = nnf.at(f);
            if (node.k != K::Lit) continue;
            const Label bit = Label{1} << node.ap;
            (node.positive ? lits[static_cast<std::size_t>(i)].pos : lits[static_cast<std::size_t>(i)].neg) |= bit;
        }

    // Generalized acceptance: one set per Until subformula.
    std::vector<std::vector<bool>> acc_sets;
    for (int f = 0; f < nnf.size(); ++f) {
        const NnfNode& node = nnf.at(f);
        if (node.k != K::Until) continue;
        std::vector<bool> set(static_cast<std::size_t>(n));
        bool trivial = true;
        for (int i = 0; i < n; ++i) {
            const auto& old = tab.done[static_cast<std::size_t>(i)].old;
            set[static_cast<std::size_t>(i)] = !old.count(f) || old.count(node.b);
            trivial = trivial && set[static_cast<std::size_t>(i)];
        }
        if (trivial || std::find(acc_sets.begin(), acc_sets.end(), set) != acc_sets.end()) continue;
        acc_sets.push_back(std::move(set));
    }
    // A set containing another is visited whenever the smaller one is.
    {
        std::vector<std::vector<bool>> kept;
        for (std::size_t i = 0; i < acc_sets.size(); ++i) {
            bool implied = false;
            for (std::size_t j = 0; j < acc_sets.size() && !implied; ++j) {
                if (i == j) continue;
                bool subset = true;
                for (int m = 0; m < n && subset; ++m)
                    subset = !acc_sets[j][static_cast<std::size_t>(m)] || acc_sets[i][static_cast<std::size_t>(m)];
                implied = subset && (acc_sets[i] != acc_sets[j] || j < i);
            }
            if (!implied) kept.push_back(acc_sets[i]);
        }
        acc_sets = std::move(kept);
    }
    const int k = std::max<int>(1, static_cast<int>(acc_sets.size()));
    auto member = [&](int node, int j) {
        return acc_sets.empty() || acc_sets[static_cast<std::size_t>(j)][static_cast<std::size_t>(node)];
    };

    // Merge tableau nodes with equal acceptance and equal labelled successors.
    std::vector<std::vector<int>> outs(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m)
        for (int src : tab.done[static_cast<std::size_t>(m)].incoming)
            if (src != kInit) outs[static_cast<std::size_t>(src)].push_back(m);
    std::vector<int> block(static_cast<std::size_t>(n));
    int blocks = 0;
    {
        std::map<std::vector<bool>, int> first;
        for (int m = 0; m < n; ++m) {
            std::vector<bool> v(static_cast<std::size_t>(k));
            for (int j = 0; j < k; ++j) v[static_cast<std::size_t>(j)] = member(m, j);
            block[static_cast<std::size_t>(m)] = first.emplace(v, static_cast<int>(first.size())).first->second;
        }
        blocks = static_cast<int>(first.size());
    }
    while (true) {
        using Sig = std::pair<int, std::vector<std::tuple<Label, Label, int>>>;
        std::map<Sig, int> ids;
        std::vector<int> next(static_cast<std::size_t>(n));
        for (int m = 0; m < n; ++m) {
            Sig sig{block[static_cast<std::size_t>(m)], {}};
            for (int d : outs[static_cast<std::size_t>(m)])
                sig.second.emplace_back(lits[static_cast<std::size_t>(d)].pos, lits[static_cast<std::size_t>(d)].neg,
                                        block[static_cast<std::size_t>(d)]);
            std::sort(sig.second.begin(), sig.second.end());
            sig.second.erase(std::unique(sig.second.begin(), sig.second.end()), sig.second.end());
            next[static_cast<std::size_t>(m)] = ids.emplace(std::move(sig), static_cast<int>(ids.size())).first->second;
        }
        const int count = static_cast<int>(ids.size());
        block = std::move(next);
        if (count == blocks) break;
        blocks = count;
    }
    std::vector<int> rep(static_cast<std::size_t>(blocks), -1);
    for (int m = 0; m < n; ++m)
        if (rep[static_cast<std::size_t>(block[static_cast<std::size_t>(m)])] < 0)
            rep[static_cast<std::size_t>(block[static_cast<std::size_t>(m)])] = m;
    auto in_set = [&](int b, int j) { return member(rep[static_cast<std::size_t>(b)], j); };
    std::set<std::tuple<int, int, Label, Label>> gba;  // (source block or kInit, target block, cube)
    for (int m = 0; m < n; ++m)
        for (int src : tab.done[static_cast<std::size_t>(m)].incoming)
            gba.emplace(src == kInit ? kInit : block[static_cast<std::size_t>(src)], block[static_cast<std::size_t>(m)],
                        lits[static_cast<std::size_t>(m)].pos, lits[static_cast<std::size_t>(m)].neg);

    // Degeneralized states: 0 = init, 1 + block*k + j otherwise.
    auto sid = [k](int b, int j) { return 1 + b * k + j; };
    const int total = 1 + blocks * k;
    std::vector<std::vector<std::pair<int, Cube>>> succ(static_cast<std::size_t>(total));
    for (const auto& [src, m, pos, neg] : gba) {
        const Cube g{pos, neg};
        if (src == kInit) {
            succ[0].push_back({sid(m, 0), g});
            continue;
        }
        for (int j = 0; j < k; ++j) {
            const int nj = in_set(src, j) ? (j + 1) % k : j;
            succ[static_cast<std::size_t>(sid(src, j))].push_back({sid(m, nj), g});
        }
    }
    for (auto& row : succ) std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<bool> accepting(static_cast<std::size_t>(total));
    for (int b = 0; b < blocks; ++b) accepting[static_cast<std::size_t>(sid(b, 0))] = in_set(b, 0);

    // Forward reachability from init, backward co-reachability of an accepting state.
    std::vector<int> order;
    std::vector<bool> seen(static_cast<std::size_t>(total));
    std::deque<int> queue{0};
    seen[0] = true;
    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        order.push_back(s);
        for (const auto& [d, g] : succ[static_cast<std::size_t>(s)])
            if (!seen[static_cast<std::size_t>(d)]) {
                seen[static_cast<std::size_t>(d)] = true;
                queue.push_back(d);
            }
    }
    std::vector<std::vector<int>> pred(static_cast<std::size_t>(total));
    for (int s : order)
        for (const auto& [d, g] : succ[static_cast<std::size_t>(s)]) pred[static_cast<std::size_t>(d)].push_back(s);
    std::vector<bool> live(static_cast<std::size_t>(total));
    for (int s : order)
        if (accepting[static_cast<std::size_t>(s)]) {
            live[static_cast<std::size_t>(s)] = true;
            queue.push_back(s);
        }
    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        for (int p : pred[static_cast<std::size_t>(s)])
            if (!live[static_cast<std::size_t>(p)]) {
                live[static_cast<std::size_t>(p)] = true;
                queue.push_back(p);
            }
    }

    std::vector<int> renum(static_cast<std::size_t>(total), -1);
    int count = 0;
    for (int s : order)
        if (s == 0 || live[static_cast<std::size_t>(s)]) renum[static_cast<std::size_t>(s)] = count++;
    std::vector<bool> acc(static_cast<std::size_t>(count));
    std::vector<NbaEdge> edges;
    for (int s : order) {
        const int rs = renum[static_cast<std::size_t>(s)];
        if (rs < 0) continue;
        acc[static_cast<std::size_t>(rs)] = accepting[static_cast<std::size_t>(s)];
        for (const auto& [d, g] : succ[static_cast<std::size_t>(s)]) {
            const int rd = renum[static_cast<std::size_t>(d)];
            if (rd < 0 || !live[static_cast<std::size_t>(d)]) continue;
            edges.push_back(NbaEdge{rs, rd, Guard{{g}}});
        }
    }
    return quotient(std::move(ap), count, acc, edges);
}

}  // namespace mixplan

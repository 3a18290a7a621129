#include "oracles.hpp"

#include "mixplan/irl.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>
#include <stdexcept>

namespace oracle {

using mixplan::ltl::Formula;
using mixplan::ltl::Op;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<bool> eval(const Formula& f, const std::vector<std::string>& ap, const std::vector<Label>& w,
                       std::size_t loop) {
    const std::size_t n = w.size();
    auto succ = [&](std::size_t i) { return i + 1 < n ? i + 1 : loop; };
    std::vector<bool> out(n);
    switch (f.op()) {
        case Op::True:
            out.assign(n, true);
            return out;
        case Op::Atom: {
            const auto it = std::find(ap.begin(), ap.end(), f.name());
            if (it == ap.end()) throw std::invalid_argument("atom outside alphabet");
            const Label bit = Label{1} << (it - ap.begin());
            for (std::size_t i = 0; i < n; ++i) out[i] = (w[i] & bit) != 0;
            return out;
        }
        case Op::Not: {
            auto a = eval(f.lhs(), ap, w, loop);
            for (std::size_t i = 0; i < n; ++i) out[i] = !a[i];
            return out;
        }
        case Op::Next: {
            auto a = eval(f.lhs(), ap, w, loop);
            for (std::size_t i = 0; i < n; ++i) out[i] = a[succ(i)];
            return out;
        }
        case Op::And:
        case Op::Or:
        case Op::Implies: {
            auto a = eval(f.lhs(), ap, w, loop);
            auto b = eval(f.rhs(), ap, w, loop);
            for (std::size_t i = 0; i < n; ++i)
                out[i] = f.op() == Op::And ? a[i] && b[i] : f.op() == Op::Or ? a[i] || b[i] : !a[i] || b[i];
            return out;
        }
        case Op::Until:
        case Op::Eventually: {
            std::vector<bool> a(n, true);
            if (f.op() == Op::Until) a = eval(f.lhs(), ap, w, loop);
            auto b = eval(f.op() == Op::Until ? f.rhs() : f.lhs(), ap, w, loop);
            // Least fixpoint of x = b ∨ (a ∧ X x).
            bool changed = true;
            while (changed) {
                changed = false;
                for (std::size_t k = n; k-- > 0;) {
                    const bool v = b[k] || (a[k] && out[succ(k)]);
                    if (v != out[k]) {
                        out[k] = v;
                        changed = true;
                    }
                }
            }
            return out;
        }
        case Op::Always: {
            auto a = eval(f.lhs(), ap, w, loop);
            // Greatest fixpoint of x = a ∧ X x.
            out.assign(n, true);
            bool changed = true;
            while (changed) {
                changed = false;
                for (std::size_t k = n; k-- > 0;) {
                    const bool v = a[k] && out[succ(k)];
                    if (v != out[k]) {
                        out[k] = v;
                        changed = true;
                    }
                }
            }
            return out;
        }
    }
    throw std::logic_error("unhandled operator");
}

}  // namespace

bool holds_on_lasso(const Formula& phi, const std::vector<std::string>& ap, const std::vector<Label>& u,
                    const std::vector<Label>& v) {
    if (v.empty()) throw std::invalid_argument("empty loop");
    std::vector<Label> w = u;
    w.insert(w.end(), v.begin(), v.end());
    return eval(phi, ap, w, u.size())[0];
}

bool nba_accepts_lasso(const mixplan::Nba& a, const std::vector<Label>& u, const std::vector<Label>& v) {
    std::vector<Label> w = u;
    w.insert(w.end(), v.begin(), v.end());
    const int n = static_cast<int>(w.size());
    const int loop = static_cast<int>(u.size());
    auto id = [&](int q, int i) { return q * n + i; };
    auto step = [&](int node) {
        std::vector<int> out;
        const int q = node / n;
        const int i = node % n;
        const int j = i + 1 < n ? i + 1 : loop;
        for (const auto& e : a.out(q))
            if (e.guard.holds(w[static_cast<std::size_t>(i)])) out.push_back(id(e.dst, j));
        return out;
    };
    auto reach = [&](const std::vector<int>& from) {
        std::set<int> seen;
        std::deque<int> q;
        for (int s : from) q.push_back(s);
        while (!q.empty()) {
            const int s = q.front();
            q.pop_front();
            for (int t : step(s))
                if (seen.insert(t).second) q.push_back(t);
        }
        return seen;
    };
    std::vector<int> init;
    for (int q : a.initial()) init.push_back(id(q, 0));
    std::set<int> reachable = reach(init);
    reachable.insert(init.begin(), init.end());
    for (int s : reachable) {
        if (!a.is_accepting(s / n)) continue;
        if (reach({s}).count(s)) return true;
    }
    return false;
}

std::vector<EagerEdge> eager_edges(const mixplan::ProductAutomaton& pa) {
    std::vector<EagerEdge> out;
    for (int p = 0; p < pa.size(); ++p) {
        const auto sp = pa.state(p);
        for (int t = 0; t < pa.size(); ++t) {
            const auto c = pa.edge_cost(sp, pa.state(t));
            if (c.finite()) out.push_back({p, t, c});
        }
    }
    return out;
}

double optimal_lasso_cost(const mixplan::ProductAutomaton& pa, const std::vector<int>& sources, double beta,
                          double gamma) {
    const int n = pa.size();
    std::vector<double> d(static_cast<std::size_t>(n) * n, kInf);
    auto at = [&](int i, int j) -> double& { return d[static_cast<std::size_t>(i) * n + j]; };
    for (const auto& e : eager_edges(pa)) {
        const double w = e.cost.alpha1.value() + beta * e.cost.alpha3.value();
        at(e.from, e.to) = std::min(at(e.from, e.to), w);
    }
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) {
            const double ik = at(i, k);
            if (ik == kInf) continue;
            for (int j = 0; j < n; ++j) {
                const double kj = at(k, j);
                if (kj == kInf) continue;
                at(i, j) = std::min(at(i, j), ik + kj);
            }
        }
    double best = kInf;
    for (int f = 0; f < n; ++f) {
        if (!pa.is_accepting(f) || at(f, f) == kInf) continue;
        for (int s : sources) {
            const double pre = s == f ? 0.0 : at(s, f);
            if (pre == kInf) continue;
            best = std::min(best, pre + gamma * at(f, f));
        }
    }
    return best;
}

std::vector<int> traps_by_search(const mixplan::ProductAutomaton& pa, const std::vector<int>& candidates) {
    std::map<int, std::vector<int>> adj;
    for (const auto& e : eager_edges(pa)) adj[e.from].push_back(e.to);
    auto reach = [&](int from) {
        std::set<int> seen;
        std::deque<int> q{from};
        while (!q.empty()) {
            const int s = q.front();
            q.pop_front();
            for (int t : adj[s])
                if (seen.insert(t).second) q.push_back(t);
        }
        return seen;  // states reachable in ≥ 1 step
    };
    std::vector<int> out;
    for (int c : candidates) {
        std::set<int> targets = reach(c);
        targets.insert(c);
        bool live = false;
        for (int f : targets)
            if (pa.is_accepting(f) && reach(f).count(f)) {
                live = true;
                break;
            }
        if (!live) out.push_back(c);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace oracle

namespace oracle {

mixplan::ltl::Formula random_formula(std::mt19937_64& rng, int max_depth, const std::vector<std::string>& ap) {
    using F = mixplan::ltl::Formula;
    std::uniform_int_distribution<int> pick_ap(0, static_cast<int>(ap.size()) - 1);
    if (max_depth == 0) {
        std::uniform_int_distribution<int> leaf(0, 9);
        return leaf(rng) == 0 ? F::truth() : F::atom(ap[static_cast<std::size_t>(pick_ap(rng))]);
    }
    std::uniform_int_distribution<int> kind(0, 10);
    const int k = kind(rng);
    auto sub = [&] { return random_formula(rng, max_depth - 1, ap); };
    switch (k) {
        case 0: return F::atom(ap[static_cast<std::size_t>(pick_ap(rng))]);
        case 1: return F::negation(sub());
        case 2: return F::next(sub());
        case 3: return F::always(sub());
        case 4: return F::eventually(sub());
        case 5: return F::conjunction(sub(), sub());
        case 6: return F::disjunction(sub(), sub());
        case 7: return F::implication(sub(), sub());
        case 8:
        case 9: return F::until(sub(), sub());
        default: return F::always(F::eventually(sub()));
    }
}

}  // namespace oracle

namespace oracle {

using nlohmann::json;

json random_scenario(std::mt19937_64& rng, int n) {
    auto name = [](int i) { return "r" + std::to_string(i); };
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::uniform_int_distribution<int> w(1, 9);
    json regions = json::array();
    json ap = json::array();
    for (int i = 0; i < n; ++i) {
        regions.push_back({{"id", name(i)},
                           {"disk", {{"center", {4.0 * (i % 3), 4.0 * (i / 3)}}, {"radius", 1.0}}},
                           {"labels", {name(i)}}});
        ap.push_back(name(i));
    }
    std::set<std::pair<int, int>> es;
    for (int i = 1; i < n; ++i) {
        std::uniform_int_distribution<int> parent(0, i - 1);
        es.insert({parent(rng), i});
    }
    const int extra = static_cast<int>(rng() % static_cast<unsigned>(n));
    for (int i = 0; i < extra; ++i) {
        const int a = pick(rng), b = pick(rng);
        if (a != b) es.insert({std::min(a, b), std::max(a, b)});
    }
    json edges = json::array();
    for (auto [a, b] : es) {
        if (rng() % 4 == 0)
            edges.push_back({{"from", name(a)}, {"to", name(b)}, {"weight", w(rng)}, {"directed", true}}),
                edges.push_back({{"from", name(b)}, {"to", name(a)}, {"weight", w(rng)}, {"directed", true}});
        else
            edges.push_back({{"from", name(a)}, {"to", name(b)}, {"weight", w(rng)}});
    }
    auto r = [&] { return name(pick(rng)); };
    std::string hard;
    switch (rng() % 6) {
        case 0: hard = "[]<>" + r(); break;
        case 1: hard = "[]<>" + r() + " && []<>" + r(); break;
        case 2: hard = "[]<>(" + r() + " && <>" + r() + ")"; break;
        case 3: hard = "[]!" + r() + " && []<>" + r(); break;
        case 4: hard = "[](" + r() + " -> X !" + r() + ") && []<>" + r(); break;
        default: hard = "<>[](" + r() + " || " + r() + ")"; break;
    }
    std::string soft;
    switch (rng() % 5) {
        case 0: soft = "[]!" + r(); break;
        case 1: soft = "[]<>" + r(); break;
        case 2: soft = "[](" + r() + " -> X " + r() + ")"; break;
        case 3: soft = "[]!" + r() + " && []!" + r(); break;
        default: soft = "true"; break;
    }
    return {{"ap", ap}, {"regions", regions}, {"edges", edges}, {"initial", name(0)},
            {"phi_hard", hard}, {"phi_soft", soft}};
}

Built build(const json& doc) {
    Built b{mixplan::load_scenario(doc), nullptr};
    const auto& s = b.scenario;
    b.pa = std::make_shared<mixplan::ProductAutomaton>(std::make_shared<const mixplan::TransitionSystem>(s.ts),
                                                       mixplan::to_nba(mixplan::ltl::normalize(s.phi_hard), s.ts.ap()),
                                                       mixplan::to_nba(mixplan::ltl::normalize(s.phi_soft), s.ts.ap()));
    return b;
}

int reachable_count(const mixplan::ProductAutomaton& pa) {
    std::set<int> seen;
    std::deque<int> q;
    for (int s : pa.initial_states())
        if (seen.insert(s).second) q.push_back(s);
    while (!q.empty()) {
        const int s = q.front();
        q.pop_front();
        for (const auto& e : pa.successors(s))
            if (seen.insert(e.to).second) q.push_back(e.to);
    }
    return static_cast<int>(seen.size());
}

namespace {

std::map<int, std::vector<std::pair<int, double>>> weighted_adjacency(const mixplan::ProductAutomaton& pa,
                                                                      double beta) {
    std::map<int, std::vector<std::pair<int, double>>> adj;
    for (const auto& e : eager_edges(pa))
        adj[e.from].push_back({e.to, e.cost.alpha1.value() + beta * e.cost.alpha3.value()});
    return adj;
}

}  // namespace

double lasso_cost_by_enumeration(const mixplan::ProductAutomaton& pa, const std::vector<int>& sources,
                                 double beta, double gamma) {
    const auto adj = weighted_adjacency(pa, beta);
    const int n = pa.size();
    const int bound = reachable_count(pa) + 1;
    // best[k][v]: cheapest walk of exactly k edges; enumerated layer by layer.
    auto walks = [&](std::vector<double> layer) {
        std::vector<double> best = layer;
        for (int k = 1; k <= bound; ++k) {
            std::vector<double> next(static_cast<std::size_t>(n), kInf);
            for (const auto& [u, out] : adj) {
                if (layer[static_cast<std::size_t>(u)] == kInf) continue;
                for (auto [v, w] : out)
                    next[static_cast<std::size_t>(v)] = std::min(next[static_cast<std::size_t>(v)], layer[static_cast<std::size_t>(u)] + w);
            }
            layer = std::move(next);
            for (int v = 0; v < n; ++v) best[static_cast<std::size_t>(v)] = std::min(best[static_cast<std::size_t>(v)], layer[static_cast<std::size_t>(v)]);
        }
        return best;
    };
    std::vector<double> init(static_cast<std::size_t>(n), kInf);
    for (int s : sources) init[static_cast<std::size_t>(s)] = 0.0;
    const auto prefix = walks(init);
    double best = kInf;
    for (int f = 0; f < n; ++f) {
        if (!pa.is_accepting(f) || prefix[static_cast<std::size_t>(f)] == kInf) continue;
        // Cycles of length ≥ 1: start from the successors of f.
        std::vector<double> first(static_cast<std::size_t>(n), kInf);
        auto it = adj.find(f);
        if (it == adj.end()) continue;
        for (auto [v, w] : it->second) first[static_cast<std::size_t>(v)] = std::min(first[static_cast<std::size_t>(v)], w);
        const double cyc = walks(first)[static_cast<std::size_t>(f)];
        if (cyc < kInf) best = std::min(best, prefix[static_cast<std::size_t>(f)] + gamma * cyc);
    }
    return best;
}

TempAnswer temp_task_by_enumeration(const mixplan::ProductAutomaton& pa, const mixplan::Plan& plan,
                                    const mixplan::TempTask& task, double v_max) {
    const auto& run = plan.run;
    const int s = static_cast<int>(run.prefix.size());
    const int f = static_cast<int>(run.suffix.size());
    int k0 = plan.cursor - 1;
    if (k0 >= s) k0 = s + (k0 - s) % f;
    std::vector<int> w;
    for (int i = k0; i <= s + f; ++i) w.push_back(i < s ? run.prefix[static_cast<std::size_t>(i)]
                                                       : run.suffix[static_cast<std::size_t>((i - s) % f)]);
    const int n = static_cast<int>(w.size()) - 1;
    auto next = [&](int k) { return k < n ? w[static_cast<std::size_t>(k + 1)] : run.suffix[static_cast<std::size_t>(1 % f)]; };
    const double beta = plan.beta;
    auto cost_of = [&](int a, int b) {
        const auto c = pa.edge_cost(pa.state(a), pa.state(b));
        return c.alpha1.value() + beta * c.alpha3.value();
    };
    auto len = [&](int a, int b) { return *pa.ts().weight(pa.state(a).pi, pa.state(b).pi); };
    std::map<int, std::vector<int>> adj;
    for (const auto& e : eager_edges(pa)) adj[e.from].push_back(e.to);

    using Pair = std::pair<double, double>;  // (C_β, meters), compared lexicographically
    const Pair none{kInf, kInf};
    const int bound = reachable_count(pa) + 1;
    // Cheapest walks of at most `bound` edges from a (forward) or into a (backward).
    auto legs = [&](int a, bool forward) {
        std::vector<Pair> best(static_cast<std::size_t>(pa.size()), none), layer = best;
        best[static_cast<std::size_t>(a)] = layer[static_cast<std::size_t>(a)] = {0.0, 0.0};
        for (int k = 1; k <= bound; ++k) {
            std::vector<Pair> next(layer.size(), none);
            for (const auto& [u, outs] : adj)
                for (int v : outs) {
                    const int from = forward ? u : v, to = forward ? v : u;
                    const Pair& l = layer[static_cast<std::size_t>(from)];
                    if (l.first == kInf) continue;
                    const Pair cand{l.first + cost_of(u, v), l.second + len(u, v)};
                    next[static_cast<std::size_t>(to)] = std::min(next[static_cast<std::size_t>(to)], cand);
                }
            layer = std::move(next);
            for (std::size_t i = 0; i < best.size(); ++i) best[i] = std::min(best[i], layer[i]);
        }
        return best;
    };
    struct Opt {
        bool ok = false;
        double extra = 0, total_m = 0, before_m = 0;
    };
    auto option = [&](int k, int region) {
        Opt o;
        const int a = w[static_cast<std::size_t>(k)];
        const int b = next(k);
        if (pa.state(a).pi == region) return Opt{true, 0, len(a, b), 0};
        const auto go = legs(a, true);
        const auto back = legs(b, false);
        Pair bp = none;
        double before = kInf;
        for (int x = 0; x < pa.size(); ++x) {
            if (pa.state(x).pi != region || x == b || x == a) continue;
            const Pair& g = go[static_cast<std::size_t>(x)];
            const Pair& r = back[static_cast<std::size_t>(x)];
            if (g.first == kInf || r.first == kInf) continue;
            const Pair c{g.first + r.first, g.second + r.second};
            if (c < bp) bp = c;
        }
        // Earliest arrival in the region over every optimal detour, including a pass
        // through b before the via point.
        for (int y = 0; y < pa.size(); ++y) {
            if (pa.state(y).pi != region || y == a) continue;
            const Pair& g = go[static_cast<std::size_t>(y)];
            if (g.first == kInf) continue;
            Pair rest = none;
            if (y != b) {
                rest = back[static_cast<std::size_t>(y)];
            } else {
                const auto again = legs(b, true);
                for (int x = 0; x < pa.size(); ++x) {
                    if (pa.state(x).pi != region || x == a || x == b) continue;
                    const Pair& p1 = again[static_cast<std::size_t>(x)];
                    const Pair& p2 = back[static_cast<std::size_t>(x)];
                    if (p1.first == kInf || p2.first == kInf) continue;
                    rest = std::min(rest, Pair{p1.first + p2.first, p1.second + p2.second});
                }
            }
            if (g.first + rest.first == bp.first && g.second + rest.second == bp.second)
                before = std::min(before, g.second);
        }
        if (bp.first == kInf) return o;
        return Opt{true, bp.first - cost_of(a, b), bp.second, before};
    };
    std::vector<Opt> ps, pg;
    for (int k = 0; k <= n; ++k) ps.push_back(option(k, task.pickup)), pg.push_back(option(k, task.dropoff));
    TempAnswer s1, s2;
    double s2obj = kInf;
    for (int ks = 0; ks <= n; ++ks)
        for (int kg = ks + 1; kg <= n; ++kg) {
            const Opt& a = ps[static_cast<std::size_t>(ks)];
            const Opt& b = pg[static_cast<std::size_t>(kg)];
            if (!a.ok || !b.ok) continue;
            double m = 0;
            for (int i = 0; i < kg; ++i) m += len(w[static_cast<std::size_t>(i)], w[static_cast<std::size_t>(i + 1)]);
            m += a.total_m - len(w[static_cast<std::size_t>(ks)], next(ks));
            m += b.before_m;
            const double dc = a.extra + b.extra;
            const double delay = m / v_max - task.deadline;
            if (delay <= 0 && (!s1.feasible || dc < s1.delta_cost)) s1 = {ks, kg, dc, delay, true};
            const double obj = std::max(0.0, delay) + dc;
            if (obj < s2obj) s2obj = obj, s2 = {ks, kg, dc, delay, true};
        }
    if (s1.feasible) {
        s1.zero_delay_exists = true;
        return s1;
    }
    return s2;
}

}  // namespace oracle

namespace oracle {

namespace {

struct Sub {
    Op op;
    int a = -1;
    int b = -1;
    Label bit = 0;
};

int flatten(const Formula& f, const std::vector<std::string>& ap, std::vector<Sub>& out) {
    Sub s{f.op()};
    if (f.op() == Op::Atom) {
        const auto it = std::find(ap.begin(), ap.end(), f.name());
        if (it == ap.end()) throw std::invalid_argument("atom outside alphabet");
        s.bit = Label{1} << (it - ap.begin());
    }
    if (f.is_unary() || f.is_binary()) s.a = flatten(f.lhs(), ap, out);
    if (f.is_binary()) s.b = flatten(f.rhs(), ap, out);
    out.push_back(s);
    return static_cast<int>(out.size()) - 1;
}

using Mask = std::uint64_t;

struct PairHash {
    std::size_t operator()(const std::pair<Mask, Mask>& p) const {
        return std::hash<Mask>{}(p.first * 0x9e3779b97f4a7c15ULL ^ p.second);
    }
};

}  // namespace

LassoSweep sweep_lassos(const Formula& phi, const mixplan::Nba& a, int max_len) {
    const auto& ap = a.ap();
    std::vector<Sub> subs;
    const int root = flatten(phi, ap, subs);
    if (subs.size() > 64) throw std::invalid_argument("formula too large");
    const int n = a.num_states();
    if (n > 64) throw std::invalid_argument("automaton too large");
    if (max_len < 1 || max_len > 8) throw std::invalid_argument("lasso length must be in 1..8");

    Label used = 0;
    for (const auto& s : subs) used |= s.bit;
    for (const auto& e : a.edges())
        for (const auto& c : e.guard.cubes) used |= c.pos | c.neg;
    std::vector<Label> letters{0};
    for (int i = 0; i < 64; ++i)
        if (used >> i & 1) {
            const std::size_t m = letters.size();
            for (std::size_t j = 0; j < m; ++j) letters.push_back(letters[j] | Label{1} << i);
        }
    const int L = static_cast<int>(letters.size());

    // succ[c][p]: states reachable from p reading letter c.
    std::vector<std::vector<Mask>> succ(static_cast<std::size_t>(L), std::vector<Mask>(static_cast<std::size_t>(n)));
    const auto edges = a.edges();
    for (int c = 0; c < L; ++c)
        for (const auto& e : edges)
            if (e.guard.holds(letters[static_cast<std::size_t>(c)]))
                succ[static_cast<std::size_t>(c)][static_cast<std::size_t>(e.src)] |= Mask{1} << e.dst;
    Mask init = 0, acc = 0;
    for (int q : a.initial()) init |= Mask{1} << q;
    for (int q = 0; q < n; ++q)
        if (a.is_accepting(q)) acc |= Mask{1} << q;

    auto step_sem = [&](Label l, Mask next) {
        Mask cur = 0;
        for (std::size_t i = 0; i < subs.size(); ++i) {
            const auto& s = subs[i];
            auto at = [&](int j) { return (cur >> j & 1) != 0; };
            auto nx = [&](int j) { return (next >> j & 1) != 0; };
            bool v = false;
            switch (s.op) {
                case Op::True: v = true; break;
                case Op::Atom: v = (l & s.bit) != 0; break;
                case Op::Not: v = !at(s.a); break;
                case Op::And: v = at(s.a) && at(s.b); break;
                case Op::Or: v = at(s.a) || at(s.b); break;
                case Op::Implies: v = !at(s.a) || at(s.b); break;
                case Op::Next: v = nx(s.a); break;
                case Op::Until: v = at(s.b) || (at(s.a) && nx(static_cast<int>(i))); break;
                case Op::Eventually: v = at(s.a) || nx(static_cast<int>(i)); break;
                case Op::Always: v = at(s.a) && nx(static_cast<int>(i)); break;
            }
            if (v) cur |= Mask{1} << i;
        }
        return cur;
    };
    auto step_nba = [&](int c, Mask after) {
        Mask before = 0;
        const auto& sc = succ[static_cast<std::size_t>(c)];
        for (int p = 0; p < n; ++p)
            if (sc[static_cast<std::size_t>(p)] & after) before |= Mask{1} << p;
        return before;
    };

    LassoSweep out;
    std::vector<std::uint64_t> pow(static_cast<std::size_t>(max_len) + 1, 1);
    for (int i = 1; i <= max_len; ++i) pow[static_cast<std::size_t>(i)] = pow[static_cast<std::size_t>(i) - 1] * static_cast<std::uint64_t>(L);
    for (int len = 1; len <= max_len; ++len) out.words += static_cast<std::uint64_t>(len) * pow[static_cast<std::size_t>(len)];

    std::vector<std::vector<char>> edge_holds(edges.size(), std::vector<char>(static_cast<std::size_t>(L)));
    for (std::size_t e = 0; e < edges.size(); ++e)
        for (int c = 0; c < L; ++c) edge_holds[e][static_cast<std::size_t>(c)] = edges[e].guard.holds(letters[static_cast<std::size_t>(c)]);

    // Largest remaining prefix budget already explored from each class.
    std::unordered_map<std::pair<Mask, Mask>, int, PairHash> explored;
    struct Node {
        Mask s, b;
        int parent, letter, budget;
    };
    std::vector<Node> nodes;

    // Loops are processed eight at a time, one per byte lane; bit i of a lane is position i.
    constexpr int kLanes = 8;
    constexpr Mask kRep = 0x0101010101010101ULL;
    std::vector<std::vector<int>> batch;
    std::vector<Mask> pos(subs.size()), holds(edges.size());
    std::vector<Mask> z(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n)), pz(static_cast<std::size_t>(n)),
        nx(static_cast<std::size_t>(n));

    auto report_word = [&](int parent, int letter, const std::vector<int>& loop, int r) {
        if (letter >= 0) out.u.push_back(letters[static_cast<std::size_t>(letter)]);
        for (int j = parent; j >= 0 && nodes[static_cast<std::size_t>(j)].letter >= 0; j = nodes[static_cast<std::size_t>(j)].parent)
            out.u.push_back(letters[static_cast<std::size_t>(nodes[static_cast<std::size_t>(j)].letter)]);
        const int k = static_cast<int>(loop.size());
        for (int j = 0; j < k; ++j) out.v.push_back(letters[static_cast<std::size_t>(loop[static_cast<std::size_t>((r + j) % k)])]);
    };

    auto flush = [&]() {
        if (batch.empty()) return;
        const int k = static_cast<int>(batch.front().size());
        while (batch.size() < kLanes) batch.push_back(batch.back());
        const Mask all = kRep * ((Mask{1} << k) - 1);
        const Mask low = kRep * ((Mask{1} << (k - 1)) - 1);
        const Mask high = kRep * (Mask{1} << (k - 1));
        auto next = [&](Mask x) { return ((x >> 1) & low) | ((x << (k - 1)) & high); };
        auto letter_at = [&](int lane, int j) { return batch[static_cast<std::size_t>(lane)][static_cast<std::size_t>(j)]; };

        for (std::size_t i = 0; i < subs.size(); ++i) {
            const auto& sb = subs[i];
            auto P = [&](int j) { return pos[static_cast<std::size_t>(j)]; };
            Mask x = 0;
            switch (sb.op) {
                case Op::True: x = all; break;
                case Op::Atom:
                    for (int lane = 0; lane < kLanes; ++lane)
                        for (int j = 0; j < k; ++j)
                            if (letters[static_cast<std::size_t>(letter_at(lane, j))] & sb.bit) x |= Mask{1} << (8 * lane + j);
                    break;
                case Op::Not: x = ~P(sb.a) & all; break;
                case Op::And: x = P(sb.a) & P(sb.b); break;
                case Op::Or: x = P(sb.a) | P(sb.b); break;
                case Op::Implies: x = (~P(sb.a) & all) | P(sb.b); break;
                case Op::Next: x = next(P(sb.a)); break;
                case Op::Until:
                case Op::Eventually: {
                    const Mask l = sb.op == Op::Until ? P(sb.a) : all;
                    const Mask r = P(sb.op == Op::Until ? sb.b : sb.a);
                    x = r;
                    for (int it = 0; it < k; ++it) x = r | (l & next(x));
                    break;
                }
                case Op::Always: {
                    const Mask l = P(sb.a);
                    x = l;
                    for (int it = 0; it < k; ++it) x = l & next(x);
                    break;
                }
            }
            pos[i] = x;
        }

        for (std::size_t e = 0; e < edges.size(); ++e) {
            Mask h = 0;
            for (int lane = 0; lane < kLanes; ++lane)
                for (int j = 0; j < k; ++j)
                    if (edge_holds[e][static_cast<std::size_t>(letter_at(lane, j))]) h |= Mask{1} << (8 * lane + j);
            holds[e] = h;
        }
        auto pre = [&](const std::vector<Mask>& x, std::vector<Mask>& r) {
            std::fill(r.begin(), r.end(), 0);
            for (std::size_t e = 0; e < edges.size(); ++e)
                r[static_cast<std::size_t>(edges[e].src)] |= holds[e] & next(x[static_cast<std::size_t>(edges[e].dst)]);
        };
        // νZ. μY. pre(Y) ∪ (Acc ∩ pre(Z)) over (state, position) pairs.
        std::fill(z.begin(), z.end(), all);
        while (true) {
            pre(z, pz);
            std::fill(y.begin(), y.end(), 0);
            while (true) {
                pre(y, nx);
                bool changed = false;
                for (int q = 0; q < n; ++q) {
                    Mask val = nx[static_cast<std::size_t>(q)];
                    if (acc >> q & 1) val |= pz[static_cast<std::size_t>(q)];
                    changed = changed || val != y[static_cast<std::size_t>(q)];
                    y[static_cast<std::size_t>(q)] = val;
                }
                if (!changed) break;
            }
            if (y == z) break;
            z = y;
        }

        for (int lane = 0; lane < kLanes; ++lane) {
            if (lane > 0 && batch[static_cast<std::size_t>(lane)] == batch[static_cast<std::size_t>(lane) - 1]) continue;
            const auto& loop = batch[static_cast<std::size_t>(lane)];
            for (int r = 0; r < k; ++r) {
                const int bit = 8 * lane + r;
                Mask s0 = 0, b0 = 0;
                for (std::size_t i = 0; i < subs.size(); ++i)
                    if (pos[i] >> bit & 1) s0 |= Mask{1} << i;
                for (int q = 0; q < n; ++q)
                    if (z[static_cast<std::size_t>(q)] >> bit & 1) b0 |= Mask{1} << q;
                if (k == max_len) {
                    if (((s0 >> root & 1) != 0) != ((b0 & init) != 0) && out.mismatches++ == 0) report_word(-1, -1, loop, r);
                    continue;
                }
                nodes.clear();
                auto visit = [&](Mask sv, Mask bv, int parent, int letter, int budget) {
                    auto [it, fresh] = explored.try_emplace({sv, bv}, budget);
                    if (!fresh) {
                        if (it->second >= budget) return;
                        it->second = budget;
                    } else if (((sv >> root & 1) != 0) != ((bv & init) != 0) && out.mismatches++ == 0) {
                        report_word(parent, letter, loop, r);
                    }
                    nodes.push_back({sv, bv, parent, letter, budget});
                };
                visit(s0, b0, -1, -1, max_len - k);
                for (std::size_t i = 0; i < nodes.size(); ++i) {
                    const Node nd = nodes[i];
                    if (nd.budget == 0) continue;
                    for (int c = 0; c < L; ++c)
                        visit(step_sem(letters[static_cast<std::size_t>(c)], nd.s), step_nba(c, nd.b), static_cast<int>(i), c,
                              nd.budget - 1);
                }
            }
        }
        batch.clear();
    };

    // Lyndon words of each exact length (Fredricksen–Kessler–Maiorana).
    for (int len = 1; len <= max_len; ++len) {
        std::vector<int> w(static_cast<std::size_t>(len) + 1, -1);
        int i = 1;
        while (i > 0) {
            ++w[static_cast<std::size_t>(i)];
            for (int j = i + 1; j <= len; ++j) w[static_cast<std::size_t>(j)] = w[static_cast<std::size_t>(j - i)];
            if (i == len) {
                batch.emplace_back(w.begin() + 1, w.end());
                if (batch.size() == kLanes) flush();
            }
            i = len;
            while (i > 0 && w[static_cast<std::size_t>(i)] == L - 1) --i;
        }
        flush();
    }
    return out;
}

}  // namespace oracle

namespace oracle {

std::vector<int> demo_run(const mixplan::Plan& p) {
    auto seq = p.run.prefix;
    seq.push_back(p.run.suffix.front());
    return seq;
}

double objective(const mixplan::ProductAutomaton& pa, const std::vector<int>& run, const std::vector<int>& star,
                 double beta) {
    double c = 0;
    for (std::size_t i = 0; i + 1 < run.size(); ++i) {
        const auto v = pa.edge_cost(pa.state(run[i]), pa.state(run[i + 1]));
        c += v.alpha1.value() + beta * v.alpha3.value();
    }
    return c - mixplan::margin(run, star);
}

double margin_argmin_by_enumeration(const mixplan::ProductAutomaton& pa, const std::vector<int>& star, double beta) {
    const int a = star.front(), b = star.back();
    if (a == b) return 0.0;
    std::set<std::pair<int, int>> shared;
    for (std::size_t i = 0; i + 1 < star.size(); ++i) shared.insert({star[i], star[i + 1]});
    const auto edges = eager_edges(pa);
    std::vector<double> layer(static_cast<std::size_t>(pa.size()), kInf);
    layer[static_cast<std::size_t>(a)] = 0.0;
    double best = kInf;
    for (int len = 1; len <= pa.size() + 1; ++len) {
        std::vector<double> next(layer.size(), kInf);
        for (const auto& e : edges) {
            const double from = layer[static_cast<std::size_t>(e.from)];
            if (from == kInf) continue;
            const double w = e.cost.alpha1.value() + beta * e.cost.alpha3.value() - (shared.count({e.from, e.to}) ? 0 : 1);
            next[static_cast<std::size_t>(e.to)] = std::min(next[static_cast<std::size_t>(e.to)], from + w);
        }
        layer = std::move(next);
        best = std::min(best, layer[static_cast<std::size_t>(b)]);
    }
    return best;
}

}  // namespace oracle

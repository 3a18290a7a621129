#include "mixplan/planner.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <queue>
#include <tuple>

#include "mixplan/error.hpp"
#include "search.hpp"

namespace mixplan {

namespace {

using detail::Search;

constexpr double kInf = std::numeric_limits<double>::infinity();

double weight(const CostVector& c, double beta) { return c.alpha1.value() + beta * c.alpha3.value(); }

const CostVector& edge(const ProductAutomaton& pa, int from, int to) {
    const auto& succ = pa.successors(from);
    auto it = std::lower_bound(succ.begin(), succ.end(), to,
                               [](const ProductEdge& e, int t) { return e.to < t; });
    if (it == succ.end() || it->to != to) throw Error("run uses a missing product edge");
    return it->cost;
}

Plan make_plan(const ProductAutomaton& pa, AcceptingRun run, double beta, double gamma) {
    Plan p;
    std::vector<int> pre = run.prefix;
    pre.push_back(run.suffix.front());
    run.prefix_cost = path_cost(pa, pre);
    std::vector<int> suf = run.suffix;
    suf.push_back(run.suffix.front());
    run.suffix_cost = path_cost(pa, suf);
    p.run = std::move(run);
    for (int q : p.run.sequence()) p.tau_r.push_back(pa.state(q).pi);
    p.cursor = 1;
    p.beta = beta;
    p.gamma = gamma;
    p.cost = total_cost(p.run, beta, gamma);
    p.ts_revision = pa.ts_revision();
    return p;
}

}  // namespace

int AcceptingRun::at(int k) const {
    const int s = static_cast<int>(prefix.size());
    const int f = static_cast<int>(suffix.size());
    if (k < s) return prefix[static_cast<std::size_t>(k)];
    return suffix[static_cast<std::size_t>((k - s) % f)];
}

std::vector<int> AcceptingRun::sequence() const {
    std::vector<int> out = prefix;
    out.insert(out.end(), suffix.begin(), suffix.end());
    return out;
}

Cost total_cost(const CostVector& prefix, const CostVector& suffix, double beta, double gamma) {
    return prefix.weighted(beta) + gamma * suffix.weighted(beta);
}

Cost total_cost(const AcceptingRun& run, double beta, double gamma) {
    return total_cost(run.prefix_cost, run.suffix_cost, beta, gamma);
}

CostVector path_cost(const ProductAutomaton& pa, const std::vector<int>& path) {
    CostVector sum{Cost(0.0), Cost(0.0), Cost(0.0)};
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
        sum += pa.edge_cost(pa.state(path[i]), pa.state(path[i + 1]));
    return sum;
}

int Plan::next_region(const ProductAutomaton& pa) const { return pa.state(run.at(cursor)).pi; }

Plan revise(const ProductAutomaton& pa, const std::vector<int>& sources, double beta, double gamma) {
    if (sources.empty()) throw NoAcceptingRun("no start state");
    Search pre(pa, [beta](int, const ProductEdge& e) { return weight(e.cost, beta); });
    std::vector<std::tuple<int, double, int>> seeds;
    for (int s : sources) seeds.emplace_back(s, 0.0, 0);
    pre.run(seeds);

    std::vector<int> finals;
    for (int q = 0; q < pa.size(); ++q)
        if (pre.done[static_cast<std::size_t>(q)] && pa.is_accepting(q)) finals.push_back(q);
    std::sort(finals.begin(), finals.end(), [&](int a, int b) {
        return std::tie(pre.cost[static_cast<std::size_t>(a)], a) < std::tie(pre.cost[static_cast<std::size_t>(b)], b);
    });

    double best = kInf;
    int best_hops = 0;
    std::vector<int> best_seq;
    AcceptingRun best_run;
    for (int f : finals) {
        const double pc = pre.cost[static_cast<std::size_t>(f)];
        if (pc > best) break;
        Search cyc(pa, [beta](int, const ProductEdge& e) { return weight(e.cost, beta); });
        std::vector<std::tuple<int, double, int>> cseeds;
        for (const ProductEdge& e : pa.successors(f)) cseeds.emplace_back(e.to, weight(e.cost, beta), 1);
        // A seed equal to f is the self-loop; keep f unsettled otherwise so its label is the cycle.
        const double limit = gamma > 0 ? (best - pc) / gamma : kInf;
        cyc.run(cseeds, limit);
        if (!cyc.done[static_cast<std::size_t>(f)]) continue;
        const double total = pc + gamma * cyc.cost[static_cast<std::size_t>(f)];
        const int total_hops = pre.hops[static_cast<std::size_t>(f)] + cyc.hops[static_cast<std::size_t>(f)];
        if (total > best || (total == best && total_hops > best_hops)) continue;
        AcceptingRun run;
        run.prefix = pre.path(f);
        run.prefix.pop_back();
        run.suffix.push_back(f);
        std::vector<int> loop = cyc.path(f);  // first seed ... f
        run.suffix.insert(run.suffix.end(), loop.begin(), loop.end() - 1);
        std::vector<int> seq = run.sequence();
        if (total == best && total_hops == best_hops && !(seq < best_seq)) continue;
        best = total;
        best_hops = total_hops;
        best_seq = std::move(seq);
        best_run = std::move(run);
    }
    if (best == kInf) throw NoAcceptingRun("no accepting run is reachable at finite cost");
    return make_plan(pa, std::move(best_run), beta, gamma);
}

Plan synthesize(const ProductAutomaton& pa, double beta, double gamma) {
    return revise(pa, pa.initial_states(), beta, gamma);
}

Cost remaining_cost(const ProductAutomaton& pa, const Plan& plan) {
    const AcceptingRun& r = plan.run;
    const int s = static_cast<int>(r.prefix.size());
    const int f = static_cast<int>(r.suffix.size());
    int k = plan.position();
    if (k >= s) k = s + (k - s) % f;
    std::vector<int> rest;
    for (int i = k; i <= s + (k >= s ? f : 0); ++i) rest.push_back(r.at(i));
    return path_cost(pa, rest).weighted(plan.beta) + plan.gamma * r.suffix_cost.weighted(plan.beta);
}

std::vector<int> remaining_run(const Plan& plan) {
    const AcceptingRun& r = plan.run;
    const int s = static_cast<int>(r.prefix.size());
    const int f = static_cast<int>(r.suffix.size());
    int k = plan.position();
    if (k >= s) k = s + (k - s) % f;
    std::vector<int> w;
    for (int i = k; i <= s + f; ++i) w.push_back(r.at(i));
    return w;
}

namespace {

// Lexicographic (C_β, meters) shortest paths, forward from a source or backward to a target.
struct Detour {
    double cost = kInf;
    double meters = kInf;
    std::vector<int> path;  // from ... to, both ends included
};

struct Metric {
    double cost = kInf;
    double meters = kInf;
    int hops = 0;
    int next = -1;  // parent (forward) or successor (backward)
    friend bool operator<(const Metric& a, const Metric& b) {
        return std::tie(a.cost, a.meters, a.hops) < std::tie(b.cost, b.meters, b.hops);
    }
};

double meters(const ProductAutomaton& pa, int from, int to) {
    return pa.ts().weight(pa.state(from).pi, pa.state(to).pi).value_or(kInf);
}

class DetourFinder {
public:
    DetourFinder(const ProductAutomaton& pa, double beta) : pa_(pa), beta_(beta) {}

    // Shortest finite-cost path from -> x -> to with π(x) = region, lexicographic in
    // (extra C_β, meters), or an empty detour when none exists.
    Detour find(int from, int to, int region) {
        const auto& fwd = forward(from);
        const auto bwd = backward(from, to);
        Detour best;
        int best_x = -1;
        for (int x = 0; x < pa_.size(); ++x) {
            if (pa_.state(x).pi != region) continue;
            const Metric& a = fwd[static_cast<std::size_t>(x)];
            const Metric& b = bwd[static_cast<std::size_t>(x)];
            if (a.cost == kInf || b.cost == kInf || x == from || x == to) continue;
            const double c = a.cost + b.cost;
            const double m = a.meters + b.meters;
            if (std::tie(c, m) < std::tie(best.cost, best.meters)) {
                best.cost = c;
                best.meters = m;
                best_x = x;
            }
        }
        if (best_x < 0) return best;
        // Among equal detours, the earliest arrival in the region. A detour may pass through
        // `to` before its via point; that pass is an arrival too.
        auto tied = [&](double c, double m) { return c == best.cost && m == best.meters; };
        double arrival = fwd[static_cast<std::size_t>(best_x)].meters;
        for (int y = 0; y < pa_.size(); ++y) {
            if (pa_.state(y).pi != region || y == from || y == to) continue;
            const Metric& a = fwd[static_cast<std::size_t>(y)];
            const Metric& b = bwd[static_cast<std::size_t>(y)];
            if (tied(a.cost + b.cost, a.meters + b.meters) && a.meters < arrival) arrival = a.meters, best_x = y;
        }
        int loop_x = -1;
        const Metric& at_to = fwd[static_cast<std::size_t>(to)];
        if (pa_.state(to).pi == region && at_to.cost < kInf && at_to.meters < arrival) {
            const auto& again = forward(to);
            Metric loop;
            for (int x = 0; x < pa_.size(); ++x) {
                if (pa_.state(x).pi != region || x == from || x == to) continue;
                const Metric& a = again[static_cast<std::size_t>(x)];
                const Metric& b = bwd[static_cast<std::size_t>(x)];
                if (a.cost == kInf || b.cost == kInf) continue;
                const double c = a.cost + b.cost, m = a.meters + b.meters;
                if (loop_x < 0 || std::tie(c, m) < std::tie(loop.cost, loop.meters)) {
                    loop.cost = c;
                    loop.meters = m;
                    loop_x = x;
                }
            }
            if (loop_x >= 0 && !tied(at_to.cost + loop.cost, at_to.meters + loop.meters)) loop_x = -1;
        }
        std::vector<int> go;
        if (loop_x >= 0) {
            for (int v = to; v >= 0; v = fwd[static_cast<std::size_t>(v)].next) go.push_back(v);
            std::reverse(go.begin(), go.end());
            const auto& again = forward(to);
            std::vector<int> mid;
            for (int v = loop_x; v != to; v = again[static_cast<std::size_t>(v)].next) mid.push_back(v);
            go.insert(go.end(), mid.rbegin(), mid.rend());
            best_x = loop_x;
        } else {
            for (int v = best_x; v >= 0; v = fwd[static_cast<std::size_t>(v)].next) go.push_back(v);
            std::reverse(go.begin(), go.end());
        }
        for (int v = bwd[static_cast<std::size_t>(best_x)].next; v >= 0; v = bwd[static_cast<std::size_t>(v)].next)
            go.push_back(v);
        best.path = std::move(go);
        return best;
    }

    // Part of a detour up to and including the first visit of the target region.
    static double meters_to_region(const ProductAutomaton& pa, const Detour& d, int region) {
        double m = 0;
        for (std::size_t i = 0; i + 1 < d.path.size(); ++i) {
            m += meters(pa, d.path[i], d.path[i + 1]);
            if (pa.state(d.path[i + 1]).pi == region) return m;
        }
        return m;
    }

private:
    const std::vector<Metric>& forward(int from) {
        auto it = fwd_cache_.find(from);
        if (it != fwd_cache_.end()) return it->second;
        std::vector<Metric> d(static_cast<std::size_t>(pa_.size()));
        dijkstra(d, {from}, [&](int u, auto&& relax) {
            for (const ProductEdge& e : pa_.successors(u)) relax(e.to, e.cost, meters(pa_, u, e.to));
        });
        return fwd_cache_.emplace(from, std::move(d)).first->second;
    }

    // Distances to `to` over the part of the graph reachable from `from`.
    std::vector<Metric> backward(int from, int to) {
        auto& pred = predecessors(from);
        std::vector<Metric> d(static_cast<std::size_t>(pa_.size()));
        dijkstra(d, {to}, [&](int u, auto&& relax) {
            for (const auto& [p, c] : pred[static_cast<std::size_t>(u)]) relax(p, c, meters(pa_, p, u));
        });
        return d;
    }

    const std::vector<std::vector<std::pair<int, CostVector>>>& predecessors(int from) {
        auto it = pred_cache_.find(from);
        if (it != pred_cache_.end()) return it->second;
        std::vector<std::vector<std::pair<int, CostVector>>> pred(static_cast<std::size_t>(pa_.size()));
        std::vector<char> seen(static_cast<std::size_t>(pa_.size()));
        std::deque<int> q{from};
        seen[static_cast<std::size_t>(from)] = 1;
        while (!q.empty()) {
            const int u = q.front();
            q.pop_front();
            for (const ProductEdge& e : pa_.successors(u)) {
                pred[static_cast<std::size_t>(e.to)].push_back({u, e.cost});
                if (!seen[static_cast<std::size_t>(e.to)]) {
                    seen[static_cast<std::size_t>(e.to)] = 1;
                    q.push_back(e.to);
                }
            }
        }
        return pred_cache_.emplace(from, std::move(pred)).first->second;
    }

    template <class Expand>
    void dijkstra(std::vector<Metric>& d, std::vector<int> sources, Expand expand) {
        using Key = std::tuple<double, double, int, int>;
        std::priority_queue<Key, std::vector<Key>, std::greater<>> pq;
        for (int s : sources) {
            d[static_cast<std::size_t>(s)] = Metric{0.0, 0.0, 0, -1};
            pq.push({0.0, 0.0, 0, s});
        }
        std::vector<char> done(d.size());
        while (!pq.empty()) {
            auto [c, m, h, u] = pq.top();
            pq.pop();
            if (done[static_cast<std::size_t>(u)]) continue;
            done[static_cast<std::size_t>(u)] = 1;
            expand(u, [&](int v, const CostVector& cv, double len) {
                if (done[static_cast<std::size_t>(v)]) return;
                Metric cand{c + weight(cv, beta_), m + len, h + 1, u};
                if (cand < d[static_cast<std::size_t>(v)]) {
                    d[static_cast<std::size_t>(v)] = cand;
                    pq.push({cand.cost, cand.meters, cand.hops, v});
                }
            });
        }
    }

    const ProductAutomaton& pa_;
    double beta_;
    std::map<int, std::vector<Metric>> fwd_cache_;
    std::map<int, std::vector<std::vector<std::pair<int, CostVector>>>> pred_cache_;
};

}  // namespace

Insertion insert_temp_task(const ProductAutomaton& pa, const Plan& plan, const TempTask& task, double v_max) {
    if (task.pickup < 0 || task.pickup >= pa.ts().size() || task.dropoff < 0 || task.dropoff >= pa.ts().size())
        throw UnknownId("temporary task names an unknown region");
    const std::vector<int> w = remaining_run(plan);
    const int n = static_cast<int>(w.size()) - 1;
    const AcceptingRun& run = plan.run;
    const int f_len = static_cast<int>(run.suffix.size());
    auto succ = [&](int k) { return k < n ? w[static_cast<std::size_t>(k + 1)] : run.suffix[static_cast<std::size_t>(1 % f_len)]; };

    DetourFinder finder(pa, plan.beta);
    struct Option {
        bool zero = false;
        Detour detour;
        double extra = kInf;         // C_β added
        double meters_before = 0.0;  // meters from w_k to the first visit of the region
        double meters_total = 0.0;   // meters replacing the edge (w_k, w_k+1)
    };
    auto option = [&](int k, int region) {
        Option o;
        const int wk = w[static_cast<std::size_t>(k)];
        const int nxt = succ(k);
        const double edge_m = meters(pa, wk, nxt);
        if (pa.state(wk).pi == region) {
            o.zero = true;
            o.extra = 0.0;
            o.meters_total = edge_m;
            return o;
        }
        o.detour = finder.find(wk, nxt, region);
        if (o.detour.cost == kInf) return o;
        o.extra = o.detour.cost - weight(edge(pa, wk, nxt), plan.beta);
        o.meters_before = DetourFinder::meters_to_region(pa, o.detour, region);
        o.meters_total = o.detour.meters;
        return o;
    };
    std::vector<Option> ps, pg;
    for (int k = 0; k <= n; ++k) {
        ps.push_back(option(k, task.pickup));
        pg.push_back(option(k, task.dropoff));
    }
    std::vector<double> along(static_cast<std::size_t>(n + 1), 0.0);  // meters from w_0 to w_k
    for (int k = 1; k <= n; ++k)
        along[static_cast<std::size_t>(k)] =
            along[static_cast<std::size_t>(k - 1)] + meters(pa, w[static_cast<std::size_t>(k - 1)], w[static_cast<std::size_t>(k)]);

    struct Choice {
        int ks = -1, kg = -1;
        double dc = kInf, delay = kInf;
    };
    Choice s1, s2;
    for (int ks = 0; ks <= n; ++ks) {
        const Option& a = ps[static_cast<std::size_t>(ks)];
        if (a.extra == kInf) continue;
        for (int kg = ks + 1; kg <= n; ++kg) {
            const Option& b = pg[static_cast<std::size_t>(kg)];
            if (b.extra == kInf) continue;
            const double dc = a.extra + b.extra;
            double m = along[static_cast<std::size_t>(kg)] + (a.zero ? 0.0 : a.meters_total - meters(pa, w[static_cast<std::size_t>(ks)], succ(ks)));
            if (!b.zero) m += b.meters_before;
            const double delay = m / v_max - task.deadline;
            if (delay <= 0 && dc < s1.dc) s1 = {ks, kg, dc, delay};
            const double obj = std::max(0.0, delay) + dc;
            if (obj < (s2.ks < 0 ? kInf : std::max(0.0, s2.delay) + s2.dc)) s2 = {ks, kg, dc, delay};
        }
    }
    if (s2.ks < 0) throw NoFeasibleInsertion("every insertion point violates the hard task");
    const Choice c = s1.ks >= 0 ? s1 : s2;

    // Materialize: splice detours into the remaining run; unroll one lap when a detour lies
    // in the suffix.
    const int s_len = static_cast<int>(run.prefix.size());
    const int first_suffix_edge = std::max(0, s_len - plan.position());  // W index where suffix edges start
    std::vector<int> ext = w;
    for (int i = 1; i < f_len; ++i) ext.push_back(run.suffix[static_cast<std::size_t>(i)]);
    ext.push_back(run.suffix.front());
    auto splice = [&](int k, const Option& o, std::vector<int>& out) {
        out.push_back(ext[static_cast<std::size_t>(k)]);
        if (!o.zero) out.insert(out.end(), o.detour.path.begin() + 1, o.detour.path.end() - 1);
    };
    const bool unroll = c.kg >= first_suffix_edge;
    std::vector<int> seq;
    // Exclusive end of the new prefix; the suffix then restarts at its accepting state.
    int stop = first_suffix_edge;
    if (unroll) stop = c.kg == n ? static_cast<int>(ext.size()) - 1 : n;
    for (int k = 0; k < stop; ++k) {
        if (k == c.ks) splice(k, ps[static_cast<std::size_t>(k)], seq);
        else if (k == c.kg) splice(k, pg[static_cast<std::size_t>(k)], seq);
        else seq.push_back(ext[static_cast<std::size_t>(k)]);
    }
    AcceptingRun nr;
    nr.prefix = seq;
    nr.suffix = run.suffix;
    Insertion out;
    out.plan = make_plan(pa, std::move(nr), plan.beta, plan.gamma);
    out.k_s = c.ks;
    out.k_g = c.kg;
    out.delta_cost = Cost(c.dc);
    out.delay = c.delay;
    out.stage = s1.ks >= 0 ? 1 : 2;
    return out;
}

nlohmann::json to_json(const ProductAutomaton& pa, const Plan& plan) {
    using nlohmann::json;
    auto names = [&](const std::vector<int>& v) {
        json a = json::array();
        for (int q : v) a.push_back(pa.name(q));
        return a;
    };
    auto vec = [](const CostVector& c) {
        auto d = [](Cost x) { return x.is_infinite() ? json("inf") : json(x.value()); };
        return json::array({d(c.alpha1), d(c.alpha2), d(c.alpha3)});
    };
    json regions = json::array();
    for (int r : plan.tau_r) regions.push_back(pa.ts().region(r).id);
    json edges = json::array();
    const auto seq = plan.run.sequence();
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const int a = seq[i];
        const int b = i + 1 < seq.size() ? seq[i + 1] : plan.run.suffix.front();
        edges.push_back({{"src", pa.name(a)}, {"dst", pa.name(b)}, {"alpha", vec(pa.edge_cost(pa.state(a), pa.state(b)))}});
    }
    return {{"regions", regions},
            {"prefix_length", plan.run.prefix.size()},
            {"prefix", names(plan.run.prefix)},
            {"suffix", names(plan.run.suffix)},
            {"edges", edges},
            {"cost",
             {{"total", plan.cost.is_infinite() ? json("inf") : json(plan.cost.value())},
              {"prefix", vec(plan.run.prefix_cost)},
              {"suffix", vec(plan.run.suffix_cost)}}},
            {"beta", plan.beta},
            {"gamma", plan.gamma},
            {"cursor", plan.cursor},
            {"ts_revision", plan.ts_revision}};
}

}  // namespace mixplan

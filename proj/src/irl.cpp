#include "mixplan/irl.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "mixplan/error.hpp"
#include "search.hpp"

namespace mixplan {

DemonstrationRun lift_trace(const ProductAutomaton& pa, const std::vector<int>& regions,
                            const std::vector<int>& sources) {
    if (regions.empty()) throw NoLift("empty trace");
    struct Entry {
        int alpha3;
        std::vector<int> path;
    };
    std::map<int, Entry> layer;
    for (int s : sources.empty() ? pa.initial_states() : sources)
        if (pa.state(s).pi == regions.front()) layer.emplace(s, Entry{0, {s}});
    for (std::size_t i = 1; i < regions.size() && !layer.empty(); ++i) {
        std::map<int, Entry> next;
        for (const auto& [q, e] : layer)
            for (const AutomatonMove& m : pa.moves(q)) {
                const int t = pa.index({regions[i], m.q1, m.q2, m.c});
                Entry cand{e.alpha3 + m.alpha3, e.path};
                cand.path.push_back(t);
                auto it = next.find(t);
                if (it == next.end() || std::tie(cand.alpha3, cand.path) < std::tie(it->second.alpha3, it->second.path))
                    next[t] = std::move(cand);
            }
        layer = std::move(next);
    }
    if (layer.empty()) throw NoLift("no hard-consistent run projects onto the trace");
    const Entry* best = nullptr;
    for (const auto& [q, e] : layer)
        if (!best || std::tie(e.alpha3, e.path) < std::tie(best->alpha3, best->path)) best = &e;
    return {best->path, best->alpha3};
}

int margin(const std::vector<int>& run, const std::vector<int>& star) {
    std::set<std::pair<int, int>> edges;
    for (std::size_t i = 0; i + 1 < star.size(); ++i) edges.insert({star[i], star[i + 1]});
    int m = 0;
    for (std::size_t i = 0; i + 1 < run.size(); ++i)
        if (!edges.count({run[i], run[i + 1]})) ++m;
    return m;
}

int alpha3_of(const ProductAutomaton& pa, const std::vector<int>& states) {
    int sum = 0;
    for (std::size_t i = 0; i + 1 < states.size(); ++i) {
        const ProductState a = pa.state(states[i]);
        const ProductState b = pa.state(states[i + 1]);
        const Guard* g = pa.soft().guard(a.q2, b.q2);
        if (!g || !g->satisfiable()) throw Error("run uses a disabled soft transition");
        sum += g->dist(pa.ts().label(a.pi));
    }
    return sum;
}

std::vector<int> margin_optimal_run(const ProductAutomaton& pa, double beta, const std::vector<int>& star) {
    if (star.empty()) throw NoPath("empty demonstration");
    if (star.size() == 1) return star;
    std::set<std::pair<int, int>> shared;
    for (std::size_t i = 0; i + 1 < star.size(); ++i) shared.insert({star[i], star[i + 1]});
    detail::Search s(pa, [&](int u, const ProductEdge& e) {
        const double w = e.cost.alpha1.value() + beta * e.cost.alpha3.value() - (shared.count({u, e.to}) ? 0.0 : 1.0);
        return std::max(0.0, w);
    });
    s.run({{star.front(), 0.0, 0}});
    if (!s.done[static_cast<std::size_t>(star.back())]) throw NoPath("demonstration endpoints are disconnected");
    return s.path(star.back());
}

double subgradient(double lambda, double beta, double a3_star, double a3_hat) {
    return lambda * beta + (a3_star - a3_hat);
}

BetaEstimate learn_beta(const ProductAutomaton& pa, const DemonstrationRun& demo, double beta0,
                        const IrlParams& params) {
    BetaEstimate est;
    est.params = params;
    double beta = std::max(0.0, beta0);
    for (int k = 0; k < params.max_iters; ++k) {
        const std::vector<int> hat = margin_optimal_run(pa, beta, demo.states);
        const int a3_hat = alpha3_of(pa, hat);
        const double g = subgradient(params.lambda, beta, demo.alpha3, a3_hat);
        est.history.push_back({k, beta, g, demo.alpha3, a3_hat});
        const double next = std::max(0.0, beta - params.theta * g);
        const bool done = std::abs(next - beta) <= params.eps_threshold;
        beta = next;
        if (done) {
            est.converged = true;
            break;
        }
    }
    est.beta = beta;
    return est;
}

std::string history_csv(const BetaEstimate& e) {
    std::ostringstream os;
    os.precision(17);
    os << "k,beta,grad,a3_star,a3_hat\n";
    for (const BetaStep& s : e.history) os << s.k << ',' << s.beta << ',' << s.grad << ',' << s.a3_star << ',' << s.a3_hat << '\n';
    return os.str();
}

nlohmann::json to_json(const BetaEstimate& e) {
    nlohmann::json h = nlohmann::json::array();
    for (const BetaStep& s : e.history)
        h.push_back({{"k", s.k}, {"beta", s.beta}, {"grad", s.grad}, {"a3_star", s.a3_star}, {"a3_hat", s.a3_hat}});
    return {{"beta", e.beta}, {"converged", e.converged}, {"iterations", e.history.size()}, {"history", h}};
}

}  // namespace mixplan

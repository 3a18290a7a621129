#include <doctest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "mixplan/error.hpp"
#include "mixplan/irl.hpp"
#include "mixplan/planner.hpp"
#include "oracles.hpp"

using namespace mixplan;
using nlohmann::json;

namespace {

json routes_doc() {
    std::ifstream in(MIXPLAN_SOURCE_DIR "/scenarios/irl_routes.json");
    return json::parse(in);
}

json single_path_doc() {
    return json::parse(R"({
      "ap": ["a", "b", "c"],
      "regions": [
        {"id": "a", "disk": {"center": [0, 0], "radius": 1}, "labels": ["a"]},
        {"id": "b", "disk": {"center": [4, 0], "radius": 1}, "labels": ["b"]},
        {"id": "c", "disk": {"center": [8, 0], "radius": 1}, "labels": ["c"]}
      ],
      "edges": [{"from": "a", "to": "b", "weight": 2, "directed": true},
                {"from": "b", "to": "c", "weight": 3, "directed": true},
                {"from": "c", "to": "c", "weight": 1, "directed": true}],
      "initial": "a", "phi_hard": "<> c", "phi_soft": "[] !b"
    })");
}

std::vector<int> regions_of(const ProductAutomaton& pa, const std::vector<int>& states) {
    std::vector<int> out;
    for (int q : states) out.push_back(pa.state(q).pi);
    return out;
}

// Every product run over the trace (α2 = 0 moves), minimal (α3, sequence).
std::pair<int, std::vector<int>> lift_by_enumeration(const ProductAutomaton& pa, const std::vector<int>& regions) {
    std::pair<int, std::vector<int>> best{-1, {}};
    std::vector<int> path;
    std::function<void(std::size_t, int)> go = [&](std::size_t i, int a3) {
        if (i == regions.size()) {
            if (best.first < 0 || std::tie(a3, path) < std::tie(best.first, best.second)) best = {a3, path};
            return;
        }
        const ProductState from = pa.state(path.back());
        for (int q = 0; q < pa.size(); ++q) {
            const ProductState to = pa.state(q);
            if (to.pi != regions[i]) continue;
            const CostVector c = pa.edge_cost(from, to);
            if (!(c.alpha2 == Cost(0.0))) continue;
            path.push_back(q);
            go(i + 1, a3 + static_cast<int>(c.alpha3.value()));
            path.pop_back();
        }
    };
    for (int s : pa.initial_states()) {
        if (pa.state(s).pi != regions.front()) continue;
        path = {s};
        go(1, 0);
    }
    return best;
}

}  // namespace

TEST_CASE("margin counts unshared edges") {
    CHECK(margin({1, 2, 3, 4}, {1, 2, 3, 4}) == 0);
    CHECK(margin({1, 5, 6, 4}, {1, 2, 3, 4}) == 3);
    CHECK(margin({1, 2, 3, 7, 8, 9}, {1, 2, 3, 4}) == 3);
    CHECK(margin({1}, {1, 2}) == 0);
    CHECK(margin({1, 2, 1, 2}, {2, 1}) == 2);
}

TEST_CASE("subgradient arithmetic") {
    CHECK(subgradient(1.0, 0.0, 2, 5) == doctest::Approx(-3.0));
    CHECK(subgradient(0.5, 0.0, 4, 4) == doctest::Approx(0.0));
    CHECK(subgradient(0.1, 10.0, 1, 1) == doctest::Approx(1.0));
}

TEST_CASE("lift of a single region is the initial state") {
    const auto b = oracle::build(routes_doc());
    const int home = b.scenario.ts.index_of("home");
    const auto d = lift_trace(*b.pa, {home});
    REQUIRE(d.states.size() == 1);
    CHECK(d.alpha3 == 0);
    CHECK(b.pa->state(d.states[0]).pi == home);
    CHECK_THROWS_AS(lift_trace(*b.pa, {}), NoLift);
    CHECK_THROWS_AS(lift_trace(*b.pa, {b.scenario.ts.index_of("goal")}), NoLift);
}

TEST_CASE("lift matches exhaustive product enumeration") {
    std::mt19937_64 rng(7);
    int checked = 0;
    for (int trial = 0; trial < 30; ++trial) {
        const auto b = oracle::build(oracle::random_scenario(rng, 3 + trial % 3));
        const auto& pa = *b.pa;
        Plan p;
        try {
            p = synthesize(pa, 2.0);
        } catch (const NoAcceptingRun&) {
            continue;
        }
        auto regions = regions_of(pa, oracle::demo_run(p));
        if (regions.size() > 7) regions.resize(7);
        const auto d = lift_trace(pa, regions);
        const auto want = lift_by_enumeration(pa, regions);
        CHECK(d.alpha3 == want.first);
        CHECK(d.states == want.second);
        CHECK(alpha3_of(pa, d.states) == d.alpha3);
        CHECK(regions_of(pa, d.states) == regions);
        std::vector<int> witness = oracle::demo_run(p);
        witness.resize(regions.size());
        CHECK(d.alpha3 <= alpha3_of(pa, witness));
        ++checked;
    }
    CHECK(checked >= 15);
}

TEST_CASE("lift rejects traces that break the hard task") {
    auto doc = routes_doc();
    doc["phi_hard"] = "<> goal && [] !s1";
    const auto b = oracle::build(doc);
    const auto& ts = b.scenario.ts;
    CHECK_THROWS_AS(lift_trace(*b.pa, {ts.index_of("home"), ts.index_of("z1"), ts.index_of("z2")}), NoLift);
    CHECK_NOTHROW(lift_trace(*b.pa, {ts.index_of("home"), ts.index_of("z1")}));
}

TEST_CASE("margin-optimal run returns the demonstration when it is optimal") {
    const auto b = oracle::build(routes_doc());
    const Plan p = synthesize(*b.pa, 15.0);
    const auto star = oracle::demo_run(p);
    CHECK(margin_optimal_run(*b.pa, 15.0, star) == star);
    CHECK(margin_optimal_run(*b.pa, 15.0, {star.front()}) == std::vector<int>{star.front()});
}

TEST_CASE("margin-optimal run on a single path graph") {
    const auto b = oracle::build(single_path_doc());
    const Plan p = synthesize(*b.pa, 0.0);
    const auto star = oracle::demo_run(p);
    for (double beta : {0.0, 1.0, 10.0, 100.0}) CHECK(margin_optimal_run(*b.pa, beta, star) == star);
}

TEST_CASE("margin-optimal run matches brute-force argmin") {
    std::mt19937_64 rng(11);
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const auto b = oracle::build(oracle::random_scenario(rng, 3 + trial % 2));
        const auto& pa = *b.pa;
        const double beta_star = static_cast<double>(trial % 5) * 2.0;
        Plan p;
        try {
            p = synthesize(pa, beta_star);
        } catch (const NoAcceptingRun&) {
            continue;
        }
        const auto star = oracle::demo_run(p);
        for (double beta : {0.0, 0.5, 3.0, 12.0}) {
            const auto r = margin_optimal_run(pa, beta, star);
            REQUIRE(r.front() == star.front());
            REQUIRE(r.back() == star.back());
            CHECK(oracle::objective(pa, r, star, beta) == doctest::Approx(oracle::margin_argmin_by_enumeration(pa, star, beta)));
        }
        ++checked;
    }
    CHECK(checked >= 20);
}

TEST_CASE("learn_beta fixed point") {
    const auto b = oracle::build(single_path_doc());
    const auto& pa = *b.pa;
    const Plan p = synthesize(pa, 0.0);
    const auto d = lift_trace(pa, regions_of(pa, oracle::demo_run(p)));
    const auto e = learn_beta(pa, d, 0.0, IrlParams{});
    CHECK(e.converged);
    CHECK(e.beta == 0.0);
    REQUIRE(e.history.size() == 1);
    CHECK(e.history[0].grad == 0.0);
    CHECK(e.history[0].a3_hat == d.alpha3);
}

TEST_CASE("driving through the soft-forbidden corridor lowers beta") {
    const auto b = oracle::build(routes_doc());
    const auto& pa = *b.pa;
    const auto& ts = b.scenario.ts;
    std::vector<int> trace{ts.index_of("home")};
    for (int i = 1; i <= 4; ++i) trace.push_back(ts.index_of("z" + std::to_string(i)));
    trace.push_back(ts.index_of("goal"));
    const auto d = lift_trace(pa, trace);
    CHECK(d.alpha3 == 16);
    const auto e = learn_beta(pa, d, 30.0, IrlParams{});
    CHECK(e.beta < 30.0);
    for (const auto& s : e.history) CHECK(s.beta >= 0.0);
    for (std::size_t i = 0; i < e.history.size(); ++i) CHECK(e.history[i].k == static_cast<int>(i));
}

TEST_CASE("learned beta reproduces demonstrations of different preferences") {
    const auto b = oracle::build(routes_doc());
    const auto& pa = *b.pa;
    std::set<std::vector<int>> demos;
    for (double beta_h : {5.0, 15.0, 30.0}) {
        CAPTURE(beta_h);
        const Plan demo = synthesize(pa, beta_h);
        demos.insert(oracle::demo_run(demo));
        const auto d = lift_trace(pa, regions_of(pa, oracle::demo_run(demo)));
        const IrlParams params = b.scenario.irl;
        const auto e = learn_beta(pa, d, 0.0, params);
        REQUIRE(e.converged);
        CHECK(e.history.size() <= 200);
        const Plan learned = synthesize(pa, e.beta);
        CHECK(learned.run.prefix == demo.run.prefix);
        CHECK(learned.run.suffix == demo.run.suffix);

        double gmax = 0;
        for (const auto& s : e.history) gmax = std::max(gmax, std::abs(s.grad));
        const double rate = 1.0 - params.theta * params.lambda;
        const double floor = params.theta * gmax / params.lambda;
        for (const auto& s : e.history) {
            const double env = std::pow(rate, s.k + 1) * std::pow(0.0 - e.beta, 2) + floor;
            CHECK(std::abs(s.beta - e.beta) <= env + 1e-9);
        }
    }
    CHECK(demos.size() == 3);
}

TEST_CASE("history csv") {
    BetaEstimate e;
    e.history = {{0, 0.0, -2.0, 1, 3}, {1, 0.2, -1.9, 1, 3}};
    const auto csv = history_csv(e);
    CHECK(csv.rfind("k,beta,grad,a3_star,a3_hat\n", 0) == 0);
    CHECK(csv.find("1,0.20000000000000001,-1.8999999999999999,1,3") != std::string::npos);
    CHECK(to_json(e)["history"].size() == 2);
}

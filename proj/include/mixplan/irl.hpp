#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixplan/product.hpp"
#include "mixplan/workspace.hpp"

namespace mixplan {

/// Region sequence of the executed trajectory with the operator-guided part marked.
struct HumanTrace {
    std::vector<int> regions;
    std::pair<int, int> guided_span{0, 0};  // [first, last] indices into regions
    std::vector<double> times;              // entry time per region (optional)
};

struct DemonstrationRun {
    std::vector<int> states;
    int alpha3 = 0;
};

/// α3-minimal product run projecting onto `regions`, over edges with α2 = 0 (α1 may be
/// infinite: the operator is not bound to modelled transitions). Runs start in `sources`
/// (default: the initial states). Ties go to the lexicographically smallest state sequence.
/// Throws NoLift.
DemonstrationRun lift_trace(const ProductAutomaton& pa, const std::vector<int>& regions,
                            const std::vector<int>& sources = {});

/// Number of edges of `run` (with multiplicity) that are not edges of `star`.
int margin(const std::vector<int>& run, const std::vector<int>& star);

/// Σ α3 along consecutive states.
int alpha3_of(const ProductAutomaton& pa, const std::vector<int>& states);

/// argmin over q1 ⇝ qH of C_β(R) − M(R, R*) by Dijkstra on
/// max(0, α1 + β·α3 − [edge not in R*]). Throws NoPath.
std::vector<int> margin_optimal_run(const ProductAutomaton& pa, double beta, const std::vector<int>& star);

/// λ·β + a3* − â3.
double subgradient(double lambda, double beta, double a3_star, double a3_hat);

struct BetaStep {
    int k = 0;
    double beta = 0.0;
    double grad = 0.0;
    int a3_star = 0;
    int a3_hat = 0;
};

struct BetaEstimate {
    double beta = 0.0;
    std::vector<BetaStep> history;
    bool converged = false;
    IrlParams params;
};

/// Projected subgradient iteration until |β_{k+1} − β_k| ≤ eps_threshold or max_iters.
BetaEstimate learn_beta(const ProductAutomaton& pa, const DemonstrationRun& demo, double beta0,
                        const IrlParams& params);

/// k,beta,grad,a3_star,a3_hat rows with a header line.
std::string history_csv(const BetaEstimate& e);
nlohmann::json to_json(const BetaEstimate& e);

}  // namespace mixplan

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixplan/cost.hpp"
#include "mixplan/product.hpp"

namespace mixplan {

/// Prefix–suffix run. The suffix repeats forever through the wrap edge suffix.back() ->
/// suffix.front(); suffix.front() is accepting. The prefix excludes suffix.front() and may be
/// empty when the run starts at its accepting state.
struct AcceptingRun {
    std::vector<int> prefix;
    std::vector<int> suffix;
    CostVector prefix_cost;
    CostVector suffix_cost;

    int size() const { return static_cast<int>(prefix.size() + suffix.size()); }
    /// State at run position k, k ≥ 0; positions past the first lap wrap into the suffix.
    int at(int k) const;
    /// prefix ++ suffix.
    std::vector<int> sequence() const;
};

/// C_β = [α1+α2+βα3](prefix) + γ·[α1+α2+βα3](suffix).
Cost total_cost(const AcceptingRun& run, double beta, double gamma);
Cost total_cost(const CostVector& prefix, const CostVector& suffix, double beta, double gamma);

/// Accumulated cost vector along consecutive states of a path (no wrap edge).
CostVector path_cost(const ProductAutomaton& pa, const std::vector<int>& path);

struct Plan {
    AcceptingRun run;
    std::vector<int> tau_r;  // region projection of run.sequence()
    int cursor = 1;          // run position of the next region to reach
    double beta = 0.0;
    double gamma = 1.0;
    Cost cost;
    std::size_t ts_revision = 0;

    /// Run position the robot currently occupies.
    int position() const { return cursor - 1; }
    int current_state() const { return run.at(position()); }
    int next_region(const ProductAutomaton& pa) const;
};

/// Optimal prefix–suffix run from the initial states. Throws NoAcceptingRun.
Plan synthesize(const ProductAutomaton& pa, double beta, double gamma = 1.0);
/// Optimal run rooted at any state of `sources` (the belief Q_t). Throws NoAcceptingRun.
Plan revise(const ProductAutomaton& pa, const std::vector<int>& sources, double beta, double gamma = 1.0);

/// Cost of the part of a plan still ahead of the robot: the remaining prefix and the suffix
/// (rotated when the robot is already inside the suffix).
Cost remaining_cost(const ProductAutomaton& pa, const Plan& plan);

struct TempTask {
    int pickup = 0;
    int dropoff = 0;
    double deadline = 0.0;  // seconds from assignment
    double assigned_at = 0.0;
};

struct Insertion {
    Plan plan;
    int k_s = 0;  // indices into the remaining run, 0 = the robot's current state
    int k_g = 0;
    Cost delta_cost;
    double delay = 0.0;  // predicted arrival at the dropoff minus the deadline (seconds)
    int stage = 1;
};

/// Remaining run W used by the insertion: run positions from the current one through the
/// end of the current suffix lap, ending at the accepting state.
std::vector<int> remaining_run(const Plan& plan);

/// Two-stage insertion of a pick-up/drop-off task with deadline. Throws NoFeasibleInsertion
/// when every candidate would violate the hard task; throws UnknownId for unknown regions.
Insertion insert_temp_task(const ProductAutomaton& pa, const Plan& plan, const TempTask& task, double v_max);

/// JSON view: region ids, state names, per-edge α vectors, cost breakdown.
nlohmann::json to_json(const ProductAutomaton& pa, const Plan& plan);

}  // namespace mixplan

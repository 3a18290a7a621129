#pragma once

#include <compare>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixplan/cost.hpp"
#include "mixplan/nba.hpp"
#include "mixplan/workspace.hpp"

namespace mixplan {

/// <pi, q1, q2, c>: region, hard-automaton state, soft-automaton state, phase bit c ∈ {1,2}.
struct ProductState {
    int pi = 0;
    int q1 = 0;
    int q2 = 0;
    int c = 1;

    friend auto operator<=>(const ProductState&, const ProductState&) = default;
};

/// [alpha1, alpha2, alpha3]: control cost, hard-violation indicator (0 or inf), soft
/// violation measure.
struct CostVector {
    Cost alpha1;
    Cost alpha2;
    Cost alpha3;

    bool finite() const { return alpha1.is_finite() && alpha2 == Cost(0.0); }
    /// alpha1 + alpha2 + beta * alpha3.
    Cost weighted(double beta) const { return alpha1 + alpha2 + beta * alpha3; }

    CostVector& operator+=(const CostVector& o) {
        alpha1 += o.alpha1;
        alpha2 += o.alpha2;
        alpha3 += o.alpha3;
        return *this;
    }
    friend bool operator==(const CostVector&, const CostVector&) = default;
};

/// Automaton part of a product move: successor automaton states reached while reading
/// L(pi), independent of the destination region.
struct AutomatonMove {
    int q1 = 0;
    int q2 = 0;
    int c = 1;
    int alpha3 = 0;
};

struct ProductEdge {
    int to = 0;  // state index
    CostVector cost;
};

/// Parameterized product T ⊗ A_hard ⊗ A_soft, built lazily. Bound to one transition-system
/// snapshot; successor memos are internally synchronized. A model update yields a fresh
/// automaton via rebind().
class ProductAutomaton {
public:
    /// Throws ScenarioError when the automata's alphabet differs from the workspace AP.
    ProductAutomaton(std::shared_ptr<const TransitionSystem> ts, std::shared_ptr<const Nba> hard,
                     std::shared_ptr<const Nba> soft);

    ProductAutomaton rebind(std::shared_ptr<const TransitionSystem> ts) const;

    const TransitionSystem& ts() const { return *ts_; }
    std::shared_ptr<const TransitionSystem> ts_ptr() const { return ts_; }
    const Nba& hard() const { return *hard_; }
    const Nba& soft() const { return *soft_; }
    std::shared_ptr<const Nba> hard_ptr() const { return hard_; }
    std::shared_ptr<const Nba> soft_ptr() const { return soft_; }
    std::size_t ts_revision() const { return ts_->revision(); }

    /// |Π|·|Q1|·|Q2|·2.
    int size() const { return size_; }
    int index(const ProductState& s) const;
    ProductState state(int index) const;
    std::string name(int index) const;

    /// Π0 × Q1,0 × Q2,0 × {1}, as sorted indices.
    std::vector<int> initial_states() const;
    /// c = 1 and q1 accepting in the hard automaton.
    bool is_accepting(int index) const;

    /// Full cost vector of an arbitrary pair of states.
    CostVector edge_cost(const ProductState& from, const ProductState& to) const;

    /// All automaton moves with alpha2 = 0 out of a state (memoized).
    const std::vector<AutomatonMove>& moves(int index) const;
    /// Finite-cost successors (TS edge present, alpha2 = 0), sorted by index (memoized).
    const std::vector<ProductEdge>& successors(int index) const;

    /// Successor phase bit prescribed by the c-switching rule.
    int next_phase(int q1, int q2, int c) const;

private:
    std::shared_ptr<const TransitionSystem> ts_;
    std::shared_ptr<const Nba> hard_;
    std::shared_ptr<const Nba> soft_;
    int n1_;
    int n2_;
    int size_;

    mutable std::mutex memo_mutex_;
    mutable std::vector<std::unique_ptr<const std::vector<AutomatonMove>>> moves_memo_;
    mutable std::vector<std::unique_ptr<const std::vector<ProductEdge>>> succ_memo_;
};

/// Product of a loaded scenario's workspace and (normalized) formulas.
std::shared_ptr<ProductAutomaton> make_product(const Scenario& s);

/// States consistent with an observed region history starting at Π0: those reached from
/// the initial states by runs projecting onto the history whose edges all have alpha2 = 0.
/// Control cost is not required to be finite (the operator may steer off the model).
/// Throws std::invalid_argument when the history is empty or does not start at Π0.
std::vector<int> reachable_states(const ProductAutomaton& pa, const std::vector<int>& history);

/// Belief update on entering `region`.
std::vector<int> advance(const ProductAutomaton& pa, const std::vector<int>& states, int region);

struct TrapSet {
    std::vector<int> states;  // sorted
    std::size_t ts_revision = 0;
    double beta = 0.0;
};

/// Members of `candidates` from which no accepting lasso is reachable over finite-cost
/// edges, i.e. no accepting state that lies on a cycle. One SCC pass and one backward sweep
/// over the forward closure of the candidates.
TrapSet trap_set(const ProductAutomaton& pa, const std::vector<int>& candidates, double beta);

/// Trap analysis around a belief: the one-step successors of every belief state into every
/// other region, the trap subset among them, and the regions whose successors are all traps.
struct TrapRegions {
    std::vector<int> candidates;
    TrapSet traps;
    std::vector<int> regions;  // sorted region indices
};
TrapRegions trap_regions(const ProductAutomaton& pa, const std::vector<int>& belief, double beta);

/// Reachable product graph (finite-cost edges) as {nodes, edges:[{src,dst,cost:[a1,a2,a3]}]}.
nlohmann::json reachable_graph_json(const ProductAutomaton& pa);

}  // namespace mixplan

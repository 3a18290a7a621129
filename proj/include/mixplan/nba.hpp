#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixplan/ltl.hpp"

namespace mixplan {

/// A label-set l ⊆ AP, bit i set iff proposition i holds. At most 64 propositions.
using Label = std::uint64_t;
using LabelSet = std::vector<Label>;  // sorted, unique

/// Conjunction of literals: all of `pos` hold and none of `neg`.
struct Cube {
    Label pos = 0;
    Label neg = 0;

    bool satisfiable() const { return (pos & neg) == 0; }
    bool holds(Label l) const { return (l & pos) == pos && (l & neg) == 0; }
    friend bool operator==(const Cube&, const Cube&) = default;
};

/// Transition guard in disjunctive normal form. An empty guard is `false`.
struct Guard {
    std::vector<Cube> cubes;

    static Guard always() { return Guard{{Cube{}}}; }
    bool holds(Label l) const;
    bool satisfiable() const;
    /// Minimal number of propositions in l that every enabling label would have to drop:
    /// min over satisfiable cubes of |l ∩ neg|. Equals dist(l, chi) without materializing chi.
    int dist(Label l) const;
    std::string to_string(const std::vector<std::string>& ap) const;
};

struct NbaEdge {
    int src = 0;
    int dst = 0;
    Guard guard;
};

/// Nondeterministic Büchi automaton over 2^AP with guard-labelled transitions.
/// Immutable after construction except for the internally synchronized chi memo.
class Nba {
public:
    Nba(std::vector<std::string> ap, int num_states, std::vector<int> initial,
        std::vector<bool> accepting, std::vector<NbaEdge> edges);

    const std::vector<std::string>& ap() const { return ap_; }
    int num_states() const { return num_states_; }
    const std::vector<int>& initial() const { return initial_; }
    bool is_accepting(int q) const { return accepting_.at(static_cast<std::size_t>(q)); }
    const std::vector<NbaEdge>& out(int q) const { return out_.at(static_cast<std::size_t>(q)); }
    std::vector<NbaEdge> edges() const;

    /// Guard of q -> q', or nullptr when no transition exists.
    const Guard* guard(int q, int q2) const;

    /// Materialized chi(q, q') = { l ∈ 2^AP | q' ∈ δ(q, l) }, memoized per edge.
    /// Throws UnknownId for out-of-range states.
    const LabelSet& chi(int q, int q2) const;

    /// Bit mask of a label given by proposition names; throws UnknownId for names outside AP.
    Label label_of(const std::vector<std::string>& names) const;

    nlohmann::json to_json() const;

private:
    void check_state(int q) const;

    std::vector<std::string> ap_;
    int num_states_;
    std::vector<int> initial_;
    std::vector<bool> accepting_;
    std::vector<std::vector<NbaEdge>> out_;
    std::map<std::pair<int, int>, std::size_t> index_;  // (src,dst) -> position in out_[src]

    mutable std::mutex chi_mutex_;
    mutable std::map<std::pair<int, int>, std::unique_ptr<LabelSet>> chi_memo_;
};

/// Tableau translation (on-the-fly node expansion into a generalized Büchi automaton,
/// then counter degeneralization). `ap` fixes the alphabet and must contain every atom of
/// phi; when empty, the formula's own atoms are used. States that cannot reach an
/// accepting state are pruned.
std::shared_ptr<const Nba> to_nba(const ltl::Formula& phi, std::vector<std::string> ap = {});

/// dist(l, chi): 0 if l ∈ chi, otherwise min over l' ∈ chi of |l \ l'|.
/// Precondition: chi non-empty (throws std::invalid_argument otherwise).
int dist(Label l, const LabelSet& chi);

}  // namespace mixplan

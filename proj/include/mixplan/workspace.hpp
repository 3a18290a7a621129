#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixplan/cost.hpp"
#include "mixplan/geometry.hpp"
#include "mixplan/ltl.hpp"
#include "mixplan/nba.hpp"

namespace mixplan {

struct ModelUpdate;

struct Region {
    std::string id;
    Shape shape;
    std::vector<std::string> labels;  // sorted
};

/// Labelled region graph T^t with planar geometry. A value type: updates produce a new
/// snapshot and leave the old one intact.
class TransitionSystem {
public:
    TransitionSystem(std::vector<std::string> ap, std::vector<Region> regions,
                     std::map<std::pair<int, int>, double> edges, int initial,
                     std::optional<Box> bounds = std::nullopt);

    const std::vector<std::string>& ap() const { return ap_; }
    const std::vector<Region>& regions() const { return regions_; }
    const Region& region(int i) const { return regions_.at(static_cast<std::size_t>(i)); }
    int size() const { return static_cast<int>(regions_.size()); }
    int initial() const { return initial_; }
    std::size_t revision() const { return revision_; }
    const Box& bounds() const { return bounds_; }

    /// Index of a region id; throws UnknownId.
    int index_of(const std::string& id) const;
    std::optional<int> find(const std::string& id) const;

    /// L(pi) as a bit mask over ap().
    Label label(int i) const { return labels_.at(static_cast<std::size_t>(i)); }
    Label label_of(const std::vector<std::string>& names) const;

    bool has_edge(int from, int to) const { return edges_.count({from, to}) > 0; }
    /// Edge length in meters, if the edge exists.
    std::optional<double> weight(int from, int to) const;
    /// Control cost alpha1: length times cost_scale(), infinity when there is no edge.
    Cost alpha1(int from, int to) const;
    /// Sorted successor regions.
    const std::vector<int>& neighbors(int i) const { return adj_.at(static_cast<std::size_t>(i)); }
    const std::map<std::pair<int, int>, double>& edges() const { return edges_; }

    /// Factor applied to lengths so that the shortest edge costs at least 1.
    double cost_scale() const { return cost_scale_; }

    double default_weight(int from, int to) const;

private:
    friend class WorkspaceLog;
    friend TransitionSystem apply_update(const TransitionSystem&, const ModelUpdate&);
    void rebuild();

    std::vector<std::string> ap_;
    std::vector<Region> regions_;
    std::map<std::pair<int, int>, double> edges_;
    int initial_;
    Box bounds_;
    std::vector<Label> labels_;
    std::vector<std::vector<int>> adj_;
    std::size_t revision_ = 0;
    double cost_scale_ = 1.0;
};

enum class UpdateSource { NavigationFeedback, Sensing, Operator };

struct SetEdge {
    std::string from;
    std::string to;
    bool present = true;
    std::optional<double> weight;  // defaults to centroid distance when adding
};

struct SetLabels {
    std::string region;
    std::vector<std::string> labels;
};

struct ModelUpdate {
    std::variant<SetEdge, SetLabels> kind;
    UpdateSource source = UpdateSource::Operator;
};

/// New snapshot with revision + 1. Throws UnknownId for unknown regions or propositions.
TransitionSystem apply_update(const TransitionSystem& ts, const ModelUpdate& u);

/// Region whose closed shape contains x; ties go to the lexicographically smallest id.
std::optional<int> region_at(const TransitionSystem& ts, Vec2 x);

/// Append-only update history; snapshot(r) is T at revision r.
class WorkspaceLog {
public:
    explicit WorkspaceLog(TransitionSystem initial);

    const TransitionSystem& current() const { return snapshots_.back(); }
    const TransitionSystem& snapshot(std::size_t revision) const { return snapshots_.at(revision); }
    const std::vector<ModelUpdate>& updates() const { return updates_; }
    const TransitionSystem& append(ModelUpdate u);

private:
    std::vector<TransitionSystem> snapshots_;
    std::vector<ModelUpdate> updates_;
};

struct ControllerParams {
    double gain = 1.0;     // 1/s
    double v_max = 1.0;    // m/s
    double u_h_max = 1.0;  // m/s, operator input clamp
    double dt = 0.05;      // s
};

struct IrlParams {
    double lambda = 0.5;
    double theta = 0.1;
    double eps_threshold = 0.01;
    int max_iters = 200;
};

struct Scenario {
    std::string name;
    TransitionSystem ts;
    ltl::Formula phi_hard;
    ltl::Formula phi_soft;
    double beta0 = 0.0;
    double gamma = 1.0;
    double d_s = 1.0;
    double eps_buffer = 0.5;
    ControllerParams controller;
    IrlParams irl;
};

/// Validates and builds a scenario. Throws ScenarioError (schema, geometry, dangling
/// edge, unknown proposition) or ParseError (formulas).
Scenario load_scenario(const nlohmann::json& doc);
Scenario load_scenario_file(const std::string& path);
nlohmann::json to_json(const Scenario& s);

nlohmann::json to_json(const ModelUpdate& u);
ModelUpdate model_update_from_json(const nlohmann::json& j);

}  // namespace mixplan

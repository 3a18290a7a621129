#include "mixplan/workspace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "mixplan/error.hpp"

namespace mixplan {

TransitionSystem::TransitionSystem(std::vector<std::string> ap, std::vector<Region> regions,
                                   std::map<std::pair<int, int>, double> edges, int initial,
                                   std::optional<Box> bounds)
    : ap_(std::move(ap)), regions_(std::move(regions)), edges_(std::move(edges)), initial_(initial) {
    if (ap_.size() > 64) throw ScenarioError("at most 64 atomic propositions are supported");
    if (regions_.empty()) throw ScenarioError("workspace needs at least one region");
    if (initial_ < 0 || initial_ >= size()) throw ScenarioError("initial region out of range");
    for (auto& r : regions_) {
        std::sort(r.labels.begin(), r.labels.end());
        r.labels.erase(std::unique(r.labels.begin(), r.labels.end()), r.labels.end());
    }
    double min_w = std::numeric_limits<double>::infinity();
    for (const auto& [e, w] : edges_) {
        if (e.first < 0 || e.first >= size() || e.second < 0 || e.second >= size())
            throw ScenarioError("edge endpoint out of range");
        if (!(w > 0.0) || !std::isfinite(w)) throw ScenarioError("edge weights must be positive and finite");
        min_w = std::min(min_w, w);
    }
    if (min_w < 1.0) cost_scale_ = 1.0 / min_w;
    if (bounds) {
        bounds_ = *bounds;
    } else {
        bounds_ = bounding_box(regions_.front().shape);
        for (const auto& r : regions_) {
            const Box b = bounding_box(r.shape);
            bounds_.lo = {std::min(bounds_.lo.x, b.lo.x), std::min(bounds_.lo.y, b.lo.y)};
            bounds_.hi = {std::max(bounds_.hi.x, b.hi.x), std::max(bounds_.hi.y, b.hi.y)};
        }
        bounds_.lo = bounds_.lo - Vec2{5.0, 5.0};
        bounds_.hi = bounds_.hi + Vec2{5.0, 5.0};
    }
    rebuild();
}

void TransitionSystem::rebuild() {
    labels_.assign(regions_.size(), 0);
    for (std::size_t i = 0; i < regions_.size(); ++i) labels_[i] = label_of(regions_[i].labels);
    adj_.assign(regions_.size(), {});
    for (const auto& [e, w] : edges_) adj_[static_cast<std::size_t>(e.first)].push_back(e.second);
}

int TransitionSystem::index_of(const std::string& id) const {
    if (auto i = find(id)) return *i;
    throw UnknownId("region '" + id + "' does not exist");
}

std::optional<int> TransitionSystem::find(const std::string& id) const {
    for (std::size_t i = 0; i < regions_.size(); ++i)
        if (regions_[i].id == id) return static_cast<int>(i);
    return std::nullopt;
}

Label TransitionSystem::label_of(const std::vector<std::string>& names) const {
    Label l = 0;
    for (const auto& n : names) {
        auto it = std::find(ap_.begin(), ap_.end(), n);
        if (it == ap_.end()) throw UnknownId("proposition '" + n + "' is not in AP");
        l |= Label{1} << static_cast<unsigned>(it - ap_.begin());
    }
    return l;
}

std::optional<double> TransitionSystem::weight(int from, int to) const {
    auto it = edges_.find({from, to});
    if (it == edges_.end()) return std::nullopt;
    return it->second;
}

Cost TransitionSystem::alpha1(int from, int to) const {
    auto w = weight(from, to);
    if (!w) return Cost::infinity();
    return Cost(*w * cost_scale_);
}

double TransitionSystem::default_weight(int from, int to) const {
    return (centroid(region(from).shape) - centroid(region(to).shape)).norm();
}

TransitionSystem apply_update(const TransitionSystem& ts, const ModelUpdate& u) {
    TransitionSystem next = ts;
    if (const auto* e = std::get_if<SetEdge>(&u.kind)) {
        const int a = ts.index_of(e->from);
        const int b = ts.index_of(e->to);
        if (e->present) {
            const double w = e->weight.value_or(ts.default_weight(a, b));
            if (!(w > 0.0) || !std::isfinite(w)) throw ScenarioError("edge weight must be positive and finite");
            next.edges_[{a, b}] = w;
        } else {
            next.edges_.erase({a, b});
        }
    } else {
        const auto& s = std::get<SetLabels>(u.kind);
        const int r = ts.index_of(s.region);
        ts.label_of(s.labels);  // validates names
        auto labels = s.labels;
        std::sort(labels.begin(), labels.end());
        labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
        next.regions_[static_cast<std::size_t>(r)].labels = std::move(labels);
    }
    next.rebuild();
    next.revision_ = ts.revision_ + 1;
    return next;
}

std::optional<int> region_at(const TransitionSystem& ts, Vec2 x) {
    std::optional<int> best;
    for (int i = 0; i < ts.size(); ++i) {
        if (!contains(ts.region(i).shape, x)) continue;
        if (!best || ts.region(i).id < ts.region(*best).id) best = i;
    }
    return best;
}

WorkspaceLog::WorkspaceLog(TransitionSystem initial) { snapshots_.push_back(std::move(initial)); }

const TransitionSystem& WorkspaceLog::append(ModelUpdate u) {
    snapshots_.push_back(apply_update(snapshots_.back(), u));
    updates_.push_back(std::move(u));
    return snapshots_.back();
}

namespace {

using nlohmann::json;

Vec2 vec_from(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ScenarioError("expected a point [x, y], got " + j.dump());
    return {j[0].get<double>(), j[1].get<double>()};
}

json vec_to(Vec2 v) { return json::array({v.x, v.y}); }

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ScenarioError(std::string("field '") + key + "': " + e.what());
    }
}

const json& require(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw ScenarioError(std::string("missing field '") + key + "'");
    return j.at(key);
}

double positive(const json& j, const char* key, double fallback, bool required = false) {
    if (required) require(j, key);
    const double v = get_or<double>(j, key, fallback);
    if (!(v > 0.0) || !std::isfinite(v)) throw ScenarioError(std::string("field '") + key + "' must be > 0");
    return v;
}

ltl::Formula formula_field(const json& doc, const char* key, const std::vector<std::string>& ap) {
    const json& f = require(doc, key);
    if (!f.is_string()) throw ScenarioError(std::string("field '") + key + "' must be a string");
    ltl::Formula phi = ltl::parse(f.get<std::string>());
    for (const auto& a : ltl::atoms(phi))
        if (std::find(ap.begin(), ap.end(), a) == ap.end())
            throw ScenarioError(std::string(key) + " mentions unknown proposition '" + a + "'");
    return phi;
}

}  // namespace

Scenario load_scenario(const json& doc) {
    if (!doc.is_object()) throw ScenarioError("scenario must be a JSON object");
    std::vector<std::string> ap;
    try {
        ap = require(doc, "ap").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ScenarioError(std::string("field 'ap': ") + e.what());
    }
    std::set<std::string> ap_set(ap.begin(), ap.end());
    if (ap_set.size() != ap.size()) throw ScenarioError("duplicate proposition in 'ap'");

    std::vector<Region> regions;
    const json& rs = require(doc, "regions");
    if (!rs.is_array()) throw ScenarioError("'regions' must be an array");
    std::set<std::string> ids;
    for (const json& r : rs) {
        Region reg;
        reg.id = get_or<std::string>(r, "id", "");
        if (reg.id.empty()) throw ScenarioError("region without id");
        if (!ids.insert(reg.id).second) throw ScenarioError("duplicate region id '" + reg.id + "'");
        if (r.contains("disk")) {
            const json& d = r.at("disk");
            reg.shape = Disk{vec_from(require(d, "center")), get_or<double>(d, "radius", 0.0)};
        } else if (r.contains("polygon")) {
            Polygon p;
            for (const json& v : r.at("polygon")) p.vertices.push_back(vec_from(v));
            reg.shape = std::move(p);
        } else {
            throw ScenarioError("region '" + reg.id + "' needs a 'disk' or 'polygon' shape");
        }
        if (!normalize_shape(reg.shape)) throw ScenarioError("region '" + reg.id + "' has invalid geometry");
        reg.labels = get_or<std::vector<std::string>>(r, "labels", {});
        for (const auto& l : reg.labels)
            if (!ap_set.count(l))
                throw ScenarioError("region '" + reg.id + "' has unknown proposition '" + l + "'");
        regions.push_back(std::move(reg));
    }
    for (std::size_t i = 0; i < regions.size(); ++i)
        for (std::size_t j = i + 1; j < regions.size(); ++j)
            if (interiors_overlap(regions[i].shape, regions[j].shape))
                throw ScenarioError("regions '" + regions[i].id + "' and '" + regions[j].id + "' overlap");

    auto index = [&](const std::string& id) -> int {
        for (std::size_t i = 0; i < regions.size(); ++i)
            if (regions[i].id == id) return static_cast<int>(i);
        throw ScenarioError("edge references unknown region '" + id + "'");
    };
    std::map<std::pair<int, int>, double> edges;
    for (const json& e : get_or<json>(doc, "edges", json::array())) {
        const int a = index(get_or<std::string>(e, "from", ""));
        const int b = index(get_or<std::string>(e, "to", ""));
        double w = (centroid(regions[static_cast<std::size_t>(a)].shape) -
                    centroid(regions[static_cast<std::size_t>(b)].shape)).norm();
        if (e.contains("weight")) w = get_or<double>(e, "weight", w);
        if (!(w > 0.0) || !std::isfinite(w))
            throw ScenarioError("edge " + regions[static_cast<std::size_t>(a)].id + "->" +
                                regions[static_cast<std::size_t>(b)].id + " needs a positive weight");
        edges[{a, b}] = w;
        if (!get_or<bool>(e, "directed", false)) edges[{b, a}] = w;
    }

    const int initial = [&] {
        const json& i = require(doc, "initial");
        if (!i.is_string()) throw ScenarioError("'initial' must be a region id");
        for (std::size_t k = 0; k < regions.size(); ++k)
            if (regions[k].id == i.get<std::string>()) return static_cast<int>(k);
        throw ScenarioError("initial region '" + i.get<std::string>() + "' does not exist");
    }();

    std::optional<Box> bounds;
    if (doc.contains("bounds")) {
        const json& b = doc.at("bounds");
        bounds = Box{vec_from(require(b, "min")), vec_from(require(b, "max"))};
    }

    ltl::Formula hard = formula_field(doc, "phi_hard", ap);
    ltl::Formula soft = doc.contains("phi_soft") ? formula_field(doc, "phi_soft", ap) : ltl::Formula::truth();

    Scenario s{
        .name = get_or<std::string>(doc, "name", "scenario"),
        .ts = TransitionSystem(ap, std::move(regions), std::move(edges), initial, bounds),
        .phi_hard = std::move(hard),
        .phi_soft = std::move(soft),
        .controller = {},
        .irl = {},
    };
    s.beta0 = get_or<double>(doc, "beta0", 0.0);
    s.gamma = get_or<double>(doc, "gamma", 1.0);
    if (s.beta0 < 0.0 || s.gamma < 0.0) throw ScenarioError("beta0 and gamma must be >= 0");
    s.d_s = positive(doc, "d_s", 1.0);
    s.eps_buffer = positive(doc, "eps_buffer", 0.5);
    const json ctrl = get_or<json>(doc, "controller", json::object());
    s.controller.gain = positive(ctrl, "gain", 1.0);
    s.controller.v_max = positive(ctrl, "v_max", 1.0);
    s.controller.u_h_max = positive(ctrl, "u_h_max", s.controller.v_max);
    s.controller.dt = positive(ctrl, "dt", 0.05);
    const json irl = get_or<json>(doc, "irl", json::object());
    s.irl.lambda = positive(irl, "lambda", 0.5);
    s.irl.theta = positive(irl, "theta", 0.1);
    s.irl.eps_threshold = positive(irl, "eps_threshold", 0.01);
    s.irl.max_iters = get_or<int>(irl, "max_iters", 200);
    if (s.irl.max_iters < 1) throw ScenarioError("irl.max_iters must be >= 1");
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError("scenario file '" + path + "' is not valid JSON: " + e.what());
    }
    return load_scenario(doc);
}

json to_json(const Scenario& s) {
    const TransitionSystem& ts = s.ts;
    json regions = json::array();
    for (const auto& r : ts.regions()) {
        json jr{{"id", r.id}, {"labels", r.labels}};
        if (const auto* d = std::get_if<Disk>(&r.shape)) {
            jr["disk"] = {{"center", vec_to(d->center)}, {"radius", d->radius}};
        } else {
            json pts = json::array();
            for (Vec2 v : std::get<Polygon>(r.shape).vertices) pts.push_back(vec_to(v));
            jr["polygon"] = pts;
        }
        regions.push_back(jr);
    }
    json edges = json::array();
    for (const auto& [e, w] : ts.edges())
        edges.push_back({{"from", ts.region(e.first).id}, {"to", ts.region(e.second).id}, {"weight", w}, {"directed", true}});
    return {
        {"name", s.name},
        {"ap", ts.ap()},
        {"regions", regions},
        {"edges", edges},
        {"initial", ts.region(ts.initial()).id},
        {"bounds", {{"min", vec_to(ts.bounds().lo)}, {"max", vec_to(ts.bounds().hi)}}},
        {"phi_hard", ltl::to_string(s.phi_hard)},
        {"phi_soft", ltl::to_string(s.phi_soft)},
        {"beta0", s.beta0},
        {"gamma", s.gamma},
        {"d_s", s.d_s},
        {"eps_buffer", s.eps_buffer},
        {"controller",
         {{"gain", s.controller.gain}, {"v_max", s.controller.v_max}, {"u_h_max", s.controller.u_h_max}, {"dt", s.controller.dt}}},
        {"irl",
         {{"lambda", s.irl.lambda}, {"theta", s.irl.theta}, {"eps_threshold", s.irl.eps_threshold}, {"max_iters", s.irl.max_iters}}},
    };
}

namespace {
const char* source_name(UpdateSource s) {
    switch (s) {
        case UpdateSource::NavigationFeedback: return "navigation-feedback";
        case UpdateSource::Sensing: return "sensing";
        default: return "operator";
    }
}
UpdateSource source_from(const std::string& s) {
    if (s == "navigation-feedback") return UpdateSource::NavigationFeedback;
    if (s == "sensing") return UpdateSource::Sensing;
    if (s == "operator") return UpdateSource::Operator;
    throw ScenarioError("unknown update source '" + s + "'");
}
}  // namespace

json to_json(const ModelUpdate& u) {
    json j{{"source", source_name(u.source)}};
    if (const auto* e = std::get_if<SetEdge>(&u.kind)) {
        j["kind"] = "set_edge";
        j["from"] = e->from;
        j["to"] = e->to;
        j["present"] = e->present;
        if (e->weight) j["weight"] = *e->weight;
    } else {
        const auto& s = std::get<SetLabels>(u.kind);
        j["kind"] = "set_labels";
        j["region"] = s.region;
        j["labels"] = s.labels;
    }
    return j;
}

ModelUpdate model_update_from_json(const json& j) {
    ModelUpdate u;
    u.source = source_from(get_or<std::string>(j, "source", "operator"));
    const std::string kind = get_or<std::string>(j, "kind", "");
    if (kind == "set_edge") {
        SetEdge e;
        e.from = get_or<std::string>(j, "from", "");
        e.to = get_or<std::string>(j, "to", "");
        e.present = get_or<bool>(j, "present", true);
        if (j.contains("weight")) e.weight = j.at("weight").get<double>();
        u.kind = e;
    } else if (kind == "set_labels") {
        u.kind = SetLabels{get_or<std::string>(j, "region", ""), get_or<std::vector<std::string>>(j, "labels", {})};
    } else {
        throw ScenarioError("unknown model update kind '" + kind + "'");
    }
    return u;
}

}  // namespace mixplan

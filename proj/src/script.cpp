#include "mixplan/script.hpp"

#include <fstream>
#include <limits>

#include "mixplan/error.hpp"

namespace mixplan {

using nlohmann::json;

ScriptRunner::ScriptRunner(std::vector<json> directives) : directives_(std::move(directives)) {
    end_ = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < directives_.size(); ++i) {
        const json& d = directives_[i];
        if (!d.is_object() || !d.contains("type") || !d.at("type").is_string())
            throw ScenarioError("script line " + std::to_string(i + 1) + ": missing type");
        if (d.contains("at") && !d.at("at").is_number())
            throw ScenarioError("script line " + std::to_string(i + 1) + ": 'at' must be a number");
        const std::string type = d.at("type").get<std::string>();
        if (type == "End") end_ = d.value("at", 0.0);
        if (type == "Steer" && (!d.contains("route") || !d.at("route").is_array() || d.at("route").empty()))
            throw ScenarioError("script line " + std::to_string(i + 1) + ": Steer needs a non-empty route");
        if (type == "Push" && (!d.contains("toward") || !d.contains("for")))
            throw ScenarioError("script line " + std::to_string(i + 1) + ": Push needs toward and for");
        if (type != "End" && type != "Steer" && type != "Push") {
            json probe = d;
            probe.erase("at");
            probe.erase("on_enter");
            try {
                wire::parse_inbound(probe);
            } catch (const wire::WireError& e) {
                throw ScenarioError("script line " + std::to_string(i + 1) + ": " + e.what());
            }
        }
    }
}

void ScriptRunner::before_tick(Session& s) {
    const auto& ts = s.ts();
    const double t = s.time();
    const auto here = region_at(ts, s.robot().x);
    auto release = [&] {
        s.submit(wire::Inbound{wire::SetVelocity{0.0, 0.0}, std::nullopt});
        active_.reset();
    };

    if (active_) {
        if (active_->until && t >= *active_->until) {
            release();
        } else {
            while (active_->next < active_->route.size() && here && *here == active_->route[active_->next] && !active_->until)
                ++active_->next;
            if (active_->next >= active_->route.size()) {
                release();
            } else {
                const Vec2 goal = centroid(ts.region(active_->route[active_->next]).shape);
                const Vec2 d = goal - s.robot().x;
                const double n = d.norm();
                const Vec2 u = n > 1e-9 ? (active_->speed / n) * d : Vec2{};
                s.submit(wire::Inbound{wire::SetVelocity{u.x, u.y}, std::nullopt});
            }
        }
        if (active_) return;
    }

    while (cursor_ < directives_.size() && !active_) {
        const json& d = directives_[cursor_];
        if (t + 1e-9 < d.value("at", 0.0)) return;
        if (d.contains("on_enter")) {
            const auto want = ts.find(d.at("on_enter").get<std::string>());
            if (!want) throw ScenarioError("script: unknown region " + d.at("on_enter").dump());
            if (!here || *here != *want) return;
        }
        ++cursor_;
        const std::string type = d.at("type").get<std::string>();
        if (type == "End") return;
        if (type == "Steer" || type == "Push") {
            Active a;
            a.speed = d.value("speed", s.mix_params().u_h_max);
            if (type == "Steer") {
                for (const auto& r : d.at("route")) a.route.push_back(ts.index_of(r.get<std::string>()));
            } else {
                a.route.push_back(ts.index_of(d.at("toward").get<std::string>()));
                a.until = t + d.at("for").get<double>();
            }
            active_ = std::move(a);
            before_tick(s);
            return;
        }
        json msg = d;
        msg.erase("at");
        msg.erase("on_enter");
        s.submit(wire::parse_inbound(msg));
    }
}

bool ScriptRunner::finished(const Session& s) const { return s.time() + 1e-9 >= end_; }

std::vector<json> read_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open script " + path);
    std::vector<json> out;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw ScenarioError("script line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

void run_script(Session& s, const std::vector<json>& script, double max_time) {
    ScriptRunner runner(script);
    while (!runner.finished(s) && s.time() + 1e-9 < max_time) {
        runner.before_tick(s);
        s.tick();
    }
    s.event_log().flush();
}

}  // namespace mixplan

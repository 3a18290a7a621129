#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixplan/session.hpp"

namespace mixplan {

/// Scripted operator for headless runs. One JSON object per directive:
///   {"at": t, "type": "SetVelocity"|"AssignTempTask"|"EditModel"|"Pause"|"Resume", ...}
///       inbound message submitted once (fields as on the wire);
///   {"at": t, "type": "Steer", "route": ["c4", "r8"], "speed": s}
///       closed-loop input toward each region's centroid in turn, released on arrival;
///   {"at": t, "type": "Push", "toward": "r5", "for": d, "speed": s}
///       input toward a region for d seconds regardless of arrival;
///   {"at": t, "type": "End"}
///       stops the run.
/// Optional "on_enter": region defers a directive until the robot is inside that region
/// at or after `at`. Directives fire in file order.
class ScriptRunner {
public:
    /// Throws ScenarioError on malformed directives.
    explicit ScriptRunner(std::vector<nlohmann::json> directives);

    /// Submits the inputs due before the next tick.
    void before_tick(Session& s);
    bool finished(const Session& s) const;
    double end_time() const { return end_; }

private:
    struct Active {
        std::vector<int> route;
        std::size_t next = 0;
        double speed = 1.0;
        std::optional<double> until;
    };

    std::vector<nlohmann::json> directives_;
    std::size_t cursor_ = 0;
    std::optional<Active> active_;
    double end_;
};

std::vector<nlohmann::json> read_script(const std::string& path);

/// Runs the script to its End directive (or `max_time`, whichever comes first).
void run_script(Session& s, const std::vector<nlohmann::json>& script, double max_time = 1e9);

}  // namespace mixplan

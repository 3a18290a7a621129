#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixplan/geometry.hpp"
#include "mixplan/workspace.hpp"

namespace mixplan {

struct MixParams {
    double d_s = 1.0;
    double eps_buffer = 0.5;
    double v_max = 1.0;
    double u_h_max = 1.0;
    double gain = 1.0;
    double dt = 0.05;
};

/// Parameters of a scenario. Throws ScenarioError unless all are positive and
/// dt·(v_max + u_h_max) ≤ d_s/4.
MixParams mix_params(const Scenario& s);
void validate(const MixParams& p);

/// e^{-1/s} for s > 0, else 0.
double rho(double s);

/// Blending gain from the distance d_t to the nearest trap region (+inf when none).
double kappa(double d_t, const MixParams& p);

/// Minimum distance from x to any of the shapes; +inf for an empty set.
double trap_distance(Vec2 x, const std::vector<Shape>& traps);

/// Proportional pursuit of `goal` clamped to v_max. Within d_s + ε of a trap, the component
/// pointing into that trap (against the outward normal at its nearest boundary point) is
/// removed; if a component still points into some nearby trap, the command is zero.
Vec2 nav_control(Vec2 x, Vec2 goal, const std::vector<Shape>& traps, const MixParams& p);
Vec2 nav_control(Vec2 x, int goal_region, const TransitionSystem& ts, const std::vector<Shape>& traps,
                 const MixParams& p);

/// u_r + κ·u_h.
Vec2 mix(Vec2 u_r, Vec2 u_h, double kappa);

struct RobotState {
    Vec2 x;
    double t = 0.0;
};

/// Explicit Euler step, clamped to the workspace box.
RobotState step(const RobotState& s, Vec2 u, double dt, const Box& bounds);

/// Zero-order hold of operator input with a staleness timeout.
class HumanInputHold {
public:
    static constexpr double kStaleAfter = 0.5;

    explicit HumanInputHold(double u_h_max) : u_h_max_(u_h_max) {}
    /// Stores the input, clamped to u_h_max in norm.
    void ingest(Vec2 u, double t);
    /// Held input at time t; zero once the last sample is older than kStaleAfter.
    Vec2 sample(double t) const;
    void clear() { last_t_.reset(); }

private:
    double u_h_max_;
    Vec2 u_;
    std::optional<double> last_t_;
};

struct TickRecord {
    double t = 0.0;
    Vec2 x;
    Vec2 u_r;
    Vec2 u_h;
    double kappa = 1.0;
    double d_t = 0.0;  // +inf without traps
    std::optional<std::string> current_region;
    int plan_cursor = 0;
};

/// One JSON object per tick; d_t is null when there are no traps.
nlohmann::json to_json(const TickRecord& r);

}  // namespace mixplan

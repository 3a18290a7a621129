#include "mixplan/mixer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixplan/error.hpp"

namespace mixplan {

void validate(const MixParams& p) {
    for (double v : {p.d_s, p.eps_buffer, p.v_max, p.u_h_max, p.gain, p.dt})
        if (!(v > 0.0) || !std::isfinite(v)) throw ScenarioError("controller parameters must be positive");
    if (p.dt * (p.v_max + p.u_h_max) > p.d_s / 4.0)
        throw ScenarioError("dt·(v_max + u_h_max) must not exceed d_s/4");
}

MixParams mix_params(const Scenario& s) {
    MixParams p{s.d_s, s.eps_buffer, s.controller.v_max, s.controller.u_h_max, s.controller.gain, s.controller.dt};
    validate(p);
    return p;
}

double rho(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

double kappa(double d_t, const MixParams& p) {
    if (std::isinf(d_t)) return 1.0;
    const double a = rho(d_t - p.d_s);
    const double b = rho(p.eps_buffer + p.d_s - d_t);
    if (a + b == 0.0) return d_t - p.d_s < p.eps_buffer / 2 ? 0.0 : 1.0;  // both underflowed
    return a / (a + b);
}

double trap_distance(Vec2 x, const std::vector<Shape>& traps) {
    double d = std::numeric_limits<double>::infinity();
    for (const Shape& s : traps) d = std::min(d, distance(s, x));
    return d;
}

Vec2 nav_control(Vec2 x, Vec2 goal, const std::vector<Shape>& traps, const MixParams& p) {
    Vec2 u = p.gain * (goal - x);
    const double n = u.norm();
    if (n > p.v_max) u = (p.v_max / n) * u;
    std::vector<Vec2> normals;
    for (const Shape& s : traps)
        if (distance(s, x) <= p.d_s + p.eps_buffer) normals.push_back(nearest_boundary(s, x).outward);
    for (Vec2 nrm : normals) {
        const double into = u.dot(nrm);
        if (into < 0.0) u = u - into * nrm;
    }
    const double tol = 1e-9 * (1.0 + p.v_max);
    for (Vec2 nrm : normals)
        if (u.dot(nrm) < -tol) return {};
    return u;
}

Vec2 nav_control(Vec2 x, int goal_region, const TransitionSystem& ts, const std::vector<Shape>& traps,
                 const MixParams& p) {
    return nav_control(x, centroid(ts.region(goal_region).shape), traps, p);
}

Vec2 mix(Vec2 u_r, Vec2 u_h, double k) { return u_r + k * u_h; }

RobotState step(const RobotState& s, Vec2 u, double dt, const Box& bounds) {
    return {bounds.clamp(s.x + dt * u), s.t + dt};
}

void HumanInputHold::ingest(Vec2 u, double t) {
    const double n = u.norm();
    u_ = n > u_h_max_ ? (u_h_max_ / n) * u : u;
    last_t_ = t;
}

Vec2 HumanInputHold::sample(double t) const {
    if (!last_t_ || t - *last_t_ > kStaleAfter) return {};
    return u_;
}

nlohmann::json to_json(const TickRecord& r) {
    using nlohmann::json;
    auto v = [](Vec2 a) { return json::array({a.x, a.y}); };
    return {{"t", r.t},
            {"x", v(r.x)},
            {"u_r", v(r.u_r)},
            {"u_h", v(r.u_h)},
            {"kappa", r.kappa},
            {"d_t", std::isinf(r.d_t) ? json(nullptr) : json(r.d_t)},
            {"current_region", r.current_region ? json(*r.current_region) : json(nullptr)},
            {"plan_cursor", r.plan_cursor}};
}

}  // namespace mixplan

#pragma once

#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "mixplan/error.hpp"
#include "mixplan/geometry.hpp"
#include "mixplan/workspace.hpp"

namespace mixplan::wire {

inline constexpr int kSchemaVersion = 1;

/// Rejection codes carried by Fault messages.
namespace code {
inline constexpr const char* kBadJson = "bad_json";
inline constexpr const char* kBadVersion = "unsupported_version";
inline constexpr const char* kUnknownType = "unknown_type";
inline constexpr const char* kMissingField = "missing_field";
inline constexpr const char* kBadValue = "bad_value";
inline constexpr const char* kUnknownRegion = "unknown_region";
inline constexpr const char* kInfeasible = "infeasible";
inline constexpr const char* kNoAcceptingRun = "no_accepting_run";
inline constexpr const char* kNoLift = "no_lift";
}  // namespace code

/// Malformed inbound message; `code()` is one of the codes above.
class WireError : public Error {
public:
    WireError(std::string code, const std::string& detail) : Error(detail), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct SetVelocity {
    double vx = 0.0;
    double vy = 0.0;
};
struct AssignTempTask {
    std::string pickup;
    std::string dropoff;
    double deadline_s = 0.0;
};
struct EditModel {
    ModelUpdate update;
};
struct Pause {};
struct Resume {};

using InboundBody = std::variant<SetVelocity, AssignTempTask, EditModel, Pause, Resume>;

struct Inbound {
    InboundBody body;
    std::optional<long long> id;  // client correlation id, echoed in Ack/Fault
};

struct StateTick {
    double t = 0.0;
    Vec2 x;
    double kappa = 1.0;
    std::optional<double> d_t;  // absent without trap regions
    std::optional<std::string> region;
    std::vector<std::string> plan;
    int cursor = 0;
    double beta = 0.0;
    std::string mode;
};
struct PlanChanged {
    nlohmann::json plan;
    std::string reason;
};
struct BetaUpdated {
    double beta = 0.0;
    bool converged = false;
    nlohmann::json history;
};
struct TaskStatus {
    int id = 0;
    std::string status;  // pending | picked_up | fulfilled | rejected
    double predicted_delay = 0.0;
};
struct Fault {
    std::string code;
    std::string detail;
    std::optional<long long> ref;
};
struct Ack {
    std::string of;
    std::optional<long long> ref;
};

using Outbound = std::variant<StateTick, PlanChanged, BetaUpdated, TaskStatus, Fault, Ack>;

std::string type_name(const InboundBody& m);
std::string type_name(const Outbound& m);

nlohmann::json to_json(const Inbound& m);
nlohmann::json to_json(const Outbound& m);

/// Throws WireError. Unknown fields are ignored.
Inbound parse_inbound(const nlohmann::json& j);
Inbound parse_inbound(const std::string& text);
inline Inbound parse_inbound(const char* text) { return parse_inbound(std::string(text)); }
Outbound parse_outbound(const nlohmann::json& j);

}  // namespace mixplan::wire

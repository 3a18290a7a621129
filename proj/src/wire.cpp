#include "mixplan/wire.hpp"

#include <cmath>

namespace mixplan::wire {

using nlohmann::json;

namespace {

template <class... F>
struct overload : F... {
    using F::operator()...;
};
template <class... F>
overload(F...) -> overload<F...>;

const json& field(const json& j, const char* key) {
    if (!j.contains(key)) throw WireError(code::kMissingField, std::string("missing field '") + key + "'");
    return j.at(key);
}

double number(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_number()) throw WireError(code::kBadValue, std::string("field '") + key + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw WireError(code::kBadValue, std::string("field '") + key + "' must be finite");
    return d;
}

std::string text(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_string()) throw WireError(code::kBadValue, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::optional<long long> ref_of(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_number_integer()) throw WireError(code::kBadValue, std::string("field '") + key + "' must be an integer");
    return j.at(key).get<long long>();
}

void check_header(const json& j) {
    if (!j.is_object()) throw WireError(code::kBadJson, "message must be a JSON object");
    if (j.contains("v")) {
        if (!j.at("v").is_number_integer() || j.at("v").get<int>() != kSchemaVersion)
            throw WireError(code::kBadVersion, "unsupported schema version " + j.at("v").dump());
    }
}

json vec(Vec2 v) { return json::array({v.x, v.y}); }

Vec2 vec_from(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw WireError(code::kBadValue, std::string("field '") + key + "' must be [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

std::string type_name(const InboundBody& m) {
    return std::visit(overload{[](const SetVelocity&) { return "SetVelocity"; },
                               [](const AssignTempTask&) { return "AssignTempTask"; },
                               [](const EditModel&) { return "EditModel"; }, [](const Pause&) { return "Pause"; },
                               [](const Resume&) { return "Resume"; }},
                      m);
}

std::string type_name(const Outbound& m) {
    return std::visit(overload{[](const StateTick&) { return "StateTick"; },
                               [](const PlanChanged&) { return "PlanChanged"; },
                               [](const BetaUpdated&) { return "BetaUpdated"; },
                               [](const TaskStatus&) { return "TaskStatus"; }, [](const Fault&) { return "Fault"; },
                               [](const Ack&) { return "Ack"; }},
                      m);
}

json to_json(const Inbound& m) {
    json j{{"v", kSchemaVersion}, {"type", type_name(m.body)}};
    if (m.id) j["id"] = *m.id;
    std::visit(overload{[&](const SetVelocity& s) {
                            j["vx"] = s.vx;
                            j["vy"] = s.vy;
                        },
                        [&](const AssignTempTask& a) {
                            j["pickup"] = a.pickup;
                            j["dropoff"] = a.dropoff;
                            j["deadline_s"] = a.deadline_s;
                        },
                        [&](const EditModel& e) { j["update"] = mixplan::to_json(e.update); },
                        [](const Pause&) {}, [](const Resume&) {}},
               m.body);
    return j;
}

Inbound parse_inbound(const json& j) {
    check_header(j);
    const std::string type = text(j, "type");
    Inbound m;
    m.id = ref_of(j, "id");
    if (type == "SetVelocity") {
        m.body = SetVelocity{number(j, "vx"), number(j, "vy")};
    } else if (type == "AssignTempTask") {
        m.body = AssignTempTask{text(j, "pickup"), text(j, "dropoff"), number(j, "deadline_s")};
    } else if (type == "EditModel") {
        try {
            m.body = EditModel{model_update_from_json(field(j, "update"))};
        } catch (const WireError&) {
            throw;
        } catch (const std::exception& e) {
            throw WireError(code::kBadValue, e.what());
        }
    } else if (type == "Pause") {
        m.body = Pause{};
    } else if (type == "Resume") {
        m.body = Resume{};
    } else {
        throw WireError(code::kUnknownType, "unknown inbound type '" + type + "'");
    }
    return m;
}

Inbound parse_inbound(const std::string& s) {
    json j;
    try {
        j = json::parse(s);
    } catch (const json::parse_error& e) {
        throw WireError(code::kBadJson, e.what());
    }
    return parse_inbound(j);
}

json to_json(const Outbound& m) {
    json j{{"v", kSchemaVersion}, {"type", type_name(m)}};
    std::visit(overload{[&](const StateTick& s) {
                            j["t"] = s.t;
                            j["x"] = vec(s.x);
                            j["kappa"] = s.kappa;
                            j["d_t"] = s.d_t ? json(*s.d_t) : json(nullptr);
                            j["region"] = s.region ? json(*s.region) : json(nullptr);
                            j["plan"] = s.plan;
                            j["cursor"] = s.cursor;
                            j["beta"] = s.beta;
                            j["mode"] = s.mode;
                        },
                        [&](const PlanChanged& p) {
                            j["plan"] = p.plan;
                            j["reason"] = p.reason;
                        },
                        [&](const BetaUpdated& b) {
                            j["beta"] = b.beta;
                            j["converged"] = b.converged;
                            j["history"] = b.history;
                        },
                        [&](const TaskStatus& t) {
                            j["id"] = t.id;
                            j["status"] = t.status;
                            j["predicted_delay"] = t.predicted_delay;
                        },
                        [&](const Fault& f) {
                            j["code"] = f.code;
                            j["detail"] = f.detail;
                            if (f.ref) j["ref"] = *f.ref;
                        },
                        [&](const Ack& a) {
                            j["of"] = a.of;
                            if (a.ref) j["ref"] = *a.ref;
                        }},
               m);
    return j;
}

Outbound parse_outbound(const json& j) {
    check_header(j);
    const std::string type = text(j, "type");
    if (type == "StateTick") {
        StateTick s;
        s.t = number(j, "t");
        s.x = vec_from(j, "x");
        s.kappa = number(j, "kappa");
        if (j.contains("d_t") && !j.at("d_t").is_null()) s.d_t = number(j, "d_t");
        if (j.contains("region") && !j.at("region").is_null()) s.region = text(j, "region");
        s.plan = field(j, "plan").get<std::vector<std::string>>();
        s.cursor = field(j, "cursor").get<int>();
        s.beta = number(j, "beta");
        s.mode = text(j, "mode");
        return s;
    }
    if (type == "PlanChanged") return PlanChanged{field(j, "plan"), text(j, "reason")};
    if (type == "BetaUpdated") return BetaUpdated{number(j, "beta"), field(j, "converged").get<bool>(), field(j, "history")};
    if (type == "TaskStatus")
        return TaskStatus{field(j, "id").get<int>(), text(j, "status"), number(j, "predicted_delay")};
    if (type == "Fault") return Fault{text(j, "code"), text(j, "detail"), ref_of(j, "ref")};
    if (type == "Ack") return Ack{text(j, "of"), ref_of(j, "ref")};
    throw WireError(code::kUnknownType, "unknown outbound type '" + type + "'");
}

}  // namespace mixplan::wire

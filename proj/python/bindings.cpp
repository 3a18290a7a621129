#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mixplan/error.hpp"
#include "mixplan/irl.hpp"
#include "mixplan/ltl.hpp"
#include "mixplan/nba.hpp"
#include "mixplan/planner.hpp"
#include "mixplan/product.hpp"
#include "mixplan/script.hpp"
#include "mixplan/session.hpp"

namespace py = pybind11;
using namespace mixplan;
using nlohmann::json;

namespace {

std::vector<int> indices(const TransitionSystem& ts, const std::vector<std::string>& ids) {
    std::vector<int> out;
    for (const auto& id : ids) out.push_back(ts.index_of(id));
    return out;
}

Plan base_plan(const ProductAutomaton& pa, double beta, double gamma, const std::vector<std::string>& history) {
    if (history.empty()) return synthesize(pa, beta, gamma);
    const auto belief = reachable_states(pa, indices(pa.ts(), history));
    if (belief.empty()) throw NoLift("history is not consistent with the hard task");
    return revise(pa, belief, beta, gamma);
}

std::string nba(const std::string& formula, const std::vector<std::string>& ap) {
    return to_nba(ltl::normalize(ltl::parse(formula)), ap)->to_json().dump();
}

std::string plan(const std::string& scenario, std::optional<double> beta, std::optional<double> gamma,
                 const std::vector<std::string>& history) {
    const Scenario sc = load_scenario(json::parse(scenario));
    const auto pa = make_product(sc);
    return to_json(*pa, base_plan(*pa, beta.value_or(sc.beta0), gamma.value_or(sc.gamma), history)).dump();
}

std::string temp_task(const std::string& scenario, const std::string& pickup, const std::string& dropoff,
                      double deadline, std::optional<double> beta, std::optional<double> gamma,
                      const std::vector<std::string>& history) {
    const Scenario sc = load_scenario(json::parse(scenario));
    const auto pa = make_product(sc);
    const Plan base = base_plan(*pa, beta.value_or(sc.beta0), gamma.value_or(sc.gamma), history);
    const TempTask task{sc.ts.index_of(pickup), sc.ts.index_of(dropoff), deadline, 0.0};
    const Insertion ins = insert_temp_task(*pa, base, task, sc.controller.v_max);
    return json{{"plan", to_json(*pa, ins.plan)},
                {"k_s", ins.k_s},
                {"k_g", ins.k_g},
                {"delta_cost", ins.delta_cost.value()},
                {"delay", ins.delay},
                {"stage", ins.stage}}
        .dump();
}

std::string irl_learn(const std::string& scenario, const std::vector<std::string>& regions, double beta0) {
    const Scenario sc = load_scenario(json::parse(scenario));
    const auto pa = make_product(sc);
    const auto demo = lift_trace(*pa, indices(sc.ts, regions));
    return to_json(learn_beta(*pa, demo, beta0, sc.irl)).dump();
}

py::dict sim_run(const std::string& scenario, const std::vector<std::string>& script, std::uint64_t seed,
                 double duration) {
    std::vector<json> directives;
    for (const auto& l : script) directives.push_back(json::parse(l));
    std::vector<std::string> ticks;
    std::vector<std::string> events;
    std::vector<std::string> regions;
    double t = 0.0, beta = 0.0;
    {
        py::gil_scoped_release release;
        Session s(load_scenario(json::parse(scenario)), seed);
        s.on_tick([&](const TickRecord& r) { ticks.push_back(to_json(r).dump()); });
        run_script(s, directives, duration);
        events = s.event_log().lines();
        for (int r : s.history().regions) regions.push_back(s.ts().region(r).id);
        t = s.time();
        beta = s.beta();
    }
    py::dict out;
    out["t"] = t;
    out["beta"] = beta;
    out["regions"] = regions;
    out["events"] = events;
    out["ticks"] = ticks;
    return out;
}

py::dict session_replay(const std::vector<std::string>& lines) {
    std::vector<std::string> events, ticks;
    bool identical = false;
    double t = 0.0, beta = 0.0;
    {
        py::gil_scoped_release release;
        const ReplayResult r = replay_lines(lines);
        events = r.event_log;
        ticks = r.tick_log;
        identical = r.identical;
        t = r.session->time();
        beta = r.session->beta();
    }
    py::dict out;
    out["identical"] = identical;
    out["t"] = t;
    out["beta"] = beta;
    out["events"] = events;
    out["ticks"] = ticks;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Mixed-initiative LTL planning core";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<ScenarioError>(m, "ScenarioError", base.ptr());
    py::register_exception<UnknownId>(m, "UnknownId", base.ptr());
    py::register_exception<NoAcceptingRun>(m, "NoAcceptingRun", base.ptr());
    py::register_exception<NoFeasibleInsertion>(m, "NoFeasibleInsertion", base.ptr());
    py::register_exception<NoLift>(m, "NoLift", base.ptr());
    py::register_exception<NoPath>(m, "NoPath", base.ptr());

    m.def("nba", &nba, py::arg("formula"), py::arg("ap") = std::vector<std::string>{});
    m.def("plan", &plan, py::arg("scenario"), py::arg("beta") = py::none(), py::arg("gamma") = py::none(),
          py::arg("history") = std::vector<std::string>{});
    m.def("temp_task", &temp_task, py::arg("scenario"), py::arg("pickup"), py::arg("dropoff"), py::arg("deadline"),
          py::arg("beta") = py::none(), py::arg("gamma") = py::none(),
          py::arg("history") = std::vector<std::string>{});
    m.def("irl_learn", &irl_learn, py::arg("scenario"), py::arg("regions"), py::arg("beta0"));
    m.def("sim_run", &sim_run, py::arg("scenario"), py::arg("script"), py::arg("seed") = 0,
          py::arg("duration") = 1e9);
    m.def("session_replay", &session_replay, py::arg("lines"));
}

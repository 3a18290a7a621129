#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mixplan/irl.hpp"
#include "mixplan/ltl.hpp"
#include "mixplan/nba.hpp"
#include "mixplan/planner.hpp"
#include "mixplan/product.hpp"
#include "mixplan/script.hpp"
#include "mixplan/service.hpp"
#include "mixplan/session.hpp"

using namespace mixplan;
using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<int> region_indices(const TransitionSystem& ts, const std::vector<std::string>& ids) {
    std::vector<int> out;
    for (const auto& id : ids) out.push_back(ts.index_of(id));
    return out;
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError(path + ": " + e.what());
    }
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    if (!out) throw ScenarioError("cannot write " + path);
    for (const auto& l : lines) out << l << '\n';
}

std::string out_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("MIXPLAN_LOG_DIR")) return env;
    return ".";
}

Plan plan_from(const ProductAutomaton& pa, double beta, double gamma, const std::string& history) {
    if (history.empty()) return synthesize(pa, beta, gamma);
    const auto belief = reachable_states(pa, region_indices(pa.ts(), split(history)));
    if (belief.empty()) throw NoLift("history is not consistent with the hard task");
    return revise(pa, belief, beta, gamma);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixed-initiative LTL planning: automata, plans, IRL, simulation and service"};
    app.require_subcommand(1);

    std::string formula, ap_list;
    auto* nba = app.add_subcommand("nba", "Translate an LTL formula into a Büchi automaton (JSON)");
    nba->add_option("formula", formula, "formula text")->required();
    nba->add_option("--ap", ap_list, "comma-separated proposition order");

    std::string scenario_path, history, pickup, dropoff;
    double beta = -1.0, gamma = -1.0, deadline = 0.0;
    auto* product = app.add_subcommand("product", "Dump the reachable product graph (JSON)");
    product->add_option("--scenario", scenario_path, "scenario file")->required();

    auto* plan = app.add_subcommand("plan", "Plan synthesis and revision");
    plan->require_subcommand(1);
    auto add_plan_opts = [&](CLI::App* c) {
        c->add_option("--scenario", scenario_path, "scenario file")->required();
        c->add_option("--beta", beta, "soft-task weight (default: scenario beta0)")->check(CLI::NonNegativeNumber);
        c->add_option("--gamma", gamma, "suffix weight (default: scenario gamma)")->check(CLI::NonNegativeNumber);
    };
    auto* synth = plan->add_subcommand("synth", "Optimal plan from the initial region");
    add_plan_opts(synth);
    auto* revise_cmd = plan->add_subcommand("revise", "Optimal plan from the states consistent with a region history");
    add_plan_opts(revise_cmd);
    revise_cmd->add_option("--history", history, "comma-separated visited regions")->required();
    auto* temp = plan->add_subcommand("temp", "Insert a pick-up/drop-off task with deadline");
    add_plan_opts(temp);
    temp->add_option("--history", history, "comma-separated visited regions");
    temp->add_option("--pickup", pickup, "pick-up region")->required();
    temp->add_option("--dropoff", dropoff, "drop-off region")->required();
    temp->add_option("--deadline", deadline, "seconds from now")->required()->check(CLI::NonNegativeNumber);

    std::string trace_path, csv_path;
    double beta0 = 0.0;
    auto* irl = app.add_subcommand("irl", "Inverse reinforcement learning of beta");
    irl->require_subcommand(1);
    auto* learn = irl->add_subcommand("learn", "Learn beta from a demonstrated region trace");
    learn->add_option("--scenario", scenario_path, "scenario file")->required();
    learn->add_option("--trace", trace_path, "JSON trace: {\"regions\": [...]} or a list of region ids")->required();
    learn->add_option("--beta0", beta0, "initial beta")->required()->check(CLI::NonNegativeNumber);
    learn->add_option("--out", csv_path, "history CSV path (default: stdout)");

    std::string script_path, dir, events_path, ticks_path;
    std::uint64_t seed = 0;
    double duration = 1e9;
    auto* sim = app.add_subcommand("sim", "Headless simulation");
    sim->require_subcommand(1);
    auto* sim_run = sim->add_subcommand("run", "Run a scripted session and write its event and tick logs");
    sim_run->add_option("--scenario", scenario_path, "scenario file")->required();
    sim_run->add_option("--script", script_path, "operator script (JSON lines)")->required();
    sim_run->add_option("--seed", seed, "session seed");
    sim_run->add_option("--duration", duration, "stop after this many simulated seconds")->check(CLI::PositiveNumber);
    sim_run->add_option("--out-dir", dir, "output directory (default: $MIXPLAN_LOG_DIR or .)");
    sim_run->add_option("--events", events_path, "event log path (default: <out-dir>/events.jsonl)");
    sim_run->add_option("--ticks", ticks_path, "tick log path (default: <out-dir>/ticks.jsonl)");

    std::string log_path;
    bool strict = false;
    auto* session = app.add_subcommand("session", "Session logs");
    session->require_subcommand(1);
    auto* replay_cmd = session->add_subcommand("replay", "Replay an event log deterministically");
    replay_cmd->add_option("log", log_path, "event log (JSON lines)")->required();
    replay_cmd->add_option("--ticks", ticks_path, "write the regenerated tick log here");
    replay_cmd->add_option("--events", events_path, "write the regenerated event log here");
    replay_cmd->add_flag("--strict", strict, "exit 1 unless the regenerated log is identical");

    ServeOptions serve_opt;
    if (const char* env = std::getenv("MIXPLAN_LOG_DIR")) serve_opt.log_dir = env;
    auto* serve = app.add_subcommand("serve", "WebSocket service");
    serve->add_option("--scenario", scenario_path, "scenario file")->required();
    serve->add_option("--port", serve_opt.port, "TCP port");
    serve->add_option("--address", serve_opt.address, "bind address");
    serve->add_option("--seed", serve_opt.seed, "session seed");
    serve->add_option("--tick-hz", serve_opt.tick_hz, "StateTick broadcast rate")->check(CLI::PositiveNumber);
    serve->add_option("--time-scale", serve_opt.time_scale, "simulated seconds per wall second")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*nba) {
            const auto phi = ltl::parse(formula);
            std::cout << to_nba(ltl::normalize(phi), split(ap_list))->to_json().dump(1) << '\n';
        } else if (*product) {
            std::cout << reachable_graph_json(*make_product(load_scenario_file(scenario_path))).dump(1) << '\n';
        } else if (*plan) {
            const Scenario sc = load_scenario_file(scenario_path);
            const auto pa = make_product(sc);
            const double b = beta >= 0.0 ? beta : sc.beta0;
            const double g = gamma >= 0.0 ? gamma : sc.gamma;
            if (*temp) {
                const Plan base = plan_from(*pa, b, g, history);
                TempTask task{sc.ts.index_of(pickup), sc.ts.index_of(dropoff), deadline, 0.0};
                const Insertion ins = insert_temp_task(*pa, base, task, sc.controller.v_max);
                json out = {{"plan", to_json(*pa, ins.plan)},
                            {"k_s", ins.k_s},
                            {"k_g", ins.k_g},
                            {"delta_cost", ins.delta_cost.value()},
                            {"delay", ins.delay},
                            {"stage", ins.stage}};
                std::cout << out.dump(1) << '\n';
            } else {
                std::cout << to_json(*pa, plan_from(*pa, b, g, *revise_cmd ? history : "")).dump(1) << '\n';
            }
        } else if (*learn) {
            const Scenario sc = load_scenario_file(scenario_path);
            const auto pa = make_product(sc);
            const json t = read_json(trace_path);
            const json& ids = t.is_object() ? t.at("regions") : t;
            const auto demo = lift_trace(*pa, region_indices(sc.ts, ids.get<std::vector<std::string>>()));
            const BetaEstimate est = learn_beta(*pa, demo, beta0, sc.irl);
            if (csv_path.empty()) {
                std::cout << history_csv(est);
            } else {
                std::ofstream(csv_path) << history_csv(est);
            }
            std::cerr << "beta=" << est.beta << " converged=" << (est.converged ? "true" : "false")
                      << " iterations=" << est.history.size() << '\n';
        } else if (*sim_run) {
            const Scenario sc = load_scenario_file(scenario_path);
            const auto script = read_script(script_path);
            const std::string d = out_dir(dir);
            if (events_path.empty()) events_path = d + "/events.jsonl";
            if (ticks_path.empty()) ticks_path = d + "/ticks.jsonl";
            Session s(sc, seed);
            std::vector<std::string> ticks;
            s.on_tick([&](const TickRecord& r) { ticks.push_back(to_json(r).dump()); });
            run_script(s, script, duration);
            write_lines(events_path, s.event_log().lines());
            write_lines(ticks_path, ticks);
            std::vector<std::string> regions;
            for (int r : s.history().regions) regions.push_back(s.ts().region(r).id);
            json out = {{"t", s.time()},
                        {"ticks", ticks.size()},
                        {"beta", s.beta()},
                        {"mode", to_string(s.mode())},
                        {"regions", regions},
                        {"events", events_path},
                        {"tick_log", ticks_path}};
            std::cout << out.dump() << '\n';
        } else if (*replay_cmd) {
            std::ifstream in(log_path);
            if (!in) throw ScenarioError("cannot open " + log_path);
            const ReplayResult r = replay(in);
            if (!ticks_path.empty()) write_lines(ticks_path, r.tick_log);
            if (!events_path.empty()) write_lines(events_path, r.event_log);
            json out = {{"identical", r.identical},
                        {"ticks", r.tick_log.size()},
                        {"t", r.session->time()},
                        {"beta", r.session->beta()}};
            std::cout << out.dump() << '\n';
            if (strict && !r.identical) return 1;
        } else if (*serve) {
            Server server(load_scenario_file(scenario_path), serve_opt);
            std::cerr << "listening on ws://" << serve_opt.address << ":" << server.port() << "/\n";
            server.run();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

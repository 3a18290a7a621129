#pragma once

#include <cstdint>
#include <functional>
#include <future>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixplan/irl.hpp"
#include "mixplan/mixer.hpp"
#include "mixplan/planner.hpp"
#include "mixplan/product.hpp"
#include "mixplan/wire.hpp"
#include "mixplan/workspace.hpp"

namespace mixplan {

enum class Mode { Autonomous, Guided, Repairing };
std::string to_string(Mode m);

struct TaskRecord {
    int id = 0;
    TempTask task;
    std::string status;  // pending | picked_up | fulfilled | rejected
    double predicted_delay = 0.0;
    std::optional<double> fulfilled_at;
};

/// Region history of the whole session plus the most recent operator-guided span.
struct RegionHistory {
    std::vector<int> regions;
    std::vector<double> times;
};

inline constexpr const char* kEventLogSchema = "mixplan.session";
inline constexpr int kEventLogVersion = 1;

/// Append-only session event log (JSON lines). Consecutive ticks are coalesced into one
/// {"type":"Tick","count":n} record; derived records carry "derived": true.
class EventLog {
public:
    void append(nlohmann::json record);
    void tick();
    /// Closes the pending Tick record.
    void flush();
    /// Lines written so far (pending ticks included).
    std::vector<std::string> lines() const;
    void write(std::ostream& os) const;

private:
    std::vector<std::string> lines_;
    long long pending_ticks_ = 0;
};

/// One deterministic Alg. 2 loop: simulation ticks, operator input, model updates,
/// temporary tasks, guided-segment β learning and plan revision. Inbound messages may be
/// submitted from any thread; they are applied in order at the next tick boundary.
class Session {
public:
    explicit Session(Scenario scenario, std::uint64_t seed = 0);
    ~Session();
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    /// Queues an inbound message for the next tick boundary.
    void submit(wire::Inbound msg);
    void tick();
    void run(int ticks);

    double time() const { return robot_.t; }
    long long tick_count() const { return ticks_; }
    const RobotState& robot() const { return robot_; }
    Mode mode() const { return mode_; }
    bool paused() const { return paused_; }
    double beta() const { return beta_; }
    const Plan& plan() const { return plan_; }
    const ProductAutomaton& product() const { return *pa_; }
    const Scenario& scenario() const { return scenario_; }
    const TransitionSystem& ts() const { return pa_->ts(); }
    const std::vector<int>& belief() const { return belief_; }
    const TrapRegions& traps() const { return traps_; }
    const RegionHistory& history() const { return history_; }
    const std::vector<TaskRecord>& tasks() const { return tasks_; }
    const std::vector<BetaEstimate>& learning() const { return learning_; }
    const MixParams& mix_params() const { return params_; }
    std::uint64_t seed() const { return seed_; }

    /// Record of the last completed tick.
    const std::optional<TickRecord>& last_tick() const { return last_tick_; }
    wire::StateTick state_tick() const;

    /// Tick log sink, called once per simulated tick.
    void on_tick(std::function<void(const TickRecord&)> sink) { tick_sink_ = std::move(sink); }
    /// Outbound notifications (PlanChanged, BetaUpdated, TaskStatus, Fault, Ack) produced
    /// since the last call.
    std::vector<wire::Outbound> drain_outbox();

    EventLog& event_log() { return log_; }
    const EventLog& event_log() const { return log_; }

    /// Operator input below this norm counts as released.
    double dead_zone() const { return 0.05 * params_.u_h_max; }

private:
    struct PendingLearning;

    void apply(const wire::Inbound& m);
    void apply_model_update(const ModelUpdate& u, std::optional<long long> ref);
    void apply_temp_task(const wire::AssignTempTask& a, std::optional<long long> ref);
    void enter_region(int region);
    void advance_plan(int region);
    void replan(const std::string& reason);
    void reinsert_tasks();
    void update_tasks(int region);
    void refresh_traps();
    void close_guided_segment();
    void finish_learning();
    void set_plan(Plan p, const std::string& reason);
    void fault(const std::string& code, const std::string& detail, std::optional<long long> ref = {});
    void emit(wire::Outbound m);
    void derived(nlohmann::json record);

    Scenario scenario_;
    std::uint64_t seed_;
    MixParams params_;
    std::shared_ptr<ProductAutomaton> pa_;
    double beta_;
    Plan plan_;
    Mode mode_ = Mode::Autonomous;
    bool paused_ = false;
    RobotState robot_;
    HumanInputHold hold_;
    std::vector<int> belief_;
    TrapRegions traps_;
    std::vector<Shape> trap_shapes_;
    RegionHistory history_;
    int last_region_;
    std::optional<std::size_t> guided_start_;
    double released_since_ = 0.0;
    std::vector<TaskRecord> tasks_;
    std::vector<BetaEstimate> learning_;
    std::unique_ptr<PendingLearning> pending_;
    long long ticks_ = 0;
    std::optional<TickRecord> last_tick_;

    std::mutex inbox_mutex_;
    std::vector<wire::Inbound> inbox_;
    std::vector<wire::Outbound> outbox_;
    std::function<void(const TickRecord&)> tick_sink_;
    EventLog log_;
};

/// Result of replaying a recorded event log.
struct ReplayResult {
    std::vector<std::string> event_log;  // as regenerated by the replay
    std::vector<std::string> tick_log;   // one JSON line per tick
    std::unique_ptr<Session> session;    // final state
    bool identical = false;              // regenerated event log == input
};

/// Rebuilds a session from its event log. Throws ScenarioError on malformed logs.
ReplayResult replay(std::istream& log);
ReplayResult replay_lines(const std::vector<std::string>& lines);

/// Start record of a new log.
nlohmann::json start_record(const Scenario& s, std::uint64_t seed);

}  // namespace mixplan

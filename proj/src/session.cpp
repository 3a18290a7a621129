#include "mixplan/session.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "mixplan/error.hpp"

namespace mixplan {

using nlohmann::json;

std::string to_string(Mode m) {
    switch (m) {
        case Mode::Autonomous: return "autonomous";
        case Mode::Guided: return "guided";
        case Mode::Repairing: return "repairing";
    }
    return "autonomous";
}

void EventLog::append(json record) {
    flush();
    lines_.push_back(record.dump());
}

void EventLog::tick() { ++pending_ticks_; }

void EventLog::flush() {
    if (pending_ticks_ == 0) return;
    lines_.push_back(json{{"type", "Tick"}, {"count", pending_ticks_}}.dump());
    pending_ticks_ = 0;
}

std::vector<std::string> EventLog::lines() const {
    auto out = lines_;
    if (pending_ticks_ > 0) out.push_back(json{{"type", "Tick"}, {"count", pending_ticks_}}.dump());
    return out;
}

void EventLog::write(std::ostream& os) const {
    for (const auto& l : lines()) os << l << '\n';
}

json start_record(const Scenario& s, std::uint64_t seed) {
    return {{"v", kEventLogVersion}, {"type", "Start"}, {"schema", kEventLogSchema}, {"seed", seed}, {"scenario", to_json(s)}};
}

struct Session::PendingLearning {
    std::future<BetaEstimate> result;
};

Session::Session(Scenario scenario, std::uint64_t seed)
    : scenario_(std::move(scenario)),
      seed_(seed),
      params_(mixplan::mix_params(scenario_)),
      pa_(make_product(scenario_)),
      beta_(scenario_.beta0),
      hold_(params_.u_h_max),
      last_region_(scenario_.ts.initial()) {
    log_.append(start_record(scenario_, seed_));
    const int init = scenario_.ts.initial();
    robot_.x = centroid(scenario_.ts.region(init).shape);
    history_.regions.push_back(init);
    history_.times.push_back(0.0);
    belief_ = reachable_states(*pa_, {init});
    refresh_traps();
    replan("initial");
}

Session::~Session() {
    if (pending_ && pending_->result.valid()) pending_->result.wait();
}

void Session::submit(wire::Inbound msg) {
    std::lock_guard lock(inbox_mutex_);
    inbox_.push_back(std::move(msg));
}

std::vector<wire::Outbound> Session::drain_outbox() {
    std::vector<wire::Outbound> out;
    out.swap(outbox_);
    return out;
}

void Session::emit(wire::Outbound m) { outbox_.push_back(std::move(m)); }

void Session::derived(json record) {
    record["derived"] = true;
    record["tick"] = ticks_;
    record["t"] = robot_.t;
    log_.append(std::move(record));
}

void Session::fault(const std::string& code, const std::string& detail, std::optional<long long> ref) {
    emit(wire::Fault{code, detail, ref});
    derived({{"type", "Fault"}, {"code", code}, {"detail", detail}});
}

void Session::run(int ticks) {
    for (int i = 0; i < ticks; ++i) tick();
}

void Session::tick() {
    finish_learning();
    std::vector<wire::Inbound> inbox;
    {
        std::lock_guard lock(inbox_mutex_);
        inbox.swap(inbox_);
    }
    for (const auto& m : inbox) apply(m);

    if (paused_) {
        log_.tick();
        ++ticks_;
        return;
    }

    const double t = robot_.t;
    const Vec2 u_h = hold_.sample(t);
    if (mode_ != Mode::Repairing) {
        if (u_h.norm() > dead_zone()) {
            released_since_ = -1.0;
            if (mode_ == Mode::Autonomous) {
                mode_ = Mode::Guided;
                guided_start_ = history_.regions.size() - 1;
            }
        } else if (mode_ == Mode::Guided) {
            if (released_since_ < 0.0) released_since_ = t;
            if (t - released_since_ >= HumanInputHold::kStaleAfter - 1e-9) close_guided_segment();
        }
    }

    TickRecord rec;
    rec.t = t;
    rec.x = robot_.x;
    rec.d_t = trap_distance(robot_.x, trap_shapes_);
    rec.kappa = kappa(rec.d_t, params_);
    if (mode_ != Mode::Repairing) rec.u_r = nav_control(robot_.x, plan_.next_region(*pa_), pa_->ts(), trap_shapes_, params_);
    rec.u_h = u_h;
    if (const auto r = region_at(pa_->ts(), robot_.x)) rec.current_region = pa_->ts().region(*r).id;
    rec.plan_cursor = plan_.cursor;

    robot_ = step(robot_, mix(rec.u_r, rec.u_h, rec.kappa), params_.dt, pa_->ts().bounds());

    if (const auto r = region_at(pa_->ts(), robot_.x)) {
        if (*r != last_region_) {
            enter_region(*r);
        } else if (mode_ != Mode::Repairing && plan_.next_region(*pa_) == *r) {
            // Self-loop in the plan: dwelling counts as the next move.
            belief_ = advance(*pa_, belief_, *r);
            refresh_traps();
            advance_plan(*r);
        }
    }

    last_tick_ = rec;
    if (tick_sink_) tick_sink_(rec);
    log_.tick();
    ++ticks_;
}

void Session::apply(const wire::Inbound& m) {
    log_.append(wire::to_json(m));
    std::visit(
        [&](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, wire::SetVelocity>) {
                hold_.ingest({body.vx, body.vy}, robot_.t);
                emit(wire::Ack{"SetVelocity", m.id});
            } else if constexpr (std::is_same_v<T, wire::AssignTempTask>) {
                apply_temp_task(body, m.id);
            } else if constexpr (std::is_same_v<T, wire::EditModel>) {
                apply_model_update(body.update, m.id);
            } else if constexpr (std::is_same_v<T, wire::Pause>) {
                paused_ = true;
                emit(wire::Ack{"Pause", m.id});
            } else {
                paused_ = false;
                emit(wire::Ack{"Resume", m.id});
            }
        },
        m.body);
}

void Session::apply_model_update(const ModelUpdate& u, std::optional<long long> ref) {
    std::optional<TransitionSystem> next;
    try {
        next = apply_update(pa_->ts(), u);
    } catch (const UnknownId& e) {
        fault(wire::code::kUnknownRegion, e.what(), ref);
        return;
    } catch (const Error& e) {
        fault(wire::code::kBadValue, e.what(), ref);
        return;
    }
    pa_ = std::make_shared<ProductAutomaton>(std::make_shared<const TransitionSystem>(std::move(*next)), pa_->hard_ptr(),
                                             pa_->soft_ptr());
    auto nb = reachable_states(*pa_, history_.regions);
    if (!nb.empty()) belief_ = std::move(nb);
    refresh_traps();
    emit(wire::Ack{"EditModel", ref});
    replan("model_update");
}

void Session::apply_temp_task(const wire::AssignTempTask& a, std::optional<long long> ref) {
    const auto& ts = pa_->ts();
    const auto pick = ts.find(a.pickup);
    const auto drop = ts.find(a.dropoff);
    if (!pick || !drop) {
        fault(wire::code::kUnknownRegion, "unknown region in temporary task", ref);
        return;
    }
    if (!(a.deadline_s > 0.0)) {
        fault(wire::code::kBadValue, "deadline must lie in the future", ref);
        return;
    }
    TaskRecord rec;
    rec.id = static_cast<int>(tasks_.size()) + 1;
    rec.task = TempTask{*pick, *drop, a.deadline_s, robot_.t};
    if (mode_ == Mode::Repairing) {
        rec.status = "rejected";
        tasks_.push_back(rec);
        emit(wire::TaskStatus{rec.id, rec.status, 0.0});
        fault(wire::code::kInfeasible, "no valid plan to insert the task into", ref);
        return;
    }
    const auto here = region_at(ts, robot_.x);
    try {
        const Insertion ins = insert_temp_task(*pa_, plan_, rec.task, params_.v_max);
        rec.status = here && *here == *pick ? "picked_up" : "pending";
        rec.predicted_delay = ins.delay;
        tasks_.push_back(rec);
        emit(wire::Ack{"AssignTempTask", ref});
        emit(wire::TaskStatus{rec.id, rec.status, rec.predicted_delay});
        derived({{"type", "TaskStatus"}, {"id", rec.id}, {"status", rec.status}, {"predicted_delay", rec.predicted_delay}});
        set_plan(ins.plan, "temp_task");
    } catch (const NoFeasibleInsertion& e) {
        rec.status = "rejected";
        tasks_.push_back(rec);
        emit(wire::TaskStatus{rec.id, rec.status, 0.0});
        fault(wire::code::kInfeasible, e.what(), ref);
    }
}

void Session::enter_region(int region) {
    last_region_ = region;
    history_.regions.push_back(region);
    history_.times.push_back(robot_.t);
    derived({{"type", "RegionEntered"}, {"region", pa_->ts().region(region).id}});
    auto nb = advance(*pa_, belief_, region);
    if (nb.empty()) {
        fault("hard_violation", "entered " + pa_->ts().region(region).id + " with no consistent product state");
        mode_ = Mode::Repairing;
        return;
    }
    belief_ = std::move(nb);
    refresh_traps();
    update_tasks(region);
    if (mode_ == Mode::Repairing) return;
    if (plan_.next_region(*pa_) == region) advance_plan(region);
    else replan("deviation");
}

void Session::advance_plan(int) { ++plan_.cursor; }

void Session::update_tasks(int region) {
    for (auto& task : tasks_) {
        const std::string before = task.status;
        if (task.status == "pending" && region == task.task.pickup) task.status = "picked_up";
        if (task.status == "picked_up" && region == task.task.dropoff) {
            task.status = "fulfilled";
            task.fulfilled_at = robot_.t;
        }
        if (task.status != before) {
            emit(wire::TaskStatus{task.id, task.status, task.predicted_delay});
            derived({{"type", "TaskStatus"}, {"id", task.id}, {"status", task.status}});
        }
    }
}

void Session::set_plan(Plan p, const std::string& reason) {
    plan_ = std::move(p);
    emit(wire::PlanChanged{to_json(*pa_, plan_), reason});
    json regions = json::array();
    for (int r : plan_.tau_r) regions.push_back(pa_->ts().region(r).id);
    derived({{"type", "PlanChanged"}, {"reason", reason}, {"regions", regions}, {"prefix_length", plan_.run.prefix.size()},
             {"cost", plan_.cost.is_finite() ? json(plan_.cost.value()) : json("inf")}, {"beta", plan_.beta}});
}

void Session::replan(const std::string& reason) {
    try {
        Plan p = revise(*pa_, belief_, beta_, scenario_.gamma);
        if (mode_ == Mode::Repairing) mode_ = Mode::Autonomous;
        set_plan(std::move(p), reason);
        reinsert_tasks();
    } catch (const NoAcceptingRun& e) {
        mode_ = Mode::Repairing;
        guided_start_.reset();
        fault(wire::code::kNoAcceptingRun, e.what());
    }
}

void Session::reinsert_tasks() {
    for (auto& task : tasks_) {
        if (task.status != "pending" && task.status != "picked_up") continue;
        TempTask t = task.task;
        t.deadline = task.task.deadline - (robot_.t - task.task.assigned_at);
        t.assigned_at = robot_.t;
        if (task.status == "picked_up") t.pickup = pa_->state(plan_.current_state()).pi;
        try {
            const Insertion ins = insert_temp_task(*pa_, plan_, t, params_.v_max);
            task.predicted_delay = ins.delay;
            set_plan(ins.plan, "temp_task");
        } catch (const NoFeasibleInsertion& e) {
            task.status = "rejected";
            emit(wire::TaskStatus{task.id, task.status, 0.0});
            fault(wire::code::kInfeasible, e.what());
        }
    }
}

void Session::refresh_traps() {
    traps_ = trap_regions(*pa_, belief_, beta_);
    trap_shapes_.clear();
    for (int r : traps_.regions) trap_shapes_.push_back(pa_->ts().region(r).shape);
}

void Session::close_guided_segment() {
    mode_ = Mode::Autonomous;
    released_since_ = -1.0;
    const std::size_t first = *guided_start_;
    const std::size_t last = history_.regions.size() - 1;
    guided_start_.reset();
    json trace = json::array();
    for (std::size_t i = first; i <= last; ++i) trace.push_back(pa_->ts().region(history_.regions[i]).id);
    const bool learn = last > first && !pending_;
    derived({{"type", "GuidedSegmentClosed"}, {"span", {first, last}}, {"trace", trace}, {"learn", learn}});
    if (!learn) return;
    DemonstrationRun demo;
    try {
        const DemonstrationRun full = lift_trace(*pa_, history_.regions);
        demo.states.assign(full.states.begin() + static_cast<std::ptrdiff_t>(first),
                           full.states.begin() + static_cast<std::ptrdiff_t>(last) + 1);
        demo.alpha3 = alpha3_of(*pa_, demo.states);
    } catch (const NoLift& e) {
        fault(wire::code::kNoLift, e.what());
        return;
    }
    pending_ = std::make_unique<PendingLearning>();
    pending_->result = std::async(std::launch::async, [pa = pa_, demo, beta = beta_, params = scenario_.irl] {
        return learn_beta(*pa, demo, beta, params);
    });
}

void Session::finish_learning() {
    if (!pending_) return;
    auto p = std::move(pending_);
    BetaEstimate e;
    try {
        e = p->result.get();
    } catch (const Error& ex) {
        fault("irl_aborted", ex.what());
        return;
    }
    learning_.push_back(e);
    beta_ = e.beta;
    const json j = to_json(e);
    emit(wire::BetaUpdated{e.beta, e.converged, j["history"]});
    derived({{"type", "BetaUpdated"}, {"beta", e.beta}, {"converged", e.converged}, {"iterations", e.history.size()}});
    if (mode_ != Mode::Repairing) replan("beta");
}

wire::StateTick Session::state_tick() const {
    wire::StateTick s;
    s.t = robot_.t;
    s.x = robot_.x;
    if (last_tick_) {
        s.kappa = last_tick_->kappa;
        if (std::isfinite(last_tick_->d_t)) s.d_t = last_tick_->d_t;
    }
    if (const auto r = region_at(pa_->ts(), robot_.x)) s.region = pa_->ts().region(*r).id;
    for (int r : plan_.tau_r) s.plan.push_back(pa_->ts().region(r).id);
    s.cursor = plan_.cursor;
    s.beta = beta_;
    s.mode = paused_ ? "paused" : to_string(mode_);
    return s;
}

ReplayResult replay_lines(const std::vector<std::string>& lines) {
    ReplayResult out;
    auto bad = [](const std::string& what) { return ScenarioError("event log: " + what); };
    if (lines.empty()) throw bad("empty log");
    json start;
    try {
        start = json::parse(lines.front());
    } catch (const json::parse_error& e) {
        throw bad(e.what());
    }
    if (start.value("type", "") != "Start" || start.value("schema", "") != kEventLogSchema)
        throw bad("first record must be a Start record");
    if (start.value("v", 0) != kEventLogVersion) throw bad("unsupported version " + start.value("v", json()).dump());
    out.session = std::make_unique<Session>(load_scenario(start.at("scenario")), start.value("seed", std::uint64_t{0}));
    Session& s = *out.session;
    s.on_tick([&](const TickRecord& r) { out.tick_log.push_back(to_json(r).dump()); });
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const json::parse_error& e) {
            throw bad("line " + std::to_string(i + 1) + ": " + e.what());
        }
        if (j.value("derived", false)) continue;
        const std::string type = j.value("type", "");
        if (type == "Tick") {
            s.run(j.at("count").get<int>());
        } else {
            try {
                s.submit(wire::parse_inbound(j));
            } catch (const wire::WireError& e) {
                throw bad("line " + std::to_string(i + 1) + ": " + e.what());
            }
        }
    }
    s.event_log().flush();
    out.event_log = s.event_log().lines();
    out.identical = out.event_log == lines;
    return out;
}

ReplayResult replay(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    return replay_lines(lines);
}

}  // namespace mixplan

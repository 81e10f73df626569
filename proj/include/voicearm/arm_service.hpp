/**
 * @file arm_service.hpp
 * @brief The command pipeline and its single-owner execution loop.
 *
 *   text -> normalize -> match -> parameters -> goals
 *        -> (per goal) joint schedule -> wire frame -> controller -> plants
 *
 * ArmService is not thread-safe for commands: exactly one owner calls
 * process_command(). Snapshots (state, traces) may be read from any
 * thread. CommandExecutor provides that owner for the network server.
 */
#pragma once

#include <array>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "voicearm/actuation.hpp"
#include "voicearm/choreography.hpp"
#include "voicearm/command_grammar.hpp"
#include "voicearm/error.hpp"
#include "voicearm/firmware_plant.hpp"
#include "voicearm/json_util.hpp"
#include "voicearm/kinematics.hpp"
#include "voicearm/persistence.hpp"
#include "voicearm/wire_protocol.hpp"

namespace voicearm::service {

using actuation::CalibrationProfile;
using grammar::Intent;
using json_util::json;
using kinematics::JointState;

struct MatchSummary {
  grammar::IntentKind kind = grammar::IntentKind::Stop;
  double confidence = 0.0;
  std::string matched_phrase;
};

struct CommandOutcome {
  std::uint64_t id = 0;
  std::string text;
  std::optional<MatchSummary> match;
  std::optional<Intent> intent;
  std::optional<ErrorCode> error;
  std::string error_message;
  std::string response;
  std::size_t goal_count = 0;
  bool settled = false;
  JointState final_state;
  std::string trace_id;
};

struct CommandTrace {
  std::uint64_t id = 0;
  std::string text;
  std::vector<std::string> frames;  // as rendered in the frames file
  std::vector<plant::TrajectorySample> samples;

  std::string frames_text() const {
    std::string out;
    for (const auto& f : frames) out += f + "\n";
    return out;
  }
  std::string trajectory_csv() const { return plant::trajectory_csv(samples); }
};

struct TickEvent {
  std::int64_t elapsed_ms = 0;
  std::array<double, 6> joints{};
  std::array<int, 6> registers{};
  std::optional<std::uint64_t> active_command;
};

struct StateSnapshot {
  TickEvent tick;
  bool frozen = false;
};

/// Fully loaded service inputs.
struct Session {
  kinematics::ArmGeometry geometry;
  CalibrationProfile profile = CalibrationProfile::standard();
  std::shared_ptr<const grammar::Dictionary> dictionary;
  choreo::ScriptLibrary scripts;
  int tick_budget = 2000;
  double slew_limit = plant::kDefaultSlewRadPerSec;
  std::optional<std::filesystem::path> trace_dir;
};

/// Loads and cross-validates every file a config names. Scripts are
/// checked against both the geometry and the servo travel.
inline Session load_session(const persistence::SessionConfig& cfg) {
  Session s;
  s.geometry = cfg.geometry;
  s.profile = persistence::load_profile(cfg.calibration_path);
  s.dictionary =
      std::make_shared<const grammar::Dictionary>(persistence::load_dictionary(cfg.dictionary_path));
  s.scripts = choreo::load_scripts(cfg.scripts_path, cfg.geometry, &s.profile);
  s.tick_budget = cfg.tick_budget;
  s.slew_limit = cfg.slew_limit;
  return s;
}

inline std::array<double, 6> joint_array(const JointState& q) {
  return {q.theta1, q.theta2, q.theta3, q.theta4, q.theta5, q.gripper};
}

/// Upper bound (mm) on the Cartesian error of a settled pose caused by
/// rounding each pulse to 1 us: each joint lands within half a
/// microsecond's worth of angle of its goal, and the wrist centre moves at
/// most (lever arm x angle) for each.
inline double quantization_error_bound_mm(const kinematics::ArmGeometry& geom,
                                          const CalibrationProfile& profile) {
  using actuation::Joint;
  const double d1 = actuation::quantization_step(profile.at(Joint::Theta1));
  const double d2 = actuation::quantization_step(profile.at(Joint::Theta2));
  const double d3 = actuation::quantization_step(profile.at(Joint::Theta3));
  const double reach = geom.l1 + geom.l2;
  // shoulder error swings both links, elbow error swings the forearm,
  // base error swings the whole reach about the vertical axis
  return reach * d2 + geom.l2 * d3 + reach * d1;
}

class ArmService {
 public:
  using TickListener = std::function<void(const TickEvent&)>;

  explicit ArmService(Session session) : session_(std::move(session)) {
    if (!session_.dictionary) throw Error(ErrorCode::InvalidConfig, "no dictionary loaded");
    std::array<int, actuation::kChannelCount> regs{};
    for (int id = 0; id < actuation::kChannelCount; ++id) {
      const auto* ch = session_.profile.find_channel(id);
      regs[static_cast<std::size_t>(id)] = ch ? (ch->min_pulse + ch->max_pulse) / 2 : 1500;
    }
    controller_ = plant::Controller(regs);
    plants_ = plant::make_plants(session_.profile, session_.slew_limit);
    for (auto& p : plants_) {
      p.position = actuation::pulse_to_angle(p.channel, regs[static_cast<std::size_t>(p.channel.id)]);
    }
    commanded_ = plant::joints_from_plants(plants_);
    publish(std::nullopt);
  }

  void set_tick_listener(TickListener l) {
    std::lock_guard lock(listener_mu_);
    listener_ = std::move(l);
  }

  /// Runs one command to completion. Never throws for command-level
  /// failures; they are reported in the outcome.
  CommandOutcome process_command(const std::string& text) {
    CommandOutcome out;
    out.id = next_id_++;
    out.text = text;
    out.trace_id = std::to_string(out.id);
    CommandTrace trace;
    trace.id = out.id;
    trace.text = text;

    std::shared_ptr<const grammar::Dictionary> dict;
    {
      std::lock_guard lock(snapshot_mu_);
      dict = session_.dictionary;
    }

    try {
      grammar::MatchResult m = grammar::match_command(*dict, text);
      out.match = MatchSummary{m.intent.kind, m.confidence, m.matched_phrase};
      out.intent = grammar::parse_params(dict->templates()[m.entry_index], m.tokens);
      execute(*out.intent, out, trace);
    } catch (const Error& e) {
      out.error = e.code();
      out.error_message = e.what();
    }

    out.final_state = plant::joints_from_plants(plants_);
    out.response = grammar::respond(out.intent, out.error);
    if (session_.trace_dir) write_trace_files(*session_.trace_dir, trace);
    {
      std::lock_guard lock(snapshot_mu_);
      traces_[out.id] = std::move(trace);
    }
    publish(std::nullopt);
    return out;
  }

  StateSnapshot snapshot() const {
    std::lock_guard lock(snapshot_mu_);
    return snapshot_;
  }

  std::optional<CommandTrace> trace(std::uint64_t id) const {
    std::lock_guard lock(snapshot_mu_);
    auto it = traces_.find(id);
    if (it == traces_.end()) return std::nullopt;
    return it->second;
  }

  /// Replaces the calibration. Call from the owning thread only.
  /// Throws if a joint lacks a channel or a shipped script step would
  /// leave the new servo travel; the old profile stays active then.
  void set_calibration(const CalibrationProfile& profile) {
    for (actuation::Joint j : actuation::kAllJoints) profile.at(j);
    for (const auto& [name, script] : session_.scripts) {
      for (std::size_t i = 0; i < script.steps.size(); ++i) {
        try {
          actuation::schedule_from_joints(profile, choreo::resolve_step(script.steps[i]));
        } catch (const Error& e) {
          throw choreo::ScriptValidationError(name, i, e.what());
        }
      }
    }
    for (auto& p : plants_) {
      if (const auto* ch = profile.find_channel(p.channel.id)) p.channel = *ch;
    }
    std::lock_guard lock(snapshot_mu_);
    session_.profile = profile;
  }

  void set_dictionary(std::shared_ptr<const grammar::Dictionary> dict) {
    std::lock_guard lock(snapshot_mu_);
    session_.dictionary = std::move(dict);
  }

  CalibrationProfile profile() const {
    std::lock_guard lock(snapshot_mu_);
    return session_.profile;
  }

  const Session& session() const { return session_; }
  const plant::ControllerState& controller_state() const { return controller_.state(); }
  bool frozen() const { return frozen_; }

  static void write_trace_files(const std::filesystem::path& dir, const CommandTrace& trace) {
    std::filesystem::create_directories(dir);
    const std::string stem = "cmd_" + std::to_string(trace.id);
    json_util::write_file((dir / (stem + "_frames.txt")).string(), trace.frames_text());
    json_util::write_file((dir / (stem + "_trajectory.csv")).string(), trace.trajectory_csv());
  }

 private:
  static bool is_motion(grammar::IntentKind k) {
    using grammar::IntentKind;
    return k == IntentKind::Turn || k == IntentKind::MoveTo || k == IntentKind::Pick ||
           k == IntentKind::Pull || k == IntentKind::Dance || k == IntentKind::Home;
  }

  void execute(const Intent& intent, CommandOutcome& out, CommandTrace& trace) {
    using grammar::IntentKind;
    if (frozen_ && is_motion(intent.kind)) {
      throw Error(ErrorCode::Frozen, "holding; motion ignored until release or stop");
    }
    if (intent.kind == IntentKind::Release || intent.kind == IntentKind::Stop) frozen_ = false;

    const auto goals =
        choreo::expand_intent(intent, commanded_, session_.scripts, session_.geometry);
    out.goal_count = goals.size();

    // Check every goal against the servo travel before anything moves.
    std::vector<std::string> frames(goals.size());
    for (std::size_t i = 0; i < goals.size(); ++i) {
      if (goals[i].kind != choreo::GoalKind::Move) continue;
      const auto sched = actuation::schedule_from_joints(session_.profile, goals[i].joints);
      wire::WireFrame frame;
      for (const auto& c : sched.commands) frame.groups.push_back({c.channel, c.width_us});
      frame.move_time_ms = goals[i].move_time_ms;
      frames[i] = wire::encode_frame(frame);
    }

    int budget = session_.tick_budget;
    for (std::size_t i = 0; i < goals.size(); ++i) {
      if (goals[i].kind == choreo::GoalKind::Freeze) {
        frozen_ = true;
        continue;
      }
      trace.frames.push_back(wire::render_frame(frames[i]));
      controller_.feed(frames[i]);
      commanded_ = goals[i].joints;
      try {
        auto traj = plant::run_until_settled(
            controller_, plants_, clock_, budget,
            [&](const plant::TrajectorySample& s) { on_tick(s, out.id); });
        budget -= static_cast<int>(traj.samples.size());
        trace.samples.insert(trace.samples.end(), traj.samples.begin(), traj.samples.end());
      } catch (const plant::NotSettledError& e) {
        const auto& partial = e.partial().samples;
        trace.samples.insert(trace.samples.end(), partial.begin(), partial.end());
        throw;
      }
      if (budget <= 0 && i + 1 < goals.size()) {
        throw Error(ErrorCode::NotSettled, "tick budget exhausted");
      }
    }
    out.settled = true;
  }

  void on_tick(const plant::TrajectorySample& s, std::uint64_t command) {
    TickEvent ev;
    ev.elapsed_ms = s.elapsed_us / 1000;
    ev.joints = joint_array(s.joints);
    ev.registers = s.widths;
    ev.active_command = command;
    {
      std::lock_guard lock(snapshot_mu_);
      snapshot_.tick = ev;
      snapshot_.frozen = frozen_;
    }
    std::lock_guard lock(listener_mu_);
    if (listener_) listener_(ev);
  }

  void publish(std::optional<std::uint64_t> command) {
    std::lock_guard lock(snapshot_mu_);
    snapshot_.tick.elapsed_ms = clock_.elapsed_us / 1000;
    snapshot_.tick.joints = joint_array(plant::joints_from_plants(plants_));
    snapshot_.tick.registers = controller_.state().pulse_register;
    snapshot_.tick.active_command = command;
    snapshot_.frozen = frozen_;
  }

  Session session_;
  plant::Controller controller_;
  plant::PlantBank plants_{};
  plant::SimClock clock_;
  JointState commanded_;
  bool frozen_ = false;
  std::uint64_t next_id_ = 1;

  mutable std::mutex snapshot_mu_;
  StateSnapshot snapshot_;
  std::map<std::uint64_t, CommandTrace> traces_;

  std::mutex listener_mu_;
  TickListener listener_;
};

// ---------------------------------------------------------------------------
// JSON views

inline json to_json(const JointState& q) {
  return {{"theta1", q.theta1}, {"theta2", q.theta2}, {"theta3", q.theta3},
          {"theta4", q.theta4}, {"theta5", q.theta5}, {"gripper", q.gripper}};
}

inline json to_json(const Intent& intent) {
  json params = json::object();
  if (const auto* t = std::get_if<grammar::TurnParams>(&intent.params)) {
    params = {{"direction", t->direction == grammar::TurnDirection::Left ? "left" : "right"},
              {"degrees", t->degrees}};
  } else if (const auto* m = std::get_if<grammar::MoveToParams>(&intent.params)) {
    params = {{"x", m->x}, {"y", m->y}, {"z", m->z}};
  }
  return {{"kind", std::string(grammar::to_string(intent.kind))}, {"params", params}};
}

inline json to_json(const CommandOutcome& o) {
  json j;
  j["id"] = o.id;
  j["text"] = o.text;
  j["intent"] = o.intent ? to_json(*o.intent) : json(nullptr);
  if (o.match) {
    j["match"] = {{"kind", std::string(grammar::to_string(o.match->kind))},
                  {"confidence", o.match->confidence},
                  {"matched_phrase", o.match->matched_phrase}};
  } else {
    j["match"] = nullptr;
  }
  if (o.error) {
    j["error"] = {{"code", std::string(to_string(*o.error))}, {"message", o.error_message}};
  } else {
    j["error"] = nullptr;
  }
  j["response"] = o.response;
  j["goal_count"] = o.goal_count;
  j["settled"] = o.settled;
  j["final_state"] = to_json(o.final_state);
  j["trace_id"] = o.trace_id;
  return j;
}

inline json to_json(const TickEvent& ev) {
  return {{"elapsed_ms", ev.elapsed_ms},
          {"joints", ev.joints},
          {"registers", ev.registers},
          {"active_command", ev.active_command ? json(*ev.active_command) : json(nullptr)}};
}

inline json to_json(const StateSnapshot& s) {
  json j = to_json(s.tick);
  std::array<double, 6> duty{};
  for (std::size_t i = 0; i < 6; ++i) duty[i] = actuation::duty_cycle(s.tick.registers[i], actuation::kPeriodUs);
  j["duty"] = duty;
  j["joint_names"] = {"theta1", "theta2", "theta3", "theta4", "theta5", "gripper"};
  j["frozen"] = s.frozen;
  return j;
}

inline json to_json(const CommandTrace& t) {
  return {{"id", t.id},
          {"text", t.text},
          {"frames", t.frames},
          {"trajectory_csv", t.trajectory_csv()}};
}

// ---------------------------------------------------------------------------

/// Owns an ArmService on a worker thread and runs jobs strictly one at a
/// time in submission order.
class CommandExecutor {
 public:
  explicit CommandExecutor(ArmService& service) : service_(service), worker_([this] { run(); }) {}

  CommandExecutor(const CommandExecutor&) = delete;
  CommandExecutor& operator=(const CommandExecutor&) = delete;

  ~CommandExecutor() {
    {
      std::lock_guard lock(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
    worker_.join();
  }

  std::future<CommandOutcome> submit_command(std::string text) {
    return submit([text = std::move(text)](ArmService& s) { return s.process_command(text); });
  }

  template <typename Fn>
  auto submit(Fn fn) -> std::future<decltype(fn(std::declval<ArmService&>()))> {
    using R = decltype(fn(std::declval<ArmService&>()));
    auto task = std::make_shared<std::packaged_task<R(ArmService&)>>(std::move(fn));
    auto fut = task->get_future();
    {
      std::lock_guard lock(mu_);
      if (stopping_) throw Error(ErrorCode::InvalidConfig, "executor stopped");
      jobs_.push_back([task](ArmService& s) { (*task)(s); });
    }
    cv_.notify_one();
    return fut;
  }

  std::size_t pending() const {
    std::lock_guard lock(mu_);
    return jobs_.size();
  }

 private:
  void run() {
    for (;;) {
      std::function<void(ArmService&)> job;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [this] { return stopping_ || !jobs_.empty(); });
        if (jobs_.empty()) return;
        job = std::move(jobs_.front());
        jobs_.pop_front();
      }
      job(service_);
    }
  }

  ArmService& service_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void(ArmService&)>> jobs_;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace voicearm::service

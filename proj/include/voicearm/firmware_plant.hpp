/**
 * @file firmware_plant.hpp
 * @brief Behavioral model of the servo controller board and the servos
 *        it drives, advanced one PWM period (20 ms) at a time.
 *
 * The controller buffers serial bytes, decodes complete frames into its
 * pulse registers (interpolating when a frame carries a move time), and
 * emits the register set once per tick. Each servo is a pure slew-rate
 * limited plant chasing the angle its pulse width commands.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voicearm/actuation.hpp"
#include "voicearm/error.hpp"
#include "voicearm/kinematics.hpp"
#include "voicearm/wire_protocol.hpp"

namespace voicearm::plant {

using actuation::CalibrationProfile;
using actuation::PulseSchedule;
using actuation::ServoChannel;
using kinematics::JointState;

inline constexpr int kTickUs = actuation::kPeriodUs;
inline constexpr std::size_t kRxBufferLimit = 4096;
/// 60 degrees in 0.21 s.
inline constexpr double kDefaultSlewRadPerSec = 4.987;

struct ChannelMove {
  int start_us = 0;
  int target_us = 0;
  int duration_ms = 0;
  int elapsed_ms = 0;

  bool operator==(const ChannelMove&) const = default;
};

struct ControllerState {
  std::array<int, actuation::kChannelCount> pulse_register{};
  std::array<std::optional<ChannelMove>, actuation::kChannelCount> pending{};
  std::string rx_buffer;
  std::size_t frames_accepted = 0;
  std::size_t frame_errors = 0;

  bool moving() const {
    return std::any_of(pending.begin(), pending.end(), [](const auto& m) { return m.has_value(); });
  }

  bool operator==(const ControllerState&) const = default;
};

class Controller {
 public:
  Controller() { state_.pulse_register.fill(1500); }
  explicit Controller(const std::array<int, actuation::kChannelCount>& registers) {
    state_.pulse_register = registers;
  }

  const ControllerState& state() const { return state_; }

  /// Buffers bytes and applies every complete frame. Malformed frames are
  /// dropped and counted. Throws BufferOverrun (after discarding the
  /// buffer) if more than 4096 bytes arrive without a terminator.
  void feed(std::string_view bytes) {
    for (char c : bytes) {
      state_.rx_buffer.push_back(c);
      if (c == wire::kTerminator) {
        apply_line(state_.rx_buffer);
        state_.rx_buffer.clear();
      } else if (state_.rx_buffer.size() > kRxBufferLimit) {
        state_.rx_buffer.clear();
        throw Error(ErrorCode::BufferOverrun, "receive buffer exceeded 4096 bytes");
      }
    }
  }

  /// Advances interpolated moves by one period and emits the registers.
  PulseSchedule tick() {
    const int tick_ms = kTickUs / 1000;
    for (std::size_t ch = 0; ch < state_.pending.size(); ++ch) {
      auto& mv = state_.pending[ch];
      if (!mv) continue;
      mv->elapsed_ms += tick_ms;
      if (mv->elapsed_ms >= mv->duration_ms) {
        state_.pulse_register[ch] = mv->target_us;
        mv.reset();
      } else {
        const double frac = static_cast<double>(mv->elapsed_ms) / mv->duration_ms;
        state_.pulse_register[ch] =
            mv->start_us + static_cast<int>(std::lround((mv->target_us - mv->start_us) * frac));
      }
    }
    return current_schedule();
  }

  PulseSchedule current_schedule() const {
    PulseSchedule s;
    for (int ch = 0; ch < actuation::kChannelCount; ++ch) {
      s.commands.push_back({ch, state_.pulse_register[static_cast<std::size_t>(ch)]});
    }
    return s;
  }

 private:
  void apply_line(std::string_view line) {
    wire::WireFrame frame;
    try {
      frame = wire::decode_frame(line);
    } catch (const ParseError&) {
      ++state_.frame_errors;
      return;
    }
    ++state_.frames_accepted;
    for (const auto& g : frame.groups) {
      const auto ch = static_cast<std::size_t>(g.channel);
      if (frame.move_time_ms && *frame.move_time_ms > 0) {
        state_.pending[ch] = ChannelMove{state_.pulse_register[ch], g.width_us,
                                         *frame.move_time_ms, 0};
      } else {
        state_.pulse_register[ch] = g.width_us;
        state_.pending[ch].reset();
      }
    }
  }

  ControllerState state_;
};

/// Single-call form: feed `input`, then advance one tick.
inline PulseSchedule controller_step(Controller& controller, std::string_view input) {
  controller.feed(input);
  return controller.tick();
}

struct ServoPlant {
  ServoChannel channel;
  double position = 0.0;
  double slew_limit = kDefaultSlewRadPerSec;  // rad/s
};

/// New position after chasing `commanded_width_us` for `dt_us`.
inline double plant_step(const ServoPlant& plant, int commanded_width_us, int dt_us) {
  const double target = actuation::pulse_to_angle(plant.channel, commanded_width_us);
  const double reach = plant.slew_limit * dt_us * 1e-6;
  const double delta = target - plant.position;
  if (std::fabs(delta) <= reach) return target;
  return plant.position + (delta > 0.0 ? reach : -reach);
}

struct SimClock {
  int tick_us = kTickUs;
  std::int64_t elapsed_us = 0;
  std::int64_t ticks = 0;

  void advance() {
    elapsed_us += tick_us;
    ++ticks;
  }
};

struct TrajectorySample {
  std::int64_t tick = 0;
  std::int64_t elapsed_us = 0;
  JointState joints;
  std::array<int, actuation::kChannelCount> widths{};
  bool settled = false;

  bool operator==(const TrajectorySample&) const = default;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  bool settled = false;
};

class NotSettledError : public Error {
 public:
  NotSettledError(Trajectory partial, const std::string& message)
      : Error(ErrorCode::NotSettled, message), partial_(std::move(partial)) {}

  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// Plants indexed by channel id.
using PlantBank = std::array<ServoPlant, actuation::kChannelCount>;

inline PlantBank make_plants(const CalibrationProfile& profile,
                             double slew_limit = kDefaultSlewRadPerSec) {
  PlantBank bank{};
  for (int id = 0; id < actuation::kChannelCount; ++id) {
    auto& p = bank[static_cast<std::size_t>(id)];
    if (const ServoChannel* ch = profile.find_channel(id)) p.channel = *ch;
    else p.channel.id = id;
    p.slew_limit = slew_limit;
  }
  return bank;
}

inline JointState joints_from_plants(const PlantBank& plants) {
  JointState q;
  for (const auto& p : plants) actuation::joint_ref(q, p.channel.joint) = p.position;
  return q;
}

inline bool plants_at_target(const PlantBank& plants, const ControllerState& ctl) {
  for (std::size_t i = 0; i < plants.size(); ++i) {
    const double target = actuation::pulse_to_angle(plants[i].channel, ctl.pulse_register[i]);
    if (plants[i].position != target) return false;
  }
  return true;
}

using TickObserver = std::function<void(const TrajectorySample&)>;

/// Steps controller and plants until everything has arrived, recording one
/// sample per tick. Throws NotSettledError with the partial trajectory when
/// `max_ticks` runs out first.
inline Trajectory run_until_settled(Controller& controller, PlantBank& plants, SimClock& clock,
                                    int max_ticks, const TickObserver& observer = {}) {
  if (max_ticks <= 0) throw Error(ErrorCode::InvalidConfig, "max_ticks must be positive");
  Trajectory traj;
  for (int n = 0; n < max_ticks; ++n) {
    const PulseSchedule sched = controller.tick();
    clock.advance();
    for (const auto& cmd : sched.commands) {
      auto& p = plants[static_cast<std::size_t>(cmd.channel)];
      p.position = plant_step(p, cmd.width_us, clock.tick_us);
    }
    TrajectorySample s;
    s.tick = clock.ticks;
    s.elapsed_us = clock.elapsed_us;
    s.joints = joints_from_plants(plants);
    s.widths = controller.state().pulse_register;
    s.settled = !controller.state().moving() && plants_at_target(plants, controller.state());
    traj.samples.push_back(s);
    if (observer) observer(s);
    if (s.settled) {
      traj.settled = true;
      return traj;
    }
  }
  throw NotSettledError(std::move(traj),
                        "not settled after " + std::to_string(max_ticks) + " ticks");
}

inline std::string trajectory_csv_header() {
  return "tick,elapsed_ms,theta1,theta2,theta3,theta4,theta5,gripper,w0,w1,w2,w3,w4,w5\n";
}

inline std::string trajectory_csv_row(const TrajectorySample& s) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%lld,%lld,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%d,%d,%d,%d,%d,%d\n",
                static_cast<long long>(s.tick), static_cast<long long>(s.elapsed_us / 1000),
                s.joints.theta1, s.joints.theta2, s.joints.theta3, s.joints.theta4,
                s.joints.theta5, s.joints.gripper, s.widths[0], s.widths[1], s.widths[2],
                s.widths[3], s.widths[4], s.widths[5]);
  return buf;
}

inline std::string trajectory_csv(std::span<const TrajectorySample> samples) {
  std::string out = trajectory_csv_header();
  for (const auto& s : samples) out += trajectory_csv_row(s);
  return out;
}

}  // namespace voicearm::plant

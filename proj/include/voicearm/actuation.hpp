/**
 * @file actuation.hpp
 * @brief Joint angle <-> servo pulse width mapping and per-frame schedules.
 *
 * A hobby servo is positioned by the on-time of a pulse repeated every
 * 20 ms. The nominal map is 1000 us at 0 rad to 2000 us at pi rad; each
 * channel carries its own calibration so individual servos can deviate.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voicearm/error.hpp"
#include "voicearm/kinematics.hpp"

namespace voicearm::actuation {

using kinematics::JointState;
using kinematics::kPi;

inline constexpr int kPeriodUs = 20000;
inline constexpr int kChannelCount = 6;

/// Slack for floating-point noise on angles coming out of the IK
/// (e.g. theta2 = -1e-17 for a target on the horizontal).
inline constexpr double kAngleSlack = 1e-9;

enum class Joint { Theta1, Theta2, Theta3, Theta4, Theta5, Gripper };

inline constexpr std::array<Joint, 6> kAllJoints = {Joint::Theta1, Joint::Theta2, Joint::Theta3,
                                                     Joint::Theta4, Joint::Theta5, Joint::Gripper};

constexpr std::string_view joint_name(Joint j) {
  switch (j) {
    case Joint::Theta1: return "theta1";
    case Joint::Theta2: return "theta2";
    case Joint::Theta3: return "theta3";
    case Joint::Theta4: return "theta4";
    case Joint::Theta5: return "theta5";
    case Joint::Gripper: return "gripper";
  }
  return "?";
}

inline std::optional<Joint> joint_from_name(std::string_view name) {
  for (Joint j : kAllJoints) {
    if (joint_name(j) == name) return j;
  }
  return std::nullopt;
}

inline double& joint_ref(JointState& q, Joint j) {
  switch (j) {
    case Joint::Theta1: return q.theta1;
    case Joint::Theta2: return q.theta2;
    case Joint::Theta3: return q.theta3;
    case Joint::Theta4: return q.theta4;
    case Joint::Theta5: return q.theta5;
    case Joint::Gripper: break;
  }
  return q.gripper;
}

inline double joint_value(const JointState& q, Joint j) {
  JointState copy = q;
  return joint_ref(copy, j);
}

struct ServoChannel {
  int id = 0;
  Joint joint = Joint::Theta1;
  int min_pulse = 1000;
  int max_pulse = 2000;
  double min_angle = 0.0;
  double max_angle = kPi;
  bool inverted = false;
  std::string model = "HS-422";

  void validate() const {
    if (id < 0 || id >= kChannelCount) {
      throw Error(ErrorCode::InvalidConfig, "channel id " + std::to_string(id) + " outside 0-5");
    }
    if (!(min_pulse < max_pulse)) {
      throw Error(ErrorCode::InvalidConfig,
                  "channel " + std::to_string(id) + ": min_pulse must be < max_pulse");
    }
    if (!(std::isfinite(min_angle) && std::isfinite(max_angle) && min_angle < max_angle)) {
      throw Error(ErrorCode::InvalidConfig,
                  "channel " + std::to_string(id) + ": min_angle must be < max_angle");
    }
  }

  bool operator==(const ServoChannel&) const = default;
};

struct PulseCommand {
  int channel = 0;
  int width_us = 0;

  bool operator==(const PulseCommand&) const = default;
};

struct PulseSchedule {
  int period_us = kPeriodUs;
  std::vector<PulseCommand> commands;  // ascending channel order

  std::optional<int> width_for(int channel) const {
    for (const auto& c : commands) {
      if (c.channel == channel) return c.width_us;
    }
    return std::nullopt;
  }

  bool operator==(const PulseSchedule&) const = default;
};

inline int angle_to_pulse(const ServoChannel& ch, double angle) {
  if (!std::isfinite(angle) || angle < ch.min_angle - kAngleSlack ||
      angle > ch.max_angle + kAngleSlack) {
    throw Error(ErrorCode::AngleOutOfRange,
                "channel " + std::to_string(ch.id) + " (" + std::string(joint_name(ch.joint)) +
                    "): angle " + std::to_string(angle) + " rad outside [" +
                    std::to_string(ch.min_angle) + ", " + std::to_string(ch.max_angle) + "]");
  }
  double frac = (angle - ch.min_angle) / (ch.max_angle - ch.min_angle);
  frac = std::clamp(frac, 0.0, 1.0);
  if (ch.inverted) frac = 1.0 - frac;
  const double span = ch.max_pulse - ch.min_pulse;
  return ch.min_pulse + static_cast<int>(std::lround(frac * span));
}

inline double pulse_to_angle(const ServoChannel& ch, int width_us) {
  if (width_us < ch.min_pulse || width_us > ch.max_pulse) {
    throw Error(ErrorCode::PulseOutOfRange,
                "channel " + std::to_string(ch.id) + ": width " + std::to_string(width_us) +
                    " us outside [" + std::to_string(ch.min_pulse) + ", " +
                    std::to_string(ch.max_pulse) + "]");
  }
  double frac = static_cast<double>(width_us - ch.min_pulse) / (ch.max_pulse - ch.min_pulse);
  if (ch.inverted) frac = 1.0 - frac;
  if (frac == 1.0) return ch.max_angle;
  return ch.min_angle + frac * (ch.max_angle - ch.min_angle);
}

/// D = t / T.
inline double duty_cycle(int width_us, int period_us) {
  if (period_us <= 0) {
    throw Error(ErrorCode::InvalidDuty, "period must be positive");
  }
  if (width_us < 0 || width_us > period_us) {
    throw Error(ErrorCode::InvalidDuty, "width " + std::to_string(width_us) +
                                            " us outside [0, " + std::to_string(period_us) + "]");
  }
  return static_cast<double>(width_us) / static_cast<double>(period_us);
}

/// Worst-case angle error from rounding a pulse to the nearest microsecond.
inline double quantization_step(const ServoChannel& ch) {
  return 0.5 * (ch.max_angle - ch.min_angle) / (ch.max_pulse - ch.min_pulse);
}

/// One channel per joint. Immutable once built; copy to modify.
class CalibrationProfile {
 public:
  CalibrationProfile() = default;

  explicit CalibrationProfile(std::vector<ServoChannel> channels) : channels_(std::move(channels)) {
    for (std::size_t i = 0; i < channels_.size(); ++i) {
      channels_[i].validate();
      for (std::size_t j = 0; j < i; ++j) {
        if (channels_[i].id == channels_[j].id) {
          throw Error(ErrorCode::InvalidConfig,
                      "duplicate channel id " + std::to_string(channels_[i].id));
        }
        if (channels_[i].joint == channels_[j].joint) {
          throw Error(ErrorCode::InvalidConfig, "joint " +
                                                    std::string(joint_name(channels_[i].joint)) +
                                                    " mapped to more than one channel");
        }
      }
    }
    std::sort(channels_.begin(), channels_.end(),
              [](const ServoChannel& x, const ServoChannel& y) { return x.id < y.id; });
  }

  /// Nominal profile: every channel 1000-2000 us over 0-pi, except the
  /// wrist bend which is mounted half a turn offset (pi/2 - 3pi/2) so
  /// the level-gripper wrist angle pi - phi stays inside its travel.
  static CalibrationProfile standard() {
    std::vector<ServoChannel> chans;
    for (int i = 0; i < kChannelCount; ++i) {
      ServoChannel ch;
      ch.id = i;
      ch.joint = kAllJoints[static_cast<std::size_t>(i)];
      ch.model = (ch.joint == Joint::Theta5 || ch.joint == Joint::Gripper) ? "HS-81" : "HS-422";
      if (ch.joint == Joint::Theta4) {
        ch.min_angle = kPi / 2.0;
        ch.max_angle = 3.0 * kPi / 2.0;
      }
      chans.push_back(ch);
    }
    return CalibrationProfile(std::move(chans));
  }

  const std::vector<ServoChannel>& channels() const { return channels_; }

  const ServoChannel* find(Joint j) const {
    for (const auto& ch : channels_) {
      if (ch.joint == j) return &ch;
    }
    return nullptr;
  }

  const ServoChannel* find_channel(int id) const {
    for (const auto& ch : channels_) {
      if (ch.id == id) return &ch;
    }
    return nullptr;
  }

  const ServoChannel& at(Joint j) const {
    if (const auto* ch = find(j)) return *ch;
    throw Error(ErrorCode::MissingChannel,
                "no channel for joint " + std::string(joint_name(j)));
  }

  bool operator==(const CalibrationProfile&) const = default;

 private:
  std::vector<ServoChannel> channels_;
};

inline PulseSchedule schedule_from_joints(const CalibrationProfile& profile, const JointState& q) {
  PulseSchedule sched;
  for (Joint j : kAllJoints) {
    const ServoChannel& ch = profile.at(j);
    sched.commands.push_back({ch.id, angle_to_pulse(ch, joint_value(q, j))});
  }
  std::sort(sched.commands.begin(), sched.commands.end(),
            [](const PulseCommand& x, const PulseCommand& y) { return x.channel < y.channel; });
  return sched;
}

/// Joint state a schedule commands, using the inverse map.
inline JointState joints_from_schedule(const CalibrationProfile& profile,
                                       const PulseSchedule& sched) {
  JointState q;
  for (const auto& ch : profile.channels()) {
    if (auto w = sched.width_for(ch.id)) joint_ref(q, ch.joint) = pulse_to_angle(ch, *w);
  }
  return q;
}

}  // namespace voicearm::actuation

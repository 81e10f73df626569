/**
 * @file choreography.hpp
 * @brief Expands intents into timed joint-space goals.
 *
 * Named behaviors (pick, pull, dance, home) are authored scripts of
 * Cartesian waypoints; every waypoint is run through the IK when the
 * scripts are loaded, so an expansion can never emit an unreachable goal.
 *
 * Sign convention: turning "left" increases the base azimuth theta1.
 */
#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "voicearm/actuation.hpp"
#include "voicearm/command_grammar.hpp"
#include "voicearm/error.hpp"
#include "voicearm/json_util.hpp"
#include "voicearm/kinematics.hpp"

namespace voicearm::choreo {

using grammar::Intent;
using grammar::IntentKind;
using kinematics::ArmGeometry;
using kinematics::JointState;
using kinematics::PlanarTarget;

struct ScriptStep {
  // Cartesian waypoint as authored (mm)
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double theta5 = 0.0;   // rad
  double gripper = 0.0;  // rad
  int time_ms = 0;

  // resolved at load
  PlanarTarget target;
  kinematics::JointSolution joints;

  bool operator==(const ScriptStep&) const = default;
};

struct ActionScript {
  std::string name;
  std::vector<ScriptStep> steps;

  bool operator==(const ActionScript&) const = default;
};

class ScriptValidationError : public Error {
 public:
  ScriptValidationError(std::string script, std::optional<std::size_t> step,
                        const std::string& cause)
      : Error(ErrorCode::ScriptValidationError, describe(script, step, cause)),
        script_(std::move(script)),
        step_(step) {}

  const std::string& script() const { return script_; }
  std::optional<std::size_t> step() const { return step_; }

 private:
  static std::string describe(const std::string& script, std::optional<std::size_t> step,
                              const std::string& cause) {
    std::string s = "script \"" + script + "\"";
    if (step) s += " step " + std::to_string(*step);
    return s + ": " + cause;
  }

  std::string script_;
  std::optional<std::size_t> step_;
};

using ScriptLibrary = std::map<std::string, ActionScript>;

/// Joint state for a script step, or throws an Error from the IK.
inline JointState resolve_step(const ScriptStep& step) {
  JointState q;
  q.theta1 = step.target.theta1;
  q.theta2 = step.joints.theta2;
  q.theta3 = step.joints.theta3;
  q.theta4 = step.joints.theta4;
  q.theta5 = step.theta5;
  q.gripper = step.gripper;
  return q;
}

/// Validates scripts: at least one script, unique names, positive step
/// times, every waypoint reachable, and (when a profile is given) every
/// resulting joint inside its servo travel.
inline ScriptLibrary validate_scripts(std::vector<ActionScript> scripts, const ArmGeometry& geom,
                                      const actuation::CalibrationProfile* profile = nullptr) {
  if (scripts.empty()) throw ScriptValidationError("<file>", std::nullopt, "no scripts");
  ScriptLibrary lib;
  for (auto& script : scripts) {
    if (script.name.empty()) throw ScriptValidationError("<unnamed>", std::nullopt, "empty name");
    if (lib.count(script.name)) {
      throw ScriptValidationError(script.name, std::nullopt, "duplicate script name");
    }
    if (script.steps.empty()) throw ScriptValidationError(script.name, std::nullopt, "no steps");
    for (std::size_t i = 0; i < script.steps.size(); ++i) {
      auto& step = script.steps[i];
      if (step.time_ms <= 0) {
        throw ScriptValidationError(script.name, i, "time_ms must be positive");
      }
      try {
        step.target = kinematics::target_from_xyz(step.x, step.y, step.z);
        step.joints = kinematics::solve_ik(geom, step.target).joints;
        if (profile) actuation::schedule_from_joints(*profile, resolve_step(step));
      } catch (const Error& e) {
        throw ScriptValidationError(script.name, i, e.what());
      }
    }
    lib.emplace(script.name, std::move(script));
  }
  return lib;
}

/// Scripts file: JSON array of
///   {"name": str, "steps": [{"x","y","z","theta5","gripper","time_ms"}]}
/// with x/y/z in mm and theta5/gripper in degrees.
inline std::vector<ActionScript> parse_scripts_json(const json_util::json& doc) {
  using namespace json_util;
  if (!doc.is_array()) throw ScriptValidationError("<file>", std::nullopt, "expected an array");
  std::vector<ActionScript> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "scripts[" + std::to_string(i) + "]";
    ActionScript s;
    try {
      s.name = string(doc[i], "name", where);
      const auto& steps = array(doc[i], "steps", where);
      for (std::size_t k = 0; k < steps.size(); ++k) {
        const std::string sw = where + ".steps[" + std::to_string(k) + "]";
        ScriptStep st;
        st.x = number(steps[k], "x", sw);
        st.y = number(steps[k], "y", sw);
        st.z = number(steps[k], "z", sw);
        st.theta5 = kinematics::deg_to_rad(number(steps[k], "theta5", sw));
        st.gripper = kinematics::deg_to_rad(number(steps[k], "gripper", sw));
        st.time_ms = integer(steps[k], "time_ms", sw);
        s.steps.push_back(st);
      }
    } catch (const Error& e) {
      throw ScriptValidationError(s.name.empty() ? where : s.name, std::nullopt, e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline json_util::json scripts_to_json(const ScriptLibrary& lib) {
  json_util::json doc = json_util::json::array();
  for (const auto& [name, script] : lib) {
    json_util::json steps = json_util::json::array();
    for (const auto& st : script.steps) {
      steps.push_back({{"x", st.x},
                       {"y", st.y},
                       {"z", st.z},
                       {"theta5", kinematics::rad_to_deg(st.theta5)},
                       {"gripper", kinematics::rad_to_deg(st.gripper)},
                       {"time_ms", st.time_ms}});
    }
    doc.push_back({{"name", name}, {"steps", steps}});
  }
  return doc;
}

inline ScriptLibrary load_scripts_text(std::string_view text, const ArmGeometry& geom,
                                       const actuation::CalibrationProfile* profile = nullptr) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    throw ScriptValidationError("<file>", std::nullopt, "no scripts (empty file)");
  }
  json_util::json doc;
  try {
    doc = json_util::parse(text, "scripts");
  } catch (const Error& e) {
    throw ScriptValidationError("<file>", std::nullopt, e.what());
  }
  return validate_scripts(parse_scripts_json(doc), geom, profile);
}

inline ScriptLibrary load_scripts(const std::string& path, const ArmGeometry& geom,
                                  const actuation::CalibrationProfile* profile = nullptr) {
  return load_scripts_text(json_util::read_file(path), geom, profile);
}

// ---------------------------------------------------------------------------

enum class GoalKind { Move, Freeze };

struct TimedGoal {
  GoalKind kind = GoalKind::Move;
  JointState joints;
  int move_time_ms = 0;

  bool operator==(const TimedGoal&) const = default;
};

struct ExpansionConfig {
  double gripper_closed = 0.0;
  double gripper_open = kinematics::kPi / 2.0;
  double base_min = 0.0;
  double base_max = kinematics::kPi;
  int gripper_time_ms = 400;
  int turn_time_ms = 600;
  int move_time_ms = 1000;
};

inline std::optional<std::string> script_for(IntentKind k) {
  switch (k) {
    case IntentKind::Pick: return "pick";
    case IntentKind::Pull: return "pull";
    case IntentKind::Dance: return "dance";
    case IntentKind::Home: return "home";
    default: return std::nullopt;
  }
}

inline std::vector<TimedGoal> expand_intent(const Intent& intent, const JointState& current,
                                            const ScriptLibrary& scripts, const ArmGeometry& geom,
                                            const ExpansionConfig& cfg = {}) {
  std::vector<TimedGoal> goals;
  switch (intent.kind) {
    case IntentKind::Grip:
    case IntentKind::Hold: {
      TimedGoal g{GoalKind::Move, current, cfg.gripper_time_ms};
      g.joints.gripper = cfg.gripper_closed;
      goals.push_back(g);
      if (intent.kind == IntentKind::Hold) goals.push_back({GoalKind::Freeze, g.joints, 0});
      break;
    }
    case IntentKind::Release: {
      TimedGoal g{GoalKind::Move, current, cfg.gripper_time_ms};
      g.joints.gripper = cfg.gripper_open;
      goals.push_back(g);
      break;
    }
    case IntentKind::Turn: {
      const auto& p = std::get<grammar::TurnParams>(intent.params);
      const double delta = kinematics::deg_to_rad(p.degrees);
      TimedGoal g{GoalKind::Move, current, cfg.turn_time_ms};
      g.joints.theta1 += (p.direction == grammar::TurnDirection::Left) ? delta : -delta;
      if (g.joints.theta1 < cfg.base_min - actuation::kAngleSlack ||
          g.joints.theta1 > cfg.base_max + actuation::kAngleSlack) {
        throw Error(ErrorCode::UnreachableStep, "base azimuth would leave its travel");
      }
      goals.push_back(g);
      break;
    }
    case IntentKind::MoveTo: {
      const auto& p = std::get<grammar::MoveToParams>(intent.params);
      const PlanarTarget target = kinematics::target_from_xyz(p.x, p.y, p.z);
      const auto ik = kinematics::solve_ik(geom, target);
      TimedGoal g{GoalKind::Move, current, cfg.move_time_ms};
      g.joints.theta1 = target.theta1;
      g.joints.theta2 = ik.joints.theta2;
      g.joints.theta3 = ik.joints.theta3;
      g.joints.theta4 = ik.joints.theta4;
      goals.push_back(g);
      break;
    }
    case IntentKind::Pick:
    case IntentKind::Pull:
    case IntentKind::Dance:
    case IntentKind::Home: {
      const std::string name = *script_for(intent.kind);
      auto it = scripts.find(name);
      if (it == scripts.end()) throw Error(ErrorCode::UnknownScript, "no script named " + name);
      for (const auto& step : it->second.steps) {
        // scripts are validated at load; re-check against this geometry
        kinematics::IkResult ik;
        try {
          ik = kinematics::solve_ik(geom, step.target);
        } catch (const Error& e) {
          throw Error(ErrorCode::UnreachableStep, name + ": " + e.what());
        }
        JointState q = resolve_step(step);
        q.theta2 = ik.joints.theta2;
        q.theta3 = ik.joints.theta3;
        q.theta4 = ik.joints.theta4;
        goals.push_back({GoalKind::Move, q, step.time_ms});
      }
      break;
    }
    case IntentKind::Stop:
      break;
  }
  return goals;
}

}  // namespace voicearm::choreo

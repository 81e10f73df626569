/**
 * @file persistence.hpp
 * @brief JSON files: calibration profile, command dictionary, session
 *        configuration. Scripts live in choreography.hpp.
 *
 * Calibration (angles in radians, widths in microseconds):
 *
 *     {"channels": [{"id": 0, "joint": "theta1", "min_pulse": 1000,
 *                    "max_pulse": 2000, "min_angle": 0.0,
 *                    "max_angle": 3.141592653589793, "inverted": false,
 *                    "model": "HS-422"}, ...]}
 *
 * Dictionary:
 *
 *     [{"phrase": "turn left {num}", "intent": "Turn", "params": ["degrees"]}, ...]
 *
 * Session config (relative paths resolve against the config's directory):
 *
 *     {"geometry": {"l1": 100, "l2": 100}, "calibration": "calibration.json",
 *      "dictionary": "dictionary.json", "scripts": "scripts.json",
 *      "tick_budget": 2000, "slew_limit": 4.987}
 */
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "voicearm/actuation.hpp"
#include "voicearm/command_grammar.hpp"
#include "voicearm/error.hpp"
#include "voicearm/firmware_plant.hpp"
#include "voicearm/json_util.hpp"
#include "voicearm/kinematics.hpp"

namespace voicearm::persistence {

using json_util::json;

// --- calibration -----------------------------------------------------------

inline json profile_to_json(const actuation::CalibrationProfile& profile) {
  json chans = json::array();
  for (const auto& ch : profile.channels()) {
    chans.push_back({{"id", ch.id},
                     {"joint", std::string(actuation::joint_name(ch.joint))},
                     {"min_pulse", ch.min_pulse},
                     {"max_pulse", ch.max_pulse},
                     {"min_angle", ch.min_angle},
                     {"max_angle", ch.max_angle},
                     {"inverted", ch.inverted},
                     {"model", ch.model}});
  }
  return {{"channels", chans}};
}

inline actuation::CalibrationProfile profile_from_json(const json& doc) {
  using namespace json_util;
  const auto& chans = array(doc, "channels", "calibration");
  std::vector<actuation::ServoChannel> out;
  for (std::size_t i = 0; i < chans.size(); ++i) {
    const std::string where = "calibration.channels[" + std::to_string(i) + "]";
    actuation::ServoChannel ch;
    ch.id = integer(chans[i], "id", where);
    const std::string joint = string(chans[i], "joint", where);
    auto j = actuation::joint_from_name(joint);
    if (!j) throw Error(ErrorCode::SchemaError, where + ".joint: unknown joint \"" + joint + "\"");
    ch.joint = *j;
    ch.min_pulse = integer(chans[i], "min_pulse", where);
    ch.max_pulse = integer(chans[i], "max_pulse", where);
    ch.min_angle = number(chans[i], "min_angle", where);
    ch.max_angle = number(chans[i], "max_angle", where);
    if (chans[i].contains("inverted")) {
      if (!chans[i]["inverted"].is_boolean()) {
        throw Error(ErrorCode::SchemaError, where + ".inverted: expected a boolean");
      }
      ch.inverted = chans[i]["inverted"].get<bool>();
    }
    if (chans[i].contains("model")) ch.model = string(chans[i], "model", where);
    out.push_back(ch);
  }
  try {
    return actuation::CalibrationProfile(std::move(out));
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaError, std::string("calibration: ") + e.what());
  }
}

inline actuation::CalibrationProfile load_profile(const std::string& path) {
  return profile_from_json(json_util::parse_file(path));
}

inline void save_profile(const std::string& path, const actuation::CalibrationProfile& profile) {
  json_util::write_file(path, profile_to_json(profile).dump(2) + "\n");
}

// --- dictionary ------------------------------------------------------------

inline json dictionary_to_json(const grammar::Dictionary& dict) {
  json doc = json::array();
  for (const auto& e : dict.entries()) {
    doc.push_back({{"phrase", e.phrase},
                   {"intent", std::string(grammar::to_string(e.intent))},
                   {"params", e.params}});
  }
  return doc;
}

inline grammar::Dictionary dictionary_from_json(const json& doc) {
  using namespace json_util;
  if (!doc.is_array()) throw Error(ErrorCode::SchemaError, "dictionary: expected an array");
  std::vector<grammar::DictionaryEntry> entries;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "dictionary[" + std::to_string(i) + "]";
    grammar::DictionaryEntry e;
    e.phrase = string(doc[i], "phrase", where);
    const std::string kind = string(doc[i], "intent", where);
    auto k = grammar::intent_kind_from_string(kind);
    if (!k) throw Error(ErrorCode::SchemaError, where + ".intent: unknown intent \"" + kind + "\"");
    e.intent = *k;
    for (const auto& p : array(doc[i], "params", where)) {
      if (!p.is_string()) throw Error(ErrorCode::SchemaError, where + ".params: expected strings");
      e.params.push_back(p.get<std::string>());
    }
    entries.push_back(std::move(e));
  }
  try {
    return grammar::Dictionary(entries);
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaError, std::string("dictionary: ") + e.what());
  }
}

inline grammar::Dictionary load_dictionary(const std::string& path) {
  return dictionary_from_json(json_util::parse_file(path));
}

inline void save_dictionary(const std::string& path, const grammar::Dictionary& dict) {
  json_util::write_file(path, dictionary_to_json(dict).dump(2) + "\n");
}

// --- session ---------------------------------------------------------------

struct SessionConfig {
  kinematics::ArmGeometry geometry;
  std::string calibration_path;
  std::string dictionary_path;
  std::string scripts_path;
  int tick_budget = 2000;
  double slew_limit = plant::kDefaultSlewRadPerSec;
};

inline std::string resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) path = base / path;
  return path.lexically_normal().string();
}

inline SessionConfig config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  using namespace json_util;
  SessionConfig cfg;
  const json& geom = field(doc, "geometry", "config");
  cfg.geometry.l1 = number(geom, "l1", "config.geometry");
  cfg.geometry.l2 = number(geom, "l2", "config.geometry");
  try {
    cfg.geometry.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaError, std::string("config.geometry: ") + e.what());
  }
  cfg.calibration_path = resolve(base_dir, string(doc, "calibration", "config"));
  cfg.dictionary_path = resolve(base_dir, string(doc, "dictionary", "config"));
  cfg.scripts_path = resolve(base_dir, string(doc, "scripts", "config"));
  if (doc.contains("tick_budget")) cfg.tick_budget = integer(doc, "tick_budget", "config");
  if (doc.contains("slew_limit")) cfg.slew_limit = number(doc, "slew_limit", "config");
  if (cfg.tick_budget <= 0) throw Error(ErrorCode::SchemaError, "config.tick_budget must be > 0");
  if (!(cfg.slew_limit > 0.0)) throw Error(ErrorCode::SchemaError, "config.slew_limit must be > 0");
  return cfg;
}

inline SessionConfig load_config(const std::string& path) {
  const auto base = std::filesystem::path(path).parent_path();
  return config_from_json(json_util::parse_file(path), base);
}

inline json config_to_json(const SessionConfig& cfg) {
  return {{"geometry", {{"l1", cfg.geometry.l1}, {"l2", cfg.geometry.l2}}},
          {"calibration", cfg.calibration_path},
          {"dictionary", cfg.dictionary_path},
          {"scripts", cfg.scripts_path},
          {"tick_budget", cfg.tick_budget},
          {"slew_limit", cfg.slew_limit}};
}

}  // namespace voicearm::persistence

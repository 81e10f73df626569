#pragma once

#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "voicearm/error.hpp"

namespace voicearm::json_util {

using nlohmann::json;

/// "line L, column C" for a byte offset into `text` (1-based).
inline std::string describe_position(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline json parse(std::string_view text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports the byte just past the offending character
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw Error(ErrorCode::SchemaError,
                source + ": " + describe_position(text, at) + ": malformed JSON");
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

inline json parse_file(const std::string& path) { return parse(read_file(path), path); }

inline const json& field(const json& obj, std::string_view key, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::SchemaError, where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorCode::SchemaError, where + ": missing field \"" + std::string(key) + "\"");
  }
  return *it;
}

inline double number(const json& obj, std::string_view key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number()) {
    throw Error(ErrorCode::SchemaError, where + "." + std::string(key) + ": expected a number");
  }
  return v.get<double>();
}

inline int integer(const json& obj, std::string_view key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::SchemaError, where + "." + std::string(key) + ": expected an integer");
  }
  return v.get<int>();
}

inline std::string string(const json& obj, std::string_view key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_string()) {
    throw Error(ErrorCode::SchemaError, where + "." + std::string(key) + ": expected a string");
  }
  return v.get<std::string>();
}

inline const json& array(const json& obj, std::string_view key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_array()) {
    throw Error(ErrorCode::SchemaError, where + "." + std::string(key) + ": expected an array");
  }
  return v;
}

}  // namespace voicearm::json_util

/**
 * @file command_grammar.hpp
 * @brief Operator text -> intent. Text is normalized, fuzzy-matched
 *        against a phrase dictionary by edit distance, and numeric slots
 *        are bound to typed parameters.
 *
 * Phrases are templates such as "turn left {num}". Slot tokens take no
 * part in the distance: when the input has as many tokens as the
 * template, the tokens in slot positions are skipped; otherwise numeric
 * tokens are skipped. Confidence is 1 - d / max(len) over the remaining
 * text, and a match needs at least 0.75.
 */
#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "voicearm/error.hpp"

namespace voicearm::grammar {

inline constexpr double kAcceptThreshold = 0.75;
inline constexpr std::size_t kMinPhraseSeparation = 3;
inline constexpr std::string_view kSlot = "{num}";

enum class IntentKind { Grip, Hold, Release, Pick, Pull, Dance, Turn, MoveTo, Home, Stop };

inline constexpr IntentKind kAllIntentKinds[] = {
    IntentKind::Grip, IntentKind::Hold,  IntentKind::Release, IntentKind::Pick,
    IntentKind::Pull, IntentKind::Dance, IntentKind::Turn,    IntentKind::MoveTo,
    IntentKind::Home, IntentKind::Stop};

constexpr std::string_view to_string(IntentKind k) {
  switch (k) {
    case IntentKind::Grip: return "Grip";
    case IntentKind::Hold: return "Hold";
    case IntentKind::Release: return "Release";
    case IntentKind::Pick: return "Pick";
    case IntentKind::Pull: return "Pull";
    case IntentKind::Dance: return "Dance";
    case IntentKind::Turn: return "Turn";
    case IntentKind::MoveTo: return "MoveTo";
    case IntentKind::Home: return "Home";
    case IntentKind::Stop: return "Stop";
  }
  return "?";
}

inline std::optional<IntentKind> intent_kind_from_string(std::string_view s) {
  for (IntentKind k : kAllIntentKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

/// Slot names a kind's templates must declare, in order.
inline std::vector<std::string> required_params(IntentKind k) {
  switch (k) {
    case IntentKind::Turn: return {"degrees"};
    case IntentKind::MoveTo: return {"x", "y", "z"};
    default: return {};
  }
}

enum class TurnDirection { Left, Right };

struct TurnParams {
  TurnDirection direction = TurnDirection::Left;
  double degrees = 0.0;

  bool operator==(const TurnParams&) const = default;
};

struct MoveToParams {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const MoveToParams&) const = default;
};

struct Intent {
  IntentKind kind = IntentKind::Stop;
  std::variant<std::monostate, TurnParams, MoveToParams> params;

  bool operator==(const Intent&) const = default;
};

// ---------------------------------------------------------------------------

inline bool is_number(std::string_view tok) {
  if (tok.empty()) return false;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

/// Lowercase, split on whitespace and punctuation. Apostrophes vanish
/// ("don't" -> "dont"); '-' and '.' survive inside numbers.
inline std::vector<std::string> normalize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(std::move(cur));
    cur.clear();
  };
  auto digit_at = [&](std::size_t i) {
    return i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]));
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '\'') {
      continue;
    } else if (c == '-' && cur.empty() && (digit_at(i + 1) || (text.size() > i + 2 && text[i + 1] == '.' && digit_at(i + 2)))) {
      cur.push_back('-');
    } else if (c == '.' && digit_at(i + 1) &&
               std::all_of(cur.begin(), cur.end(), [](char d) { return std::isdigit(static_cast<unsigned char>(d)) || d == '-'; }) &&
               cur.find('.') == std::string::npos) {
      cur.push_back('.');
    } else {
      flush();
    }
  }
  flush();
  if (tokens.empty()) throw Error(ErrorCode::EmptyInput, "no words in input");
  return tokens;
}

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

struct DictionaryEntry {
  std::string phrase;
  IntentKind intent = IntentKind::Stop;
  std::vector<std::string> params;

  bool operator==(const DictionaryEntry&) const = default;
};

/// A compiled dictionary entry: tokenized template and its fixed words.
struct Template {
  DictionaryEntry entry;
  std::vector<std::string> tokens;   // "{num}" kept as a token
  std::vector<std::size_t> slots;    // indices of "{num}" tokens
  std::string fixed_text;            // tokens minus slots, space-joined
  std::optional<TurnDirection> direction;
};

inline Template compile_template(const DictionaryEntry& e) {
  Template t;
  t.entry = e;
  std::string_view rest = e.phrase;
  // split on whitespace only; slot markers must survive
  std::string cur;
  for (char c : rest) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) t.tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) t.tokens.push_back(std::move(cur));

  std::vector<std::string> fixed;
  for (std::size_t i = 0; i < t.tokens.size(); ++i) {
    auto& tok = t.tokens[i];
    if (tok == kSlot) {
      t.slots.push_back(i);
      continue;
    }
    if (tok.find('{') != std::string::npos || tok.find('}') != std::string::npos) {
      throw Error(ErrorCode::SchemaError, "phrase \"" + e.phrase + "\": unknown slot " + tok);
    }
    const auto norm = normalize(tok);
    if (norm.size() != 1 || norm.front() != tok) {
      throw Error(ErrorCode::SchemaError,
                  "phrase \"" + e.phrase + "\" is not in normalized form (token \"" + tok + "\")");
    }
    if (tok == "left") t.direction = TurnDirection::Left;
    if (tok == "right") t.direction = TurnDirection::Right;
    fixed.push_back(tok);
  }
  t.fixed_text = join(fixed);
  return t;
}

/// Immutable, validated phrase dictionary.
class Dictionary {
 public:
  Dictionary() = default;

  explicit Dictionary(const std::vector<DictionaryEntry>& entries) {
    if (entries.empty()) throw Error(ErrorCode::SchemaError, "dictionary is empty");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      const std::string where = "entries[" + std::to_string(i) + "]";
      Template t = compile_template(e);
      if (t.fixed_text.empty()) {
        throw Error(ErrorCode::SchemaError, where + ".phrase has no fixed words");
      }
      if (t.slots.size() != e.params.size()) {
        throw Error(ErrorCode::SchemaError, where + ".params: " + std::to_string(t.slots.size()) +
                                                " slots but " + std::to_string(e.params.size()) +
                                                " parameter names");
      }
      if (e.params != required_params(e.intent)) {
        throw Error(ErrorCode::SchemaError, where + ".params do not match intent " +
                                                std::string(to_string(e.intent)));
      }
      if (e.intent == IntentKind::Turn && !t.direction) {
        throw Error(ErrorCode::SchemaError, where + ".phrase: Turn needs 'left' or 'right'");
      }
      for (std::size_t j = 0; j < templates_.size(); ++j) {
        const auto& other = templates_[j];
        if (join(other.tokens) == join(t.tokens)) {
          throw Error(ErrorCode::SchemaError, where + ".phrase duplicates entries[" +
                                                  std::to_string(j) + "]");
        }
        const std::size_t d = edit_distance(other.fixed_text, t.fixed_text);
        if (d < kMinPhraseSeparation) {
          throw Error(ErrorCode::SchemaError,
                      where + ".phrase \"" + e.phrase + "\" is within edit distance " +
                          std::to_string(d) + " of \"" + other.entry.phrase + "\"");
        }
      }
      templates_.push_back(std::move(t));
    }
  }

  const std::vector<Template>& templates() const { return templates_; }
  std::size_t size() const { return templates_.size(); }

  std::vector<DictionaryEntry> entries() const {
    std::vector<DictionaryEntry> out;
    for (const auto& t : templates_) out.push_back(t.entry);
    return out;
  }

 private:
  std::vector<Template> templates_;
};

struct MatchResult {
  Intent intent;  // params are bound later by parse_params
  double confidence = 0.0;
  std::string matched_phrase;
  std::size_t entry_index = 0;
  std::vector<std::string> tokens;
};

/// Input text comparable with `t.fixed_text`.
inline std::string comparable_input(const Template& t, const std::vector<std::string>& tokens) {
  if (t.slots.empty()) return join(tokens);
  std::vector<std::string> kept;
  if (tokens.size() == t.tokens.size()) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (std::find(t.slots.begin(), t.slots.end(), i) == t.slots.end()) kept.push_back(tokens[i]);
    }
  } else {
    for (const auto& tok : tokens) {
      if (!is_number(tok)) kept.push_back(tok);
    }
  }
  return join(kept);
}

inline double match_confidence(const Template& t, const std::vector<std::string>& tokens) {
  const std::string input = comparable_input(t, tokens);
  const std::size_t longest = std::max(input.size(), t.fixed_text.size());
  if (longest == 0) return 1.0;
  const std::size_t d = edit_distance(input, t.fixed_text);
  return 1.0 - static_cast<double>(d) / static_cast<double>(longest);
}

inline MatchResult match_tokens(const Dictionary& dict, std::vector<std::string> tokens) {
  if (dict.size() == 0) throw Error(ErrorCode::InvalidConfig, "dictionary not loaded");
  const Template* best = nullptr;
  std::size_t best_index = 0;
  double best_conf = -1.0;
  for (std::size_t i = 0; i < dict.templates().size(); ++i) {
    const auto& t = dict.templates()[i];
    const double conf = match_confidence(t, tokens);
    if (conf > best_conf || (conf == best_conf && t.entry.phrase < best->entry.phrase)) {
      best = &t;
      best_index = i;
      best_conf = conf;
    }
  }
  if (best_conf < kAcceptThreshold) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", best_conf);
    throw Error(ErrorCode::NotRecognized, "best match \"" + best->entry.phrase +
                                              "\" has confidence " + buf);
  }
  MatchResult r;
  r.intent.kind = best->entry.intent;
  r.confidence = best_conf;
  r.matched_phrase = best->entry.phrase;
  r.entry_index = best_index;
  r.tokens = std::move(tokens);
  return r;
}

inline MatchResult match_command(const Dictionary& dict, std::string_view text) {
  return match_tokens(dict, normalize(text));
}

inline double parse_number(std::string_view tok, const std::string& name) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::BadParameter, name + ": \"" + std::string(tok) + "\" is not a number");
  }
  return v;
}

/// Binds slot values: millimetres for coordinates, degrees for turns.
inline Intent parse_params(const Template& t, const std::vector<std::string>& tokens) {
  Intent intent;
  intent.kind = t.entry.intent;
  if (t.slots.empty()) return intent;
  if (tokens.size() != t.tokens.size()) {
    throw Error(ErrorCode::BadParameter, "expected " + std::to_string(t.slots.size()) +
                                             " numeric value(s) for \"" + t.entry.phrase + "\"");
  }
  std::vector<double> values;
  for (std::size_t k = 0; k < t.slots.size(); ++k) {
    values.push_back(parse_number(tokens[t.slots[k]], t.entry.params[k]));
  }
  if (intent.kind == IntentKind::Turn) {
    if (values[0] < 0.0 || values[0] > 360.0) {
      throw Error(ErrorCode::BadParameter, "degrees must lie in [0, 360]");
    }
    intent.params = TurnParams{*t.direction, values[0]};
  } else if (intent.kind == IntentKind::MoveTo) {
    intent.params = MoveToParams{values[0], values[1], values[2]};
  }
  return intent;
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// Spoken-response transcript for a finished command.
inline std::string respond(const std::optional<Intent>& intent, std::optional<ErrorCode> error) {
  if (error) {
    switch (*error) {
      case ErrorCode::EmptyInput: return "I did not hear a command.";
      case ErrorCode::NotRecognized: return "Command not recognized.";
      case ErrorCode::BadParameter: return "I could not understand the numbers in that command.";
      case ErrorCode::Unreachable:
      case ErrorCode::UnreachableStep:
      case ErrorCode::AngleOutOfRange:
      case ErrorCode::DegenerateTarget: return "Target out of reach.";
      case ErrorCode::NotSettled: return "The arm did not reach the goal in time.";
      case ErrorCode::Frozen: return "I am holding an object. Say release first.";
      case ErrorCode::UnknownScript: return "I do not know how to do that yet.";
      default: return "Something went wrong.";
    }
  }
  if (!intent) return "Done.";
  switch (intent->kind) {
    case IntentKind::Grip: return "Gripping.";
    case IntentKind::Hold: return "Holding.";
    case IntentKind::Release: return "Releasing.";
    case IntentKind::Pick: return "Picking up.";
    case IntentKind::Pull: return "Pulling.";
    case IntentKind::Dance: return "Dancing.";
    case IntentKind::Home: return "Going home.";
    case IntentKind::Stop: return "Stopping.";
    case IntentKind::Turn: {
      const auto& p = std::get<TurnParams>(intent->params);
      return std::string("Turning ") + (p.direction == TurnDirection::Left ? "left " : "right ") +
             format_number(p.degrees) + " degrees.";
    }
    case IntentKind::MoveTo: {
      const auto& p = std::get<MoveToParams>(intent->params);
      return "Moving to " + format_number(p.x) + ", " + format_number(p.y) + ", " +
             format_number(p.z) + ".";
    }
  }
  return "Done.";
}

}  // namespace voicearm::grammar

/**
 * @file wire_protocol.hpp
 * @brief PC -> controller link: ASCII servo frames, 8N1 asynchronous
 *        framing, and RS-232 / TTL level mapping.
 *
 * Frame grammar (one command, no spaces):
 *
 *     frame := group+ ('T' ms)? CR
 *     group := '#' channel 'P' width
 *
 * e.g. "#0P1000#1P2000T500\r". Channels 0-5, widths 500-2500 us,
 * move time 0-65535 ms. Decoding also accepts lowercase 'p' and 't'.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "voicearm/error.hpp"

namespace voicearm::wire {

inline constexpr int kMaxChannel = 5;
inline constexpr int kMinWidthUs = 500;
inline constexpr int kMaxWidthUs = 2500;
inline constexpr int kMaxMoveTimeMs = 65535;
inline constexpr char kTerminator = '\r';

struct ServoGroup {
  int channel = 0;
  int width_us = 0;

  bool operator==(const ServoGroup&) const = default;
};

struct WireFrame {
  std::vector<ServoGroup> groups;
  std::optional<int> move_time_ms;

  bool operator==(const WireFrame&) const = default;
};

inline void validate_frame(const WireFrame& frame) {
  if (frame.groups.empty()) throw Error(ErrorCode::InvalidFrame, "frame has no groups");
  std::vector<bool> seen(kMaxChannel + 1, false);
  for (const auto& g : frame.groups) {
    if (g.channel < 0 || g.channel > kMaxChannel) {
      throw Error(ErrorCode::InvalidFrame, "channel " + std::to_string(g.channel) + " outside 0-5");
    }
    if (seen[static_cast<std::size_t>(g.channel)]) {
      throw Error(ErrorCode::InvalidFrame, "duplicate channel " + std::to_string(g.channel));
    }
    seen[static_cast<std::size_t>(g.channel)] = true;
    if (g.width_us < kMinWidthUs || g.width_us > kMaxWidthUs) {
      throw Error(ErrorCode::InvalidFrame,
                  "width " + std::to_string(g.width_us) + " us outside protocol bounds");
    }
  }
  if (frame.move_time_ms && (*frame.move_time_ms < 0 || *frame.move_time_ms > kMaxMoveTimeMs)) {
    throw Error(ErrorCode::InvalidFrame, "move time out of range");
  }
}

inline std::string encode_frame(const WireFrame& frame) {
  validate_frame(frame);
  std::vector<ServoGroup> groups = frame.groups;
  std::sort(groups.begin(), groups.end(),
            [](const ServoGroup& x, const ServoGroup& y) { return x.channel < y.channel; });
  std::string out;
  for (const auto& g : groups) {
    out += '#';
    out += std::to_string(g.channel);
    out += 'P';
    out += std::to_string(g.width_us);
  }
  if (frame.move_time_ms) {
    out += 'T';
    out += std::to_string(*frame.move_time_ms);
  }
  out += kTerminator;
  return out;
}

namespace detail {

class FrameReader {
 public:
  explicit FrameReader(std::string_view in) : in_(in) {}

  bool at_end() const { return pos_ >= in_.size(); }
  std::size_t pos() const { return pos_; }
  char peek() const { return in_[pos_]; }
  void advance() { ++pos_; }

  bool accept(char upper) {
    if (at_end()) return false;
    const char c = peek();
    if (c == upper || c == static_cast<char>(upper - 'A' + 'a')) {
      ++pos_;
      return true;
    }
    return false;
  }

  int number(int lo, int hi, std::string_view what) {
    const std::size_t start = pos_;
    long value = 0;
    while (!at_end() && peek() >= '0' && peek() <= '9') {
      value = value * 10 + (peek() - '0');
      if (value > hi) throw ParseError(start, std::string(what) + " out of range");
      ++pos_;
    }
    if (pos_ == start) {
      if (at_end()) throw ParseError(pos_, "missing terminator");
      throw ParseError(pos_, "expected digits for " + std::string(what));
    }
    if (value < lo) throw ParseError(start, std::string(what) + " out of range");
    return static_cast<int>(value);
  }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses exactly one CR-terminated frame. Groups come back in ascending
/// channel order regardless of their order on the wire.
inline WireFrame decode_frame(std::string_view bytes) {
  detail::FrameReader rd(bytes);
  WireFrame frame;
  std::vector<bool> seen(kMaxChannel + 1, false);

  while (!rd.at_end() && rd.peek() == '#') {
    rd.advance();
    const std::size_t ch_pos = rd.pos();
    const int ch = rd.number(0, kMaxChannel, "channel");
    if (seen[static_cast<std::size_t>(ch)]) throw ParseError(ch_pos, "duplicate channel");
    seen[static_cast<std::size_t>(ch)] = true;
    if (!rd.accept('P')) {
      if (rd.at_end()) throw ParseError(rd.pos(), "missing terminator");
      throw ParseError(rd.pos(), "expected 'P'");
    }
    const int width = rd.number(kMinWidthUs, kMaxWidthUs, "width");
    frame.groups.push_back({ch, width});
  }
  if (frame.groups.empty()) {
    if (rd.at_end()) throw ParseError(rd.pos(), "missing terminator");
    throw ParseError(rd.pos(), "expected '#'");
  }
  if (rd.accept('T')) frame.move_time_ms = rd.number(0, kMaxMoveTimeMs, "move time");
  if (rd.at_end()) throw ParseError(rd.pos(), "missing terminator");
  if (rd.peek() != kTerminator) throw ParseError(rd.pos(), "unexpected byte");
  rd.advance();
  if (!rd.at_end()) throw ParseError(rd.pos(), "trailing bytes after terminator");

  std::sort(frame.groups.begin(), frame.groups.end(),
            [](const ServoGroup& x, const ServoGroup& y) { return x.channel < y.channel; });
  return frame;
}

/// Renders a frame for a trace log: CR becomes the two characters "\r".
inline std::string render_frame(std::string_view encoded) {
  std::string out;
  for (char c : encoded) {
    if (c == '\r') {
      out += "\\r";
    } else {
      out += c;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Asynchronous serial framing

struct UartConfig {
  int baud = 9600;
  int data_bits = 8;
  char parity = 'N';
  int stop_bits = 1;

  /// Only 8N1 is modeled.
  void validate() const {
    if (baud <= 0 || data_bits != 8 || parity != 'N' || stop_bits != 1) {
      throw Error(ErrorCode::InvalidConfig, "only 8N1 at a positive baud rate is supported");
    }
  }

  double bit_time_us() const { return 1e6 / baud; }
};

using Bit = std::uint8_t;

/// Start bit 0, eight data bits LSB first, stop bit 1 per byte.
inline std::vector<Bit> uart_encode(std::span<const std::uint8_t> bytes,
                                    const UartConfig& cfg = {}) {
  cfg.validate();
  std::vector<Bit> bits;
  bits.reserve(bytes.size() * 10);
  for (std::uint8_t byte : bytes) {
    bits.push_back(0);
    for (int i = 0; i < 8; ++i) bits.push_back(static_cast<Bit>((byte >> i) & 1U));
    bits.push_back(1);
  }
  return bits;
}

inline std::vector<Bit> uart_encode(std::string_view text, const UartConfig& cfg = {}) {
  return uart_encode(std::span<const std::uint8_t>(
                         reinterpret_cast<const std::uint8_t*>(text.data()), text.size()),
                     cfg);
}

struct FramingError {
  std::size_t bit_offset = 0;  // index of the start bit
  std::uint8_t data = 0;       // data bits as sampled
  bool truncated = false;      // stream ended mid-character

  bool operator==(const FramingError&) const = default;
};

struct UartDecodeResult {
  std::vector<std::uint8_t> bytes;
  std::vector<FramingError> framing_errors;
};

/// Bytes whose stop bit reads 0 are dropped and reported; the receiver
/// then waits for the line to go idle (1) before hunting for the next
/// start bit.
inline UartDecodeResult uart_decode(std::span<const Bit> bits, const UartConfig& cfg = {}) {
  cfg.validate();
  UartDecodeResult out;
  std::size_t i = 0;
  const std::size_t n = bits.size();
  while (i < n) {
    if (bits[i] != 0) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (n - start < 10) {
      std::uint8_t partial = 0;
      for (std::size_t k = 0; start + 1 + k < n && k < 8; ++k) {
        partial |= static_cast<std::uint8_t>((bits[start + 1 + k] & 1U) << k);
      }
      out.framing_errors.push_back({start, partial, true});
      break;
    }
    std::uint8_t value = 0;
    for (std::size_t k = 0; k < 8; ++k) {
      value |= static_cast<std::uint8_t>((bits[start + 1 + k] & 1U) << k);
    }
    const Bit stop = bits[start + 9];
    i = start + 10;
    if (stop == 1) {
      out.bytes.push_back(value);
      continue;
    }
    out.framing_errors.push_back({start, value, false});
    while (i < n && bits[i] == 0) ++i;  // resync: wait for idle, next 1->0 is a start bit
  }
  return out;
}

/// Line time for a byte string at the configured baud.
inline double transmission_time_us(std::size_t byte_count, const UartConfig& cfg = {}) {
  return static_cast<double>(byte_count) * 10.0 * cfg.bit_time_us();
}

// ---------------------------------------------------------------------------
// RS-232 / TTL levels

enum class LineType { Data, Control };
enum class Direction { TtlToRs232, Rs232ToTtl };

struct VoltageSample {
  LineType line_type = LineType::Data;
  double volts = 0.0;
};

inline constexpr double kRs232MinVolts = 3.0;
inline constexpr double kRs232MaxVolts = 15.0;
inline constexpr double kNominalRs232Volts = 12.0;
inline constexpr double kTtlHighVolts = 5.0;

/// Logic level of an RS-232 voltage on a line. Data lines are negative
/// logic (+V = 0), control lines positive logic (+V = 1).
inline int rs232_classify(const VoltageSample& sample) {
  const double mag = std::fabs(sample.volts);
  if (!std::isfinite(sample.volts) || mag < kRs232MinVolts || mag > kRs232MaxVolts) {
    throw Error(ErrorCode::UndefinedRegion,
                std::to_string(sample.volts) + " V is outside the +/-3..15 V bands");
  }
  const bool positive = sample.volts > 0.0;
  if (sample.line_type == LineType::Data) return positive ? 0 : 1;
  return positive ? 1 : 0;
}

/// Output voltage of the level converter for a line at logic `level`.
/// `level` is the line's logic level in its own convention; the converter
/// inverts voltage (TTL 0 V <-> +12 V, TTL 5 V <-> -12 V) so
///
///   line     level   RS-232   TTL
///   Data     0       +12 V    0 V
///   Data     1       -12 V    5 V
///   Control  0       -12 V    5 V
///   Control  1       +12 V    0 V
inline double max232_transform(int level, Direction direction, LineType line_type) {
  if (level != 0 && level != 1) {
    throw Error(ErrorCode::InvalidConfig, "logic level must be 0 or 1");
  }
  // true when the line at this level sits at TTL 0 V / RS-232 positive
  const bool low_ttl = (line_type == LineType::Data) ? (level == 0) : (level == 1);
  if (direction == Direction::TtlToRs232) return low_ttl ? kNominalRs232Volts : -kNominalRs232Volts;
  return low_ttl ? 0.0 : kTtlHighVolts;
}

}  // namespace voicearm::wire

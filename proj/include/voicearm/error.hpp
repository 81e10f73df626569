#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace voicearm {

enum class ErrorCode {
  Unreachable,
  DegenerateTarget,
  AngleOutOfRange,
  PulseOutOfRange,
  MissingChannel,
  InvalidDuty,
  InvalidFrame,
  ParseError,
  UndefinedRegion,
  BufferOverrun,
  NotSettled,
  EmptyInput,
  NotRecognized,
  BadParameter,
  UnknownScript,
  UnreachableStep,
  ScriptValidationError,
  SchemaError,
  IoError,
  InvalidConfig,
  Frozen,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::AngleOutOfRange: return "AngleOutOfRange";
    case ErrorCode::PulseOutOfRange: return "PulseOutOfRange";
    case ErrorCode::MissingChannel: return "MissingChannel";
    case ErrorCode::InvalidDuty: return "InvalidDuty";
    case ErrorCode::InvalidFrame: return "InvalidFrame";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UndefinedRegion: return "UndefinedRegion";
    case ErrorCode::BufferOverrun: return "BufferOverrun";
    case ErrorCode::NotSettled: return "NotSettled";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NotRecognized: return "NotRecognized";
    case ErrorCode::BadParameter: return "BadParameter";
    case ErrorCode::UnknownScript: return "UnknownScript";
    case ErrorCode::UnreachableStep: return "UnreachableStep";
    case ErrorCode::ScriptValidationError: return "ScriptValidationError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Frozen: return "Frozen";
  }
  return "Unknown";
}

/// Base of every error raised by the library. The code is the stable,
/// machine-readable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Malformed wire input. `offset` is the byte index where decoding stopped.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& message)
      : Error(ErrorCode::ParseError, message + " at byte " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace voicearm

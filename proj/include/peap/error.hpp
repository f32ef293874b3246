#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace peap {

enum class ErrorCode {
  EmptyInput,
  GlyphUnavailable,
  InvalidSpec,
  MaskMismatch,
  InvalidConfig,
  CoordinateOutOfRange,
  EmptyRange,
  LengthMismatch,
  DegenerateVariance,
  SandboxUnavailable,
  NonpositiveBaseline,
  SchemaError,
  IncompatibleMode,
  TransportError,
  AuthError,
  NoAnswerFound,
  MismatchedRuns,
  CodecError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& message)
      : Error(ErrorCode::SchemaError, "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace peap

#include "peap/error.hpp"

namespace peap {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::GlyphUnavailable: return "GlyphUnavailable";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::MaskMismatch: return "MaskMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::CoordinateOutOfRange: return "CoordinateOutOfRange";
    case ErrorCode::EmptyRange: return "EmptyRange";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::SandboxUnavailable: return "SandboxUnavailable";
    case ErrorCode::NonpositiveBaseline: return "NonpositiveBaseline";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IncompatibleMode: return "IncompatibleMode";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::NoAnswerFound: return "NoAnswerFound";
    case ErrorCode::MismatchedRuns: return "MismatchedRuns";
    case ErrorCode::CodecError: return "CodecError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace peap

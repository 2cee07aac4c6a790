// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ltest {

enum class ErrorCode {
  ProtocolError,
  ParseError,
  InsufficientPTS,
  InsufficientLactatePoints,
  ChannelTooShort,
  SingularFit,
  DegenerateCurve,
  GridMismatch,
  EmptyCohort,
  UnknownAthlete,
  MissingAthlete,
  ShapeMismatch,
  NumericalFailure,
  OutOfScope,
  DegenerateVariance,
  InvalidArgument,
  IoError,
};

inline constexpr std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::ProtocolError: return "PROTOCOL_ERROR";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::InsufficientPTS: return "INSUFFICIENT_PTS";
    case ErrorCode::InsufficientLactatePoints: return "INSUFFICIENT_LACTATE_POINTS";
    case ErrorCode::ChannelTooShort: return "CHANNEL_TOO_SHORT";
    case ErrorCode::SingularFit: return "SINGULAR_FIT";
    case ErrorCode::DegenerateCurve: return "DEGENERATE_CURVE";
    case ErrorCode::GridMismatch: return "GRID_MISMATCH";
    case ErrorCode::EmptyCohort: return "EMPTY_COHORT";
    case ErrorCode::UnknownAthlete: return "UNKNOWN_ATHLETE";
    case ErrorCode::MissingAthlete: return "MISSING_ATHLETE";
    case ErrorCode::ShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::NumericalFailure: return "NUMERICAL_FAILURE";
    case ErrorCode::OutOfScope: return "OUT_OF_SCOPE";
    case ErrorCode::DegenerateVariance: return "DEGENERATE_VARIANCE";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::IoError: return "IO_ERROR";
  }
  return "UNKNOWN";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace ltest

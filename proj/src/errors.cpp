#include "rattleback/errors.hpp"

namespace rattleback {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonIntegerLambda: return "NonIntegerLambda";
    case ErrorCode::SingularPlane: return "SingularPlane";
    case ErrorCode::NotUnimodular: return "NotUnimodular";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NoCrossings: return "NoCrossings";
    case ErrorCode::WrongStratum: return "WrongStratum";
    case ErrorCode::SeedNotFound: return "SeedNotFound";
    case ErrorCode::ContinuationStalled: return "ContinuationStalled";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::ParamMissing: return "ParamMissing";
    case ErrorCode::BasinViolation: return "BasinViolation";
    case ErrorCode::EmptySeries: return "EmptySeries";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what),
      code_(code) {}

bool Error::is_numerical() const noexcept {
  switch (code_) {
    case ErrorCode::StepUnderflow:
    case ErrorCode::NonFinite:
    case ErrorCode::NoCrossings:
    case ErrorCode::SeedNotFound:
    case ErrorCode::ContinuationStalled:
    case ErrorCode::Overflow:
    case ErrorCode::BasinViolation:
      return true;
    default:
      return false;
  }
}

}  // namespace rattleback

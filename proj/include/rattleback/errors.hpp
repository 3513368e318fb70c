#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rattleback {

enum class ErrorCode {
  InvalidArgument,
  NonIntegerLambda,
  SingularPlane,
  NotUnimodular,
  StepUnderflow,
  NonFinite,
  NoCrossings,
  WrongStratum,
  SeedNotFound,
  ContinuationStalled,
  Overflow,
  ParamMissing,
  BasinViolation,
  EmptySeries,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above.
///
/// Codes split into two families: argument/domain problems that the caller can
/// fix by changing inputs, and numerical failures that happen while computing.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

  /// True for failures that arise during a computation (integration,
  /// continuation, root finding) rather than from rejected inputs.
  bool is_numerical() const noexcept;

 private:
  ErrorCode code_;
};

}  // namespace rattleback

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stochsplit {

enum class ErrorCode {
  EmptyTree,
  DuplicateScenario,
  BadProbabilityMass,
  NonPositiveProbability,
  StageOutOfRange,
  ShapeMismatch,
  DimensionMismatch,
  InvalidSpec,
  NonPositiveGamma,
  ToleranceError,
  BadAlpha,
  UnsupportedComposite,
  RangeConditionViolated,
  ParameterOutOfRange,
  NonTrivialConstraint,
  NonConstantThreshold,
  BadGrid,
  UnsupportedInstance,
  TooManyFreeCoordinates,
  ParseError,
  ValidationError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. `what()` starts with the code name,
/// e.g. "BadProbabilityMass: probabilities sum to 1.1".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stochsplit

#include "stochsplit/error.hpp"

namespace stochsplit {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyTree: return "EmptyTree";
    case ErrorCode::DuplicateScenario: return "DuplicateScenario";
    case ErrorCode::BadProbabilityMass: return "BadProbabilityMass";
    case ErrorCode::NonPositiveProbability: return "NonPositiveProbability";
    case ErrorCode::StageOutOfRange: return "StageOutOfRange";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::NonPositiveGamma: return "NonPositiveGamma";
    case ErrorCode::ToleranceError: return "ToleranceError";
    case ErrorCode::BadAlpha: return "BadAlpha";
    case ErrorCode::UnsupportedComposite: return "UnsupportedComposite";
    case ErrorCode::RangeConditionViolated: return "RangeConditionViolated";
    case ErrorCode::ParameterOutOfRange: return "ParameterOutOfRange";
    case ErrorCode::NonTrivialConstraint: return "NonTrivialConstraint";
    case ErrorCode::NonConstantThreshold: return "NonConstantThreshold";
    case ErrorCode::BadGrid: return "BadGrid";
    case ErrorCode::UnsupportedInstance: return "UnsupportedInstance";
    case ErrorCode::TooManyFreeCoordinates: return "TooManyFreeCoordinates";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

}  // namespace stochsplit

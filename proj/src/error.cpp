#include "rducb/error.hpp"

namespace rducb {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter: return "invalid-parameter";
    case ErrorCode::kCycleDetected: return "cycle-detected";
    case ErrorCode::kDimensionOutOfRange: return "dimension-out-of-range";
    case ErrorCode::kDimensionUncovered: return "dimension-uncovered";
    case ErrorCode::kComponentTooLarge: return "component-too-large";
    case ErrorCode::kInvalidMatrix: return "invalid-matrix";
    case ErrorCode::kNumericalError: return "numerical-error";
    case ErrorCode::kFitError: return "fit-error";
    case ErrorCode::kResourceError: return "resource-error";
    case ErrorCode::kBlackboxError: return "blackbox-error";
    case ErrorCode::kUnknownOptimum: return "unknown-optimum";
    case ErrorCode::kParseError: return "parse-error";
  }
  return "unknown";
}

}  // namespace rducb

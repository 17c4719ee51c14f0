#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rwre {

enum class ErrorCode {
  kNotSimplex,
  kEllipticityViolated,
  kInvalidArgument,
  kMaxStepsExceeded,
  kMalformedPath,
  kNumericalOverflow,
  kNotConverged,
  kInsufficientData,
  kDegenerateDenominator,
  kSeriesDiverged,
  kNotDriftPositive,
  kSpectralRadiusAtLeastOne,
  kConditioningStarved,
  kDenominatorNonpositive,
  kConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotSimplex: return "NotSimplex";
    case ErrorCode::kEllipticityViolated: return "EllipticityViolated";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMaxStepsExceeded: return "MaxStepsExceeded";
    case ErrorCode::kMalformedPath: return "MalformedPath";
    case ErrorCode::kNumericalOverflow: return "NumericalOverflow";
    case ErrorCode::kNotConverged: return "NotConverged";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kDegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::kSeriesDiverged: return "SeriesDiverged";
    case ErrorCode::kNotDriftPositive: return "NotDriftPositive";
    case ErrorCode::kSpectralRadiusAtLeastOne: return "SpectralRadiusAtLeastOne";
    case ErrorCode::kConditioningStarved: return "ConditioningStarved";
    case ErrorCode::kDenominatorNonpositive: return "DenominatorNonpositive";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can branch on the kind of failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rwre

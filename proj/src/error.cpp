#include "udkf/error.hpp"

namespace udkf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::IndefiniteMatrix: return "IndefiniteMatrix";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::ZeroDrPivot: return "ZeroDrPivot";
    case ErrorCode::SingularH: return "SingularH";
    case ErrorCode::InvalidDelta: return "InvalidDelta";
    case ErrorCode::NonStationary: return "NonStationary";
    case ErrorCode::NonPositiveVariance: return "NonPositiveVariance";
    case ErrorCode::SingularInnovationCov: return "SingularInnovationCov";
    case ErrorCode::NonFiniteLogLik: return "NonFiniteLogLik";
    case ErrorCode::NonFiniteScore: return "NonFiniteScore";
    case ErrorCode::InvalidBounds: return "InvalidBounds";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::CsvParseError: return "CsvParseError";
    case ErrorCode::DegenerateData: return "DegenerateData";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what,
             std::optional<std::size_t> step)
    : std::runtime_error(std::string(to_string(code)) + ": " + what +
                         (step ? " (step " + std::to_string(*step) + ")" : "")),
      code_(code),
      step_(step),
      message_(what) {}

Error Error::at_step(std::size_t k) const {
  if (step_) return *this;
  return Error(code_, message_, k);
}

}  // namespace udkf

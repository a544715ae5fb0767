#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace udkf {

enum class ErrorCode {
  NotSymmetric,
  IndefiniteMatrix,
  DegenerateWeights,
  ZeroDrPivot,
  SingularH,
  InvalidDelta,
  NonStationary,
  NonPositiveVariance,
  SingularInnovationCov,
  NonFiniteLogLik,
  NonFiniteScore,
  InvalidBounds,
  InvalidArgument,
  CsvParseError,
  DegenerateData,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the library is reported through this type.
// Filter errors carry the index of the failing measurement step (1-based).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::size_t> step = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> step() const noexcept { return step_; }

  // Returns a copy tagged with the step index; keeps an existing tag.
  Error at_step(std::size_t k) const;

 private:
  ErrorCode code_;
  std::optional<std::size_t> step_;
  std::string message_;
};

}  // namespace udkf

#pragma once

#include "udkf/matops.hpp"

#include <cmath>
#include <cstddef>
#include <numbers>

namespace udkf {

/// Log-likelihood value and (optionally) its gradient.
struct LogLikEval {
  double value = 0.0;
  VectorXd grad;  // empty when not requested
};

/// c0 = m/2 ln(2 pi) per executed measurement update. The sum runs over
/// the measurement updates k = 1..N for both the dense and the UD filters.
inline double loglik_constant(Index m, std::size_t updates) {
  return 0.5 * static_cast<double>(m) * std::log(2.0 * std::numbers::pi) *
         static_cast<double>(updates);
}

}  // namespace udkf

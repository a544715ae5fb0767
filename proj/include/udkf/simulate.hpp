#pragma once

// Seedable data generation. Normal variates come from the Marsaglia polar
// method on top of std::mt19937_64, so a seed reproduces the same stream
// bit for bit on every platform with IEEE doubles.

#include "udkf/model.hpp"
#include "udkf/models.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace udkf {

class NormalRng {
 public:
  explicit NormalRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (polar method, second variate cached).
  double normal();
  /// x ~ N(0, P) with P = U diag(d) U'.
  VectorXd normal_vector(const UdFactor& cov);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct SimulatedData {
  Dataset data;
  std::vector<VectorXd> alpha;  // true states alpha_1..alpha_N
};

/// Draws alpha_0 ~ N(alpha0, Pi_0) and iterates the model equations for
/// k = 0..N with joint (eta_k, eps_k) ~ N(0, [Q S; S' H]). y_0 becomes the
/// pre-sample measurement. LTI models with d > 0 get iid N(0, 1)
/// regressors; pairwise models use x_k = y_{k-1} (also stored in data.x).
/// Models with innovation-driven regressors are rejected (use simulate_tee).
SimulatedData simulate(const Model& model, const VectorXd& theta, std::size_t n,
                       std::uint64_t seed);

/// Starting point of a simulated GARCH-in-Mean path.
struct TeeTruth {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double y0 = 0.0;
};

/// GARCH(1,1)-in-Mean with random-walk mean coefficients:
///   y_k = beta0_k + beta1_k y_{k-1} + delta h_k + sqrt(h_k) z_k,
///   h_{k+1} = a0 + a1 eps_k^2 + b1 h_k,  beta_{j,k+1} = beta_{j,k} + sigma_j w_{j,k}.
/// h_1 is the unconditional variance. alpha_k = [h_k, beta0_k, beta1_k].
SimulatedData simulate_tee(const VectorXd& theta, std::size_t n, std::uint64_t seed,
                           const TeeTruth& truth = {});

/// FNV-1a hash over the bytes of every number in the dataset.
std::uint64_t dataset_hash(const Dataset& data);

}  // namespace udkf

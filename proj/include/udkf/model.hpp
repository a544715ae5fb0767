#pragma once

// State-space model descriptions. A model maps a parameter vector theta to
// the per-step system matrices of
//
//   alpha_{k+1} = T alpha_k + B x_k + eta_k
//   y_k         = Z alpha_k + beta x_k + eps_k,   cov[eta; eps] = [Q S; S' H]
//
// together with their analytic theta-derivatives. Pairwise models use
// x_k := y_{k-1}.

#include "udkf/matops.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace udkf {

enum class ModelKind { LtiMimo, Pairwise };

struct Dims {
  Index n = 0;  // state
  Index m = 0;  // measurement
  Index d = 0;  // regressor
  Index p = 0;  // parameters
};

/// System matrices as the model defines them (or their derivative with
/// respect to one parameter).
struct RawMatrices {
  MatrixXd t, z, b, beta, q, h, s;

  static RawMatrices zeros(const Dims& dims);
};

/// Per-step matrices with the decorrelated "bar" quantities
///   T_bar = T - S H^-1 Z, B_bar = B - S H^-1 beta, Q_bar = Q - S H^-1 S'.
struct StepMatrices {
  MatrixXd t, z, b, beta, q, h, s;
  MatrixXd t_bar, b_bar, q_bar;
  MatrixXd s_hinv;  // S H^-1
  UdFactor ud_q_bar;
  UdFactor ud_h;
};

/// d/dtheta_i of every StepMatrices entry, including the UD factors.
struct StepDerivatives {
  MatrixXd t, z, b, beta, q, h, s;
  MatrixXd t_bar, b_bar, q_bar, s_hinv;
  UdDerivative ud_q_bar;
  UdDerivative ud_h;
};

/// Forms the bars using the UD factors of H (no explicit inverse).
/// Throws SingularH if a D_H entry is not positive.
StepMatrices precompute_bars(const RawMatrices& raw, double eps = kDefaultEps);

/// Differentiates the bars and the UD factors of Q_bar and H.
StepDerivatives differentiate_bars(const StepMatrices& mats,
                                   const RawMatrices& d_raw,
                                   double eps = kDefaultEps);

enum class Phase { TimeUpdate, MeasurementUpdate };

/// What the filter knows when it asks a model for the matrices of step k.
struct FilterContext {
  std::size_t k = 0;
  Phase phase = Phase::TimeUpdate;
  VectorXd y_prev;  // y_{k-1}
  // A posteriori estimate during the time update, a priori estimate
  // alpha_{k|k-1} during the measurement update.
  VectorXd alpha;
  // Sensitivities of `alpha`; empty when no derivatives are propagated.
  std::span<const VectorXd> d_alpha;
};

struct InitialState {
  VectorXd mean;
  MatrixXd pi0;
  std::vector<VectorXd> d_mean;
  std::vector<MatrixXd> d_pi0;
};

/// Observations y_1..y_N plus the pre-sample values used by the first
/// time update.
struct Dataset {
  std::vector<VectorXd> y;
  std::vector<VectorXd> x;  // x_1..x_N; empty means zero regressors
  VectorXd y0;              // empty means zero
  VectorXd x0;              // empty means the model's pre-sample regressor

  std::size_t size() const { return y.size(); }
};

class Model {
 public:
  virtual ~Model() = default;

  virtual ModelKind kind() const = 0;
  virtual Dims dims() const = 0;
  virtual std::vector<std::string> parameter_names() const;

  /// True when raw_matrices does not depend on the step or filter state.
  virtual bool time_invariant() const { return true; }

  /// Throws if theta is outside the model's admissible region.
  virtual void validate(const VectorXd& theta) const;

  virtual InitialState initial_state(const VectorXd& theta) const = 0;
  virtual RawMatrices raw_matrices(const VectorXd& theta,
                                   const FilterContext& ctx) const = 0;
  virtual std::vector<RawMatrices> raw_derivatives(
      const VectorXd& theta, const FilterContext& ctx) const = 0;

  /// Models whose regressor x_k is computed from the innovation e_k
  /// (self-exciting models). Such models must have beta = 0.
  virtual bool innovation_regressor() const { return false; }
  virtual VectorXd regressor_from_innovation(const VectorXd& theta,
                                             const VectorXd& e) const;
  virtual std::vector<VectorXd> regressor_derivatives(
      const VectorXd& theta, const VectorXd& e,
      std::span<const VectorXd> d_e) const;

  /// x_0 when the dataset does not provide one. For pairwise models this is
  /// the pre-sample measurement y_{-1}.
  virtual VectorXd presample_regressor(const VectorXd& theta) const;
};

StepMatrices matrices_at(const Model& model, const VectorXd& theta,
                         const FilterContext& ctx);
std::vector<StepDerivatives> derivatives_at(const Model& model,
                                            const VectorXd& theta,
                                            const FilterContext& ctx,
                                            const StepMatrices& mats);

/// Regressor in effect at step k (0 <= k <= N) from the data alone:
/// x_k for LTI MIMO models, y_{k-1} for pairwise models.
VectorXd data_regressor(const Model& model, const VectorXd& theta,
                        const Dataset& data, std::size_t k);

/// y_{k-1} for measurement step k >= 1 (y_0 is the pre-sample value).
VectorXd previous_measurement(const Model& model, const Dataset& data,
                              std::size_t k);

/// Throws InvalidArgument if the dataset does not match the model sizes.
void check_dataset(const Model& model, const Dataset& data);

}  // namespace udkf

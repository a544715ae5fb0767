#pragma once

// Built-in parameterizations: a generic polynomial-in-theta linear model,
// the ill-conditioned 4-state benchmark, and the time-varying
// GARCH-in-Mean efficiency model.

#include "udkf/model.hpp"

#include <atomic>
#include <optional>
#include <string>
#include <vector>

namespace udkf {

/// Entry-wise polynomial M(theta) = M0 + sum_i theta_i M_i + sum_i theta_i^2 M_ii.
/// Missing coefficient matrices are treated as zero.
struct PolyMatrix {
  MatrixXd base;
  std::vector<MatrixXd> linear;
  std::vector<MatrixXd> quadratic;

  MatrixXd at(const VectorXd& theta) const;
  MatrixXd derivative(const VectorXd& theta, Index i) const;
};

/// Linear model whose matrices, initial mean and covariance are polynomial
/// in theta. Used for user-supplied configurations and randomized tests.
class PolynomialModel final : public Model {
 public:
  struct Spec {
    ModelKind kind = ModelKind::LtiMimo;
    Dims dims;
    PolyMatrix t, z, b, beta, q, h, s;
    PolyMatrix alpha0;  // n x 1
    PolyMatrix pi0;
    VectorXd presample;  // x_0 / y_{-1}; empty means zero
    std::vector<std::string> names;
  };

  explicit PolynomialModel(Spec spec);

  ModelKind kind() const override { return spec_.kind; }
  Dims dims() const override { return spec_.dims; }
  std::vector<std::string> parameter_names() const override;
  InitialState initial_state(const VectorXd& theta) const override;
  RawMatrices raw_matrices(const VectorXd& theta, const FilterContext& ctx) const override;
  std::vector<RawMatrices> raw_derivatives(const VectorXd& theta,
                                           const FilterContext& ctx) const override;
  VectorXd presample_regressor(const VectorXd& theta) const override;

  const Spec& spec() const { return spec_; }

 private:
  Spec spec_;
};

/// Four-state benchmark with two nearly collinear measurements:
///   T = [[1,1,.5,.5],[0,1,1,1],[0,0,1,0],[0,0,0,.606]],
///   Z = [[1,1,1,1],[1,1,1,1+delta]], Q = diag(0,0,0,0.63e-2),
///   H = theta^2 delta^2 I_2, Pi_0 = theta^2 I_4, B = beta = S = 0.
/// Shrinking delta drives the innovation covariance towards singularity.
class Example1Model final : public Model {
 public:
  explicit Example1Model(double delta);

  ModelKind kind() const override { return ModelKind::LtiMimo; }
  Dims dims() const override { return {4, 2, 1, 1}; }
  std::vector<std::string> parameter_names() const override { return {"theta"}; }
  void validate(const VectorXd& theta) const override;
  InitialState initial_state(const VectorXd& theta) const override;
  RawMatrices raw_matrices(const VectorXd& theta, const FilterContext& ctx) const override;
  std::vector<RawMatrices> raw_derivatives(const VectorXd& theta,
                                           const FilterContext& ctx) const override;

  double delta() const { return delta_; }

 private:
  double delta_;
};

/// Test for evolving efficiency: GARCH-in-Mean(1,1) with random-walk
/// regression coefficients, cast as an LTI MIMO model with
/// state [h, beta0, beta1] and theta = [a0, a1, b1, delta, sigma0, sigma1].
///
///   T = diag(b1, 1, 1), Z_k = [delta, 1, y_{k-1}], B = [[a0, a1], 0, 0],
///   Q = diag(0, sigma0^2, sigma1^2), H_k = h_{k|k-1} (floored at h_min),
///   x_k = [1, e_k^2] with e_k the filter innovation.
///
/// H depends on theta only through the a priori state, so its derivative is
/// the sensitivity of h_{k|k-1} supplied in the filter context.
class TeeModel final : public Model {
 public:
  enum Param : Index { kA0 = 0, kA1, kB1, kDelta, kSigma0, kSigma1, kNumParams };

  struct Options {
    double h_min = 1e-10;
    // Defaults derived from the return series when unset.
    std::optional<double> h0;          // initial variance; sample variance
    std::optional<double> beta0_init;  // sample mean
    double beta1_init = 0.0;
    std::optional<MatrixXd> pi0;       // diag(h0^2, 10, 10)
    std::optional<double> presample_resid2;  // e_0^2 used in x_0; h0
  };

  /// `returns` is the series used to derive the default initialization.
  TeeModel(std::span<const double> returns, Options options);
  TeeModel();

  ModelKind kind() const override { return ModelKind::LtiMimo; }
  Dims dims() const override { return {3, 1, 2, kNumParams}; }
  std::vector<std::string> parameter_names() const override;
  bool time_invariant() const override { return false; }
  void validate(const VectorXd& theta) const override;
  InitialState initial_state(const VectorXd& theta) const override;
  RawMatrices raw_matrices(const VectorXd& theta, const FilterContext& ctx) const override;
  std::vector<RawMatrices> raw_derivatives(const VectorXd& theta,
                                           const FilterContext& ctx) const override;

  bool innovation_regressor() const override { return true; }
  VectorXd regressor_from_innovation(const VectorXd& theta, const VectorXd& e) const override;
  std::vector<VectorXd> regressor_derivatives(const VectorXd& theta, const VectorXd& e,
                                              std::span<const VectorXd> d_e) const override;
  VectorXd presample_regressor(const VectorXd& theta) const override;

  double h0() const { return h0_; }
  double h_min() const { return options_.h_min; }

  /// Number of times the predicted variance was raised to h_min since the
  /// counter was last reset.
  std::size_t floor_events() const { return floor_events_.load(); }
  void reset_floor_events() const { floor_events_.store(0); }

 private:
  double predicted_variance(const FilterContext& ctx, bool* floored) const;

  Options options_;
  double h0_ = 1.0;
  double beta0_ = 0.0;
  MatrixXd pi0_;
  double resid2_0_ = 1.0;
  mutable std::atomic<std::size_t> floor_events_{0};
};

}  // namespace udkf

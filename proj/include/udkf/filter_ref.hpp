#pragma once

// Conventional (covariance-form) filters and their directly differentiated
// sensitivity recursion. This is the numerically fragile baseline; no
// Joseph-form or other stabilization beyond symmetrization is applied.

#include "udkf/loglik.hpp"
#include "udkf/model.hpp"

#include <utility>
#include <vector>

namespace udkf {

struct DenseFilterState {
  VectorXd alpha;
  MatrixXd p;
  std::size_t k = 0;
};

struct DenseSensitivityState {
  std::vector<VectorXd> d_alpha;
  std::vector<MatrixXd> d_p;
};

struct ConvStepOutput {
  VectorXd e;
  MatrixXd re;
  MatrixXd re_inv;
  MatrixXd gain;
  double log_det_re = 0.0;
  double quad = 0.0;  // e' Re^-1 e
};

struct ConvSensitivityOutput {
  std::vector<VectorXd> d_e;
  std::vector<MatrixXd> d_re;
};

/// alpha- = T_bar alpha + B_bar x_{k-1} + S H^-1 y_{k-1};  P- = T_bar P T_bar' + Q_bar.
DenseFilterState conv_time_update(const DenseFilterState& state, const VectorXd& x_prev,
                                  const VectorXd& y_prev, const StepMatrices& mats);

/// Gain, innovation and covariance update. Throws SingularInnovationCov when
/// the reciprocal condition estimate of Re falls below machine epsilon.
std::pair<DenseFilterState, ConvStepOutput> conv_measurement_update(
    const DenseFilterState& prior, const VectorXd& y, const VectorXd& x,
    const StepMatrices& mats);

/// One full step for time-invariant matrices.
std::pair<DenseFilterState, ConvStepOutput> conv_step(const DenseFilterState& state,
                                                      const VectorXd& y, const VectorXd& x_prev,
                                                      const VectorXd& x, const VectorXd& y_prev,
                                                      const StepMatrices& mats);

/// Sensitivities of the a priori estimate. `d_x_prev` may be empty (data
/// regressors do not depend on theta).
DenseSensitivityState conv_sensitivity_time_update(
    const DenseFilterState& state, const DenseSensitivityState& sens,
    const VectorXd& x_prev, std::span<const VectorXd> d_x_prev, const VectorXd& y_prev,
    const StepMatrices& mats, const std::vector<StepDerivatives>& d_mats);

/// Sensitivities of the a posteriori estimate plus the per-step
/// derivatives of e and Re.
std::pair<DenseSensitivityState, ConvSensitivityOutput> conv_sensitivity_measurement_update(
    const DenseFilterState& prior, const DenseSensitivityState& sens_prior,
    const ConvStepOutput& out, const VectorXd& x, const StepMatrices& mats,
    const std::vector<StepDerivatives>& d_mats);

/// ln det Re + e' Re^-1 e contribution of one step.
double conv_loglik_term(const ConvStepOutput& out);

struct ConvRunResult {
  LogLikEval eval;
  std::vector<DenseFilterState> predicted;
  std::vector<DenseFilterState> filtered;
  std::vector<ConvStepOutput> steps;
  std::vector<ConvSensitivityOutput> sensitivities;
};

/// Runs the conventional filter over the dataset; with `score` set the
/// sensitivity recursion is propagated and eval.grad is filled.
/// Errors are rethrown tagged with the failing step index.
ConvRunResult conv_run(const Model& model, const VectorXd& theta, const Dataset& data,
                       bool score, bool keep_path = false);

/// ln L from the conventional filter. Throws NonFiniteLogLik on divergence.
double loglik_conventional(const Model& model, const VectorXd& theta, const Dataset& data);

/// ln L and its gradient from the differentiated conventional filter.
LogLikEval loglik_and_score_conventional(const Model& model, const VectorXd& theta,
                                         const Dataset& data);

}  // namespace udkf

#pragma once

// Differentiated UD filters: the UD filter of filter_ud.hpp run alongside
// the derivatives of every factor with respect to each parameter, obtained
// by differentiating the MWGS pre-arrays (diff_ud). Produces the UD-form
// log-likelihood and its analytic score.

#include "udkf/filter_ud.hpp"

#include <span>
#include <vector>

namespace udkf {

struct UdSensitivityState {
  std::vector<VectorXd> d_alpha;
  std::vector<MatrixXd> d_u_p;  // strictly upper triangular
  std::vector<VectorXd> d_d_p;
};

/// Per-step derivatives needed by the score.
struct UdStepSensitivity {
  std::vector<VectorXd> d_e;
  std::vector<VectorXd> d_e_bar;
  std::vector<MatrixXd> d_u_re;
  std::vector<VectorXd> d_d_re;
};

UdSensitivityState ud_initial_sensitivity(const InitialState& init, const UdFactor& pi0_ud,
                                          double eps = kDefaultEps);

/// Time update of the filter and its sensitivities. `d_x_prev` may be empty.
std::pair<UdFilterState, UdSensitivityState> diff_time_update(
    const UdFilterState& state, const UdSensitivityState& sens, const VectorXd& x_prev,
    std::span<const VectorXd> d_x_prev, const VectorXd& y_prev, const StepMatrices& mats,
    const std::vector<StepDerivatives>& d_mats, double eps = kDefaultEps);

struct DiffMeasurementResult {
  UdFilterState filtered;
  UdStepOutput out;
  UdSensitivityState sens;
  UdStepSensitivity step;
};

/// Measurement update of the filter and its sensitivities. The derivative
/// of the normalized innovation is
///   d e_bar = U_Re^-1 (d e - dU_Re e_bar),  d e = -dZ a- - Z d a- - dbeta x.
DiffMeasurementResult diff_measurement_update(const UdFilterState& prior,
                                              const UdSensitivityState& sens_prior,
                                              const VectorXd& y, const VectorXd& x,
                                              const StepMatrices& mats,
                                              const std::vector<StepDerivatives>& d_mats,
                                              double eps = kDefaultEps);

struct DiffStepResult {
  UdFilterState predicted;
  UdSensitivityState sens_predicted;
  DiffMeasurementResult update;
};

/// One full step with the same matrices for both updates.
DiffStepResult diff_step(const UdFilterState& state, const UdSensitivityState& sens,
                         const VectorXd& y, const VectorXd& x_prev,
                         std::span<const VectorXd> d_x_prev, const VectorXd& x,
                         const VectorXd& y_prev, const StepMatrices& mats,
                         const std::vector<StepDerivatives>& d_mats,
                         double eps = kDefaultEps);

/// Score contribution of one step (without the -1/2 factor):
///   tr(dD_Re D_Re^-1) + 2 de_bar' D_Re^-1 e_bar - e_bar' D_Re^-2 dD_Re e_bar.
VectorXd ud_score_term(const UdStepOutput& out, const UdStepSensitivity& step);

struct UdDiffRunResult {
  LogLikEval eval;
  std::vector<UdFilterState> filtered;
  std::vector<UdSensitivityState> sensitivities;
  std::vector<UdStepOutput> steps;
  std::vector<UdStepSensitivity> step_sensitivities;
};

UdDiffRunResult ud_diff_run(const Model& model, const VectorXd& theta, const Dataset& data,
                            bool keep_path = false);

/// ln L and its analytic gradient. Throws NonFiniteLogLik / NonFiniteScore.
LogLikEval loglik_and_score_ud(const Model& model, const VectorXd& theta, const Dataset& data);

}  // namespace udkf

#pragma once

// UD-factorized filters. Both the time and the measurement update are a
// single MWGS pass over a weighted pre-array:
//
//   time update         pre = [T_bar U_P | U_Qbar],          weights D_P (+) D_Qbar
//   measurement update  pre = [[U_P-, 0], [Z U_P-, U_H]],    weights D_P- (+) D_H
//
// Measurement post-array index map (n state rows first, then m rows):
//   R[0:n, 0:n] = U_P+     R[0:n, n:n+m] = K_u     R[n:, n:] = U_Re
//   d_r[0:n]    = D_P+     d_r[n:n+m]    = D_Re

#include "udkf/loglik.hpp"
#include "udkf/model.hpp"

#include <utility>
#include <vector>

namespace udkf {

struct UdFilterState {
  VectorXd alpha;
  UdFactor p_ud;
  std::size_t k = 0;
};

struct UdStepOutput {
  VectorXd e;
  VectorXd e_bar;  // U_Re^-1 e
  UdFactor re_ud;
  MatrixXd k_u;    // normalized gain, K = K_u U_Re^-1
};

struct PreArray {
  MatrixXd a;
  VectorXd weights;
};

PreArray time_update_pre_array(const UdFactor& p_ud, const StepMatrices& mats);
PreArray measurement_update_pre_array(const UdFactor& p_ud, const StepMatrices& mats);

/// `work`, when given, receives the MWGS post-arrays.
UdFilterState ud_time_update(const UdFilterState& state, const VectorXd& x_prev,
                             const VectorXd& y_prev, const StepMatrices& mats,
                             MwgsResult* work = nullptr, double eps = kDefaultEps);

/// Throws SingularInnovationCov if any D_Re entry is not positive.
std::pair<UdFilterState, UdStepOutput> ud_measurement_update(
    const UdFilterState& prior, const VectorXd& y, const VectorXd& x,
    const StepMatrices& mats, MwgsResult* work = nullptr, double eps = kDefaultEps);

/// sum ln D_Re + sum e_bar^2 / D_Re for one step.
double ud_loglik_term(const UdStepOutput& out);

struct UdRunResult {
  LogLikEval eval;  // grad empty
  std::vector<UdFilterState> predicted;
  std::vector<UdFilterState> filtered;
  std::vector<UdStepOutput> steps;
  double min_d_p = 0.0;               // over every predicted and filtered D_P
  std::size_t negative_d_p = 0;       // entries below zero (expected to stay 0)
};

/// Initial state alpha_{0|0} with UD factors of Pi_0.
UdFilterState ud_initial_state(const InitialState& init, double eps = kDefaultEps);

/// Full UD filter pass. Errors are rethrown tagged with the failing step.
UdRunResult ud_run(const Model& model, const VectorXd& theta, const Dataset& data,
                   bool keep_path = false);

/// ln L from the UD filter.
double loglik_ud(const Model& model, const VectorXd& theta, const Dataset& data);

}  // namespace udkf

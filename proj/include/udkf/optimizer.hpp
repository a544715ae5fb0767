#pragma once

// Box-constrained quasi-Newton maximization of a log-likelihood.
//
// The search runs on -ln L in an internal coordinate phi = map(theta):
// projected BFGS with an active-set mask, Armijo backtracking
// (c = 1e-4, factor 0.5) and projection onto the box after every trial
// step. Trial points are value-only; the gradient is taken at the accepted
// point, either from the analytic score or by central differences in phi
// (2p extra evaluations).

#include "udkf/loglik.hpp"

#include <functional>
#include <string>
#include <vector>

namespace udkf {

/// theta -> ln L (and its gradient when `need_grad` is set). Failures are
/// signalled by throwing udkf::Error.
using Objective = std::function<LogLikEval(const VectorXd& theta, bool need_grad)>;

enum class Transform {
  None,               // phi = theta, box in theta
  LogPositive,        // phi = ln theta, box mapped through ln
  GarchStationarity,  // six GARCH-in-Mean parameters, see optimizer.cpp
};

enum class FitStatus { Converged, MaxIters, ObjectiveFailure };

std::string_view to_string(FitStatus s);

struct FitConfig {
  VectorXd theta0;
  VectorXd lower;  // empty means unbounded
  VectorXd upper;
  int max_iters = 200;
  double grad_tol = 1e-6;
  double step_tol = 1e-10;  // relative step in phi
  double f_tol = 1e-13;     // relative change of -ln L
  bool use_analytic_score = true;
  Transform transform = Transform::None;
};

struct FitResult {
  VectorXd theta;
  double loglik = 0.0;
  int iterations = 0;
  std::size_t evaluations = 0;
  FitStatus status = FitStatus::ObjectiveFailure;
  std::string detail;
  std::vector<double> history;  // accepted ln L values, one per iterate
};

/// Maximizes the objective. Throws InvalidBounds for inconsistent bounds;
/// every objective failure is reported through the status instead.
FitResult fit_mle(const Objective& objective, const FitConfig& config);

/// Maps between theta and the internal coordinates.
VectorXd to_internal(Transform t, const VectorXd& theta);
VectorXd from_internal(Transform t, const VectorXd& phi);
/// d theta / d phi (p x p).
MatrixXd internal_jacobian(Transform t, const VectorXd& phi);

}  // namespace udkf

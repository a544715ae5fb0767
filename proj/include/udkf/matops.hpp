#pragma once

// Dense small-matrix kernels for square-root-free (UDU') covariance
// propagation: modified Cholesky factorization, modified weighted
// Gram-Schmidt (MWGS) orthogonalization and its parameter derivative.

#include <Eigen/Dense>

#include <vector>

namespace udkf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kDefaultEps = 1e-13;

/// P = U * diag(d) * U' with U unit upper triangular.
struct UdFactor {
  MatrixXd u;
  VectorXd d;

  Index size() const { return d.size(); }
  static UdFactor identity(Index n);
};

/// Post-arrays of the MWGS transform of a pre-array B (s x r):
///   B = r * w'   and   w' * diag(d_a) * w = diag(d_r).
struct MwgsResult {
  MatrixXd r;    // s x s, unit upper triangular
  VectorXd d_r;  // s
  MatrixXd w;    // r x s
};

/// MWGS post-arrays together with their derivatives for each parameter.
struct DiffUdResult {
  MatrixXd r;
  VectorXd d_r;
  MatrixXd w;
  std::vector<MatrixXd> dr_dtheta;    // strictly upper triangular
  std::vector<VectorXd> dd_r_dtheta;
};

/// Derivative of a UD factor pair with respect to one parameter.
struct UdDerivative {
  MatrixXd du;  // strictly upper triangular
  VectorXd dd;
};

/// Upper UDU' (modified Cholesky) factorization, computed from the
/// bottom-right corner upwards. Pivots in [-eps*|P|max, 0] are clamped to 0.
/// Throws NotSymmetric / IndefiniteMatrix.
UdFactor udu_factorize(const MatrixXd& p, double eps = kDefaultEps);

/// U * diag(d) * U', symmetric by construction.
MatrixXd reconstruct(const UdFactor& f);

/// Solves u * x = b for unit upper triangular u by back-substitution.
VectorXd solve_unit_upper(const MatrixXd& u, const VectorXd& b);

/// Applies P^{-1} = U^{-T} D^{-1} U^{-1} to the columns of `b` using the
/// factors only. All d entries must be nonzero.
MatrixXd ud_solve(const UdFactor& f, const MatrixXd& b);

/// Modified weighted Gram-Schmidt, rows processed bottom-up with no
/// pivoting. Zero weights are allowed; a row whose weighted norm is
/// exactly zero gets d_r = 0 and leaves the rows above it untouched.
/// All-zero weights give d_r = 0 (a deterministic state).
/// Throws DegenerateWeights for negative or non-finite weights.
MwgsResult mwgs(const MatrixXd& pre_array, const VectorXd& d_a,
                double eps = kDefaultEps);

/// Differentiated MWGS. `d_pre[i]` and `d_d_a[i]` are the derivatives of the
/// pre-array and its weights with respect to parameter i.
/// Throws ZeroDrPivot if a zero d_r entry meets a non-negligible numerator.
DiffUdResult diff_ud(const MatrixXd& pre_array, const VectorXd& d_a,
                     const std::vector<MatrixXd>& d_pre,
                     const std::vector<VectorXd>& d_d_a,
                     double eps = kDefaultEps);

/// Same as diff_ud but reuses an already computed MWGS result.
void diff_ud_from(const MwgsResult& base, const VectorXd& d_a,
                  const std::vector<MatrixXd>& d_pre,
                  const std::vector<VectorXd>& d_d_a, double eps,
                  std::vector<MatrixXd>& dr, std::vector<VectorXd>& dd_r);

/// Derivative of the UD factors of P given dP:
///   U^{-1} dP U^{-T} = X D + dD + D X',  dU = U X.
UdDerivative udu_derivative(const UdFactor& f, const MatrixXd& dp,
                            double eps = kDefaultEps);

/// Largest absolute entry, 0 for empty matrices.
double max_abs(const MatrixXd& m);

}  // namespace udkf

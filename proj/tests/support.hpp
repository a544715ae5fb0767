#pragma once

// Random generators and small helpers shared by the test binaries.

#include "udkf/matops.hpp"
#include "udkf/models.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace udkf::test {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : e_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(e_);
  }
  double normal() { return std::normal_distribution<double>()(e_); }
  Index integer(Index lo, Index hi) {
    return std::uniform_int_distribution<Index>(lo, hi)(e_);
  }

  MatrixXd matrix(Index r, Index c, double scale = 1.0) {
    MatrixXd m(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) m(i, j) = scale * normal();
    return m;
  }
  VectorXd vector(Index n, double scale = 1.0) { return matrix(n, 1, scale).col(0); }

  // A A' + shift I, so eigenvalues are at least `shift`.
  MatrixXd spd(Index n, double shift = 0.5) {
    const MatrixXd a = matrix(n, n, 1.0 / std::sqrt(static_cast<double>(n)));
    return a * a.transpose() + shift * MatrixXd::Identity(n, n);
  }

  // Rank-deficient PSD matrix of the given rank.
  MatrixXd psd(Index n, Index rank) {
    const MatrixXd a = matrix(n, rank);
    return a * a.transpose();
  }

  MatrixXd unit_upper(Index n, double scale = 1.0) {
    MatrixXd u = MatrixXd::Identity(n, n);
    for (Index j = 1; j < n; ++j)
      for (Index i = 0; i < j; ++i) u(i, j) = scale * normal();
    return u;
  }

  std::mt19937_64& engine() { return e_; }

 private:
  std::mt19937_64 e_;
};

inline double rel_err(const MatrixXd& a, const MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  if (a.size() == 0) return 0.0;
  const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

struct RandomSystem {
  PolynomialModel model;
  VectorXd theta;
};

// A stable, well-conditioned model with five parameters:
//   0: T = T0 + t0 T1          1: Z = Z0 + t1 Z1
//   2: Q, H and Pi0 get t2^2 terms     3: S = t3 S1 (zero unless with_s)
//   4: B, beta and alpha0 are linear in t4
// The joint noise covariance [Q S; S' H] is a convex mix of a PSD matrix
// and its block diagonal for t3 in [0, 1], so it stays PSD.
inline RandomSystem random_system(Gen& g, Index n, Index m, Index d, bool with_s,
                                  ModelKind kind = ModelKind::LtiMimo) {
  if (kind == ModelKind::Pairwise) d = m;
  PolynomialModel::Spec s;
  s.kind = kind;
  s.dims = {n, m, d, 5};
  const auto zeros = [](Index r, Index c) { return MatrixXd::Zero(r, c); };

  MatrixXd t0 = g.matrix(n, n, 0.6 / std::sqrt(static_cast<double>(n)));
  s.t.base = t0;
  s.t.linear = {g.matrix(n, n, 0.2 / std::sqrt(static_cast<double>(n)))};

  s.z.base = g.matrix(m, n);
  s.z.linear = {MatrixXd(), g.matrix(m, n, 0.3)};

  const MatrixXd joint = g.spd(n + m, 0.3);
  s.q.base = joint.topLeftCorner(n, n);
  s.q.quadratic = {MatrixXd(), MatrixXd(), g.spd(n, 0.1)};
  s.h.base = joint.bottomRightCorner(m, m);
  s.h.quadratic = {MatrixXd(), MatrixXd(), MatrixXd::Identity(m, m)};
  s.s.base = zeros(n, m);
  if (with_s) {
    s.s.linear = {MatrixXd(), MatrixXd(), MatrixXd(), joint.topRightCorner(n, m)};
  }

  s.b.base = g.matrix(n, d, 0.5);
  s.b.linear = {MatrixXd(), MatrixXd(), MatrixXd(), MatrixXd(), g.matrix(n, d, 0.5)};
  s.beta.base = g.matrix(m, d, 0.5);
  s.beta.linear = {MatrixXd(), MatrixXd(), MatrixXd(), MatrixXd(), g.matrix(m, d, 0.5)};

  s.alpha0.base = g.matrix(n, 1);
  s.alpha0.linear = {MatrixXd(), MatrixXd(), MatrixXd(), MatrixXd(), g.matrix(n, 1)};
  s.pi0.base = g.spd(n, 0.5);
  s.pi0.quadratic = {MatrixXd(), MatrixXd(), g.spd(n, 0.2)};
  if (d > 0) s.presample = g.vector(d);

  VectorXd theta(5);
  theta << g.uniform(0.2, 0.8), g.uniform(0.2, 0.8), g.uniform(0.5, 1.0), g.uniform(0.3, 0.7),
      g.uniform(0.2, 0.8);
  return {PolynomialModel(std::move(s)), theta};
}

}  // namespace udkf::test

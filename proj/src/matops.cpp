#include "udkf/matops.hpp"

#include "udkf/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace udkf {

namespace {

std::string describe(const char* what, Index i, Index j, double value) {
  std::ostringstream os;
  os << what << " at (" << i << ", " << j << "): " << value;
  return os.str();
}

}  // namespace

UdFactor UdFactor::identity(Index n) {
  return {MatrixXd::Identity(n, n), VectorXd::Ones(n)};
}

double max_abs(const MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

UdFactor udu_factorize(const MatrixXd& p, double eps) {
  if (p.rows() != p.cols()) {
    throw Error(ErrorCode::InvalidArgument, "udu_factorize: matrix not square");
  }
  const Index n = p.rows();
  const double scale = std::max(max_abs(p), 1e-300);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (std::abs(p(i, j) - p(j, i)) > eps * scale) {
        throw Error(ErrorCode::NotSymmetric,
                    describe("asymmetry", i, j, p(i, j) - p(j, i)));
      }
    }
  }

  UdFactor f{MatrixXd::Identity(n, n), VectorXd::Zero(n)};
  for (Index j = n - 1; j >= 0; --j) {
    double pivot = p(j, j);
    for (Index k = j + 1; k < n; ++k) pivot -= f.d(k) * f.u(j, k) * f.u(j, k);
    if (pivot < -eps * scale) {
      throw Error(ErrorCode::IndefiniteMatrix, describe("pivot", j, j, pivot));
    }
    if (pivot <= 0.0) pivot = 0.0;
    f.d(j) = pivot;
    for (Index i = 0; i < j; ++i) {
      if (pivot == 0.0) {
        f.u(i, j) = 0.0;
        continue;
      }
      double s = p(i, j);
      for (Index k = j + 1; k < n; ++k) s -= f.d(k) * f.u(i, k) * f.u(j, k);
      f.u(i, j) = s / pivot;
    }
  }
  return f;
}

MatrixXd reconstruct(const UdFactor& f) {
  const MatrixXd ud = f.u * f.d.asDiagonal();
  MatrixXd p = ud * f.u.transpose();
  // Copy the upper triangle down so the result is exactly symmetric.
  p.triangularView<Eigen::StrictlyLower>() = p.transpose();
  return p;
}

VectorXd solve_unit_upper(const MatrixXd& u, const VectorXd& b) {
  return u.triangularView<Eigen::UnitUpper>().solve(b);
}

MatrixXd ud_solve(const UdFactor& f, const MatrixXd& b) {
  MatrixXd y = f.u.triangularView<Eigen::UnitUpper>().solve(b);
  y = f.d.cwiseInverse().asDiagonal() * y;
  return f.u.transpose().triangularView<Eigen::UnitLower>().solve(y);
}

MwgsResult mwgs(const MatrixXd& pre_array, const VectorXd& d_a, [[maybe_unused]] double eps) {
  const Index s = pre_array.rows();
  const Index r = pre_array.cols();
  if (d_a.size() != r || r < s) {
    throw Error(ErrorCode::InvalidArgument, "mwgs: inconsistent pre-array sizes");
  }
  if (!d_a.allFinite() || (r > 0 && d_a.minCoeff() < 0.0)) {
    throw Error(ErrorCode::DegenerateWeights, "mwgs: negative or non-finite weight");
  }

  MwgsResult out;
  out.w = pre_array.transpose();
  out.r = MatrixXd::Identity(s, s);
  out.d_r = VectorXd::Zero(s);
  VectorXd weighted(r);
  for (Index j = s - 1; j >= 0; --j) {
    weighted = d_a.cwiseProduct(out.w.col(j));
    const double norm = weighted.dot(out.w.col(j));
    out.d_r(j) = norm;
    if (!(norm > 0.0)) {
      out.d_r(j) = 0.0;
      continue;
    }
    for (Index i = 0; i < j; ++i) {
      const double c = out.w.col(i).dot(weighted) / norm;
      out.r(i, j) = c;
      out.w.col(i) -= c * out.w.col(j);
    }
  }
  return out;
}

void diff_ud_from(const MwgsResult& base, const VectorXd& d_a,
                  const std::vector<MatrixXd>& d_pre,
                  const std::vector<VectorXd>& d_d_a, double eps,
                  std::vector<MatrixXd>& dr, std::vector<VectorXd>& dd_r) {
  const Index s = base.r.rows();
  const Index r = base.w.rows();
  const std::size_t p = d_pre.size();
  dr.resize(p);
  dd_r.resize(p);

  // D_A W is shared by every parameter. The kernels below are written as
  // plain loops: the matrices are tiny and Eigen's blocked triangular
  // routines cost more than the arithmetic at these sizes.
  const MatrixXd da_w = d_a.asDiagonal() * base.w;
  const MatrixXd& rr = base.r;
  MatrixXd y(s, r), m0(s, s), m2(s, s), x(s, s);

  for (std::size_t i = 0; i < p; ++i) {
    // Y = R^{-1} d_pre by back-substitution.
    y = d_pre[i];
    for (Index j = s - 2; j >= 0; --j) {
      for (Index k = j + 1; k < s; ++k) {
        const double c = rr(j, k);
        if (c != 0.0) y.row(j) -= c * y.row(k);
      }
    }
    // M0 = W' D_A Y'  and  M2 = W' dD_A W.
    m0.noalias() = da_w.transpose().lazyProduct(y.transpose());
    const VectorXd& dw = d_d_a[i];
    for (Index a = 0; a < s; ++a) {
      for (Index b = a; b < s; ++b) {
        double acc = 0.0;
        for (Index t = 0; t < r; ++t) acc += base.w(t, a) * dw(t) * base.w(t, b);
        m2(a, b) = acc;
      }
    }

    x.setZero();
    for (Index c = 0; c < s; ++c) {
      double num = 0.0;
      for (Index row = 0; row < c; ++row) {
        x(row, c) = m0(c, row) + m0(row, c) + m2(row, c);
        num = std::max(num, std::abs(x(row, c)));
      }
      if (base.d_r(c) > 0.0) {
        x.col(c).head(c) /= base.d_r(c);
      } else if (c > 0) {
        // Zero pivot: the column must vanish in exact arithmetic.
        const double scale = 1.0 + max_abs(m0) +
                             m2.triangularView<Eigen::Upper>().toDenseMatrix().cwiseAbs().maxCoeff();
        if (num > std::sqrt(eps) * scale) {
          throw Error(ErrorCode::ZeroDrPivot,
                      "diff_ud: zero d_r entry with nonzero numerator");
        }
        x.col(c).setZero();
      }
    }

    // dR = R X with R unit upper and X strictly upper.
    MatrixXd& out = dr[i];
    out.setZero(s, s);
    for (Index c = 1; c < s; ++c) {
      for (Index row = 0; row < c; ++row) {
        double acc = x(row, c);
        for (Index k = row + 1; k < c; ++k) acc += rr(row, k) * x(k, c);
        out(row, c) = acc;
      }
    }
    dd_r[i].resize(s);
    for (Index a = 0; a < s; ++a) dd_r[i](a) = 2.0 * m0(a, a) + m2(a, a);
  }
}

DiffUdResult diff_ud(const MatrixXd& pre_array, const VectorXd& d_a,
                     const std::vector<MatrixXd>& d_pre,
                     const std::vector<VectorXd>& d_d_a, double eps) {
  if (d_pre.size() != d_d_a.size()) {
    throw Error(ErrorCode::InvalidArgument, "diff_ud: derivative count mismatch");
  }
  MwgsResult base = mwgs(pre_array, d_a, eps);
  DiffUdResult out;
  diff_ud_from(base, d_a, d_pre, d_d_a, eps, out.dr_dtheta, out.dd_r_dtheta);
  out.r = std::move(base.r);
  out.d_r = std::move(base.d_r);
  out.w = std::move(base.w);
  return out;
}

UdDerivative udu_derivative(const UdFactor& f, const MatrixXd& dp, double eps) {
  const Index n = f.size();
  const auto u_unit = f.u.triangularView<Eigen::UnitUpper>();
  const MatrixXd y = u_unit.solve(dp);
  const MatrixXd g = u_unit.solve(y.transpose());  // U^{-1} dP U^{-T}

  UdDerivative out{MatrixXd::Zero(n, n), g.diagonal()};
  MatrixXd x = MatrixXd::Zero(n, n);
  const double scale = 1.0 + max_abs(g);
  for (Index c = 0; c < n; ++c) {
    if (f.d(c) > 0.0) {
      for (Index row = 0; row < c; ++row) x(row, c) = g(row, c) / f.d(c);
    } else {
      for (Index row = 0; row < c; ++row) {
        if (std::abs(g(row, c)) > std::sqrt(eps) * scale) {
          throw Error(ErrorCode::ZeroDrPivot,
                      "udu_derivative: zero pivot with nonzero derivative");
        }
      }
    }
  }
  out.du = f.u * x.triangularView<Eigen::StrictlyUpper>();
  out.du.triangularView<Eigen::Lower>().setZero();
  return out;
}

}  // namespace udkf

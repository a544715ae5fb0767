#include "udkf/error.hpp"
#include "udkf/models.hpp"

namespace udkf {

MatrixXd PolyMatrix::at(const VectorXd& theta) const {
  MatrixXd out = base;
  for (std::size_t i = 0; i < linear.size(); ++i) {
    if (linear[i].size()) out += theta(static_cast<Index>(i)) * linear[i];
  }
  for (std::size_t i = 0; i < quadratic.size(); ++i) {
    const double t = theta(static_cast<Index>(i));
    if (quadratic[i].size()) out += t * t * quadratic[i];
  }
  return out;
}

MatrixXd PolyMatrix::derivative(const VectorXd& theta, Index i) const {
  MatrixXd out = MatrixXd::Zero(base.rows(), base.cols());
  const auto idx = static_cast<std::size_t>(i);
  if (idx < linear.size() && linear[idx].size()) out += linear[idx];
  if (idx < quadratic.size() && quadratic[idx].size()) {
    out += 2.0 * theta(i) * quadratic[idx];
  }
  return out;
}

namespace {

void check_poly(const PolyMatrix& m, Index rows, Index cols, Index p, const char* name) {
  auto bad = [&](const MatrixXd& x) {
    return x.size() != 0 && (x.rows() != rows || x.cols() != cols);
  };
  if (m.base.rows() != rows || m.base.cols() != cols) {
    throw Error(ErrorCode::InvalidArgument, std::string("matrix ") + name + " has wrong size");
  }
  if (static_cast<Index>(m.linear.size()) > p || static_cast<Index>(m.quadratic.size()) > p) {
    throw Error(ErrorCode::InvalidArgument,
                std::string("matrix ") + name + " references an unknown parameter");
  }
  for (const auto& x : m.linear) {
    if (bad(x)) throw Error(ErrorCode::InvalidArgument, std::string("coefficient of ") + name + " has wrong size");
  }
  for (const auto& x : m.quadratic) {
    if (bad(x)) throw Error(ErrorCode::InvalidArgument, std::string("coefficient of ") + name + " has wrong size");
  }
}

}  // namespace

PolynomialModel::PolynomialModel(Spec spec) : spec_(std::move(spec)) {
  const Dims& d = spec_.dims;
  if (d.n <= 0 || d.m <= 0 || d.d < 0 || d.p < 0) {
    throw Error(ErrorCode::InvalidArgument, "invalid model dimensions");
  }
  if (spec_.kind == ModelKind::Pairwise && d.d != d.m) {
    throw Error(ErrorCode::InvalidArgument, "pairwise model needs d == m");
  }
  check_poly(spec_.t, d.n, d.n, d.p, "T");
  check_poly(spec_.z, d.m, d.n, d.p, "Z");
  check_poly(spec_.b, d.n, d.d, d.p, "B");
  check_poly(spec_.beta, d.m, d.d, d.p, "beta");
  check_poly(spec_.q, d.n, d.n, d.p, "Q");
  check_poly(spec_.h, d.m, d.m, d.p, "H");
  check_poly(spec_.s, d.n, d.m, d.p, "S");
  check_poly(spec_.alpha0, d.n, 1, d.p, "alpha0");
  check_poly(spec_.pi0, d.n, d.n, d.p, "Pi0");
  if (spec_.presample.size() && spec_.presample.size() != d.d) {
    throw Error(ErrorCode::InvalidArgument, "pre-sample regressor has wrong size");
  }
}

std::vector<std::string> PolynomialModel::parameter_names() const {
  if (static_cast<Index>(spec_.names.size()) == spec_.dims.p) return spec_.names;
  return Model::parameter_names();
}

InitialState PolynomialModel::initial_state(const VectorXd& theta) const {
  InitialState s;
  s.mean = spec_.alpha0.at(theta).col(0);
  s.pi0 = spec_.pi0.at(theta);
  for (Index i = 0; i < spec_.dims.p; ++i) {
    s.d_mean.push_back(spec_.alpha0.derivative(theta, i).col(0));
    s.d_pi0.push_back(spec_.pi0.derivative(theta, i));
  }
  return s;
}

RawMatrices PolynomialModel::raw_matrices(const VectorXd& theta, const FilterContext&) const {
  return {spec_.t.at(theta), spec_.z.at(theta), spec_.b.at(theta), spec_.beta.at(theta),
          spec_.q.at(theta), spec_.h.at(theta), spec_.s.at(theta)};
}

std::vector<RawMatrices> PolynomialModel::raw_derivatives(const VectorXd& theta,
                                                          const FilterContext&) const {
  std::vector<RawMatrices> out;
  for (Index i = 0; i < spec_.dims.p; ++i) {
    out.push_back({spec_.t.derivative(theta, i), spec_.z.derivative(theta, i),
                   spec_.b.derivative(theta, i), spec_.beta.derivative(theta, i),
                   spec_.q.derivative(theta, i), spec_.h.derivative(theta, i),
                   spec_.s.derivative(theta, i)});
  }
  return out;
}

VectorXd PolynomialModel::presample_regressor(const VectorXd&) const {
  return spec_.presample.size() ? spec_.presample : VectorXd::Zero(spec_.dims.d);
}

}  // namespace udkf

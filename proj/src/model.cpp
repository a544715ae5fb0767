#include "udkf/model.hpp"

#include "udkf/error.hpp"

namespace udkf {

RawMatrices RawMatrices::zeros(const Dims& dims) {
  return {MatrixXd::Zero(dims.n, dims.n), MatrixXd::Zero(dims.m, dims.n),
          MatrixXd::Zero(dims.n, dims.d), MatrixXd::Zero(dims.m, dims.d),
          MatrixXd::Zero(dims.n, dims.n), MatrixXd::Zero(dims.m, dims.m),
          MatrixXd::Zero(dims.n, dims.m)};
}

StepMatrices precompute_bars(const RawMatrices& raw, double eps) {
  StepMatrices out{raw.t, raw.z, raw.b, raw.beta, raw.q, raw.h, raw.s,
                   {}, {}, {}, {}, {}, {}};
  out.ud_h = udu_factorize(raw.h, eps);
  const double h_scale = max_abs(raw.h);
  for (Index i = 0; i < out.ud_h.size(); ++i) {
    if (!(out.ud_h.d(i) > eps * h_scale)) {
      throw Error(ErrorCode::SingularH, "measurement noise covariance is singular");
    }
  }

  if (raw.s.size() == 0 || max_abs(raw.s) == 0.0) {
    out.s_hinv = MatrixXd::Zero(raw.t.rows(), raw.h.rows());
    out.t_bar = raw.t;
    out.b_bar = raw.b;
    out.q_bar = raw.q;
  } else {
    // S H^-1 = (H^-1 S')' since H is symmetric.
    out.s_hinv = ud_solve(out.ud_h, raw.s.transpose()).transpose();
    out.t_bar = raw.t - out.s_hinv * raw.z;
    out.b_bar = raw.b - out.s_hinv * raw.beta;
    const MatrixXd q_bar = raw.q - out.s_hinv * raw.s.transpose();
    out.q_bar = 0.5 * (q_bar + q_bar.transpose());
  }
  out.ud_q_bar = udu_factorize(out.q_bar, eps);
  return out;
}

StepDerivatives differentiate_bars(const StepMatrices& mats,
                                   const RawMatrices& d_raw, double eps) {
  StepDerivatives out;
  out.t = d_raw.t;
  out.z = d_raw.z;
  out.b = d_raw.b;
  out.beta = d_raw.beta;
  out.q = d_raw.q;
  out.h = d_raw.h;
  out.s = d_raw.s;

  // d(S H^-1) = dS H^-1 - S H^-1 dH H^-1.
  const MatrixXd ds_hinv_t =
      ud_solve(mats.ud_h, d_raw.s.transpose() - d_raw.h * mats.s_hinv.transpose());
  out.s_hinv = ds_hinv_t.transpose();
  out.t_bar = d_raw.t - out.s_hinv * mats.z - mats.s_hinv * d_raw.z;
  out.b_bar = d_raw.b - out.s_hinv * mats.beta - mats.s_hinv * d_raw.beta;
  MatrixXd dq = d_raw.q - out.s_hinv * mats.s.transpose() -
                mats.s_hinv * d_raw.s.transpose();
  out.q_bar = 0.5 * (dq + dq.transpose());
  out.ud_q_bar = udu_derivative(mats.ud_q_bar, out.q_bar, eps);
  out.ud_h = udu_derivative(mats.ud_h, d_raw.h, eps);
  return out;
}

std::vector<std::string> Model::parameter_names() const {
  std::vector<std::string> names;
  for (Index i = 0; i < dims().p; ++i) names.push_back("theta" + std::to_string(i + 1));
  return names;
}

void Model::validate(const VectorXd& theta) const {
  if (theta.size() != dims().p) {
    throw Error(ErrorCode::InvalidArgument, "parameter vector has wrong length");
  }
}

VectorXd Model::regressor_from_innovation(const VectorXd&, const VectorXd&) const {
  throw Error(ErrorCode::InvalidArgument, "model has no innovation-driven regressor");
}

std::vector<VectorXd> Model::regressor_derivatives(const VectorXd&, const VectorXd&,
                                                   std::span<const VectorXd>) const {
  throw Error(ErrorCode::InvalidArgument, "model has no innovation-driven regressor");
}

VectorXd Model::presample_regressor(const VectorXd&) const {
  return VectorXd::Zero(dims().d);
}

StepMatrices matrices_at(const Model& model, const VectorXd& theta,
                         const FilterContext& ctx) {
  return precompute_bars(model.raw_matrices(theta, ctx));
}

std::vector<StepDerivatives> derivatives_at(const Model& model,
                                            const VectorXd& theta,
                                            const FilterContext& ctx,
                                            const StepMatrices& mats) {
  const auto raw = model.raw_derivatives(theta, ctx);
  std::vector<StepDerivatives> out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(differentiate_bars(mats, r));
  return out;
}

VectorXd previous_measurement(const Model& model, const Dataset& data,
                              std::size_t k) {
  if (k <= 1) {
    return data.y0.size() ? data.y0 : VectorXd::Zero(model.dims().m);
  }
  return data.y[k - 2];
}

VectorXd data_regressor(const Model& model, const VectorXd& theta,
                        const Dataset& data, std::size_t k) {
  if (model.kind() == ModelKind::Pairwise) {
    if (k == 0) return data.x0.size() ? data.x0 : model.presample_regressor(theta);
    return previous_measurement(model, data, k);
  }
  if (k == 0) return data.x0.size() ? data.x0 : model.presample_regressor(theta);
  if (data.x.empty()) return VectorXd::Zero(model.dims().d);
  return data.x[k - 1];
}

void check_dataset(const Model& model, const Dataset& data) {
  const Dims dims = model.dims();
  if (model.kind() == ModelKind::Pairwise && dims.d != dims.m) {
    throw Error(ErrorCode::InvalidArgument, "pairwise model needs d == m");
  }
  for (const auto& y : data.y) {
    if (y.size() != dims.m) throw Error(ErrorCode::InvalidArgument, "measurement size mismatch");
  }
  if (!data.x.empty()) {
    if (data.x.size() != data.y.size()) {
      throw Error(ErrorCode::InvalidArgument, "regressor count differs from measurement count");
    }
    for (const auto& x : data.x) {
      if (x.size() != dims.d) throw Error(ErrorCode::InvalidArgument, "regressor size mismatch");
    }
  }
  if (data.y0.size() && data.y0.size() != dims.m) {
    throw Error(ErrorCode::InvalidArgument, "pre-sample measurement size mismatch");
  }
  if (data.x0.size() && data.x0.size() != dims.d) {
    throw Error(ErrorCode::InvalidArgument, "pre-sample regressor size mismatch");
  }
}

}  // namespace udkf

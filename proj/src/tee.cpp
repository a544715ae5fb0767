#include "udkf/error.hpp"
#include "udkf/models.hpp"

#include <cmath>
#include <numeric>

namespace udkf {

namespace {

double sample_mean(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 1.0;
  const double mu = sample_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return acc / static_cast<double>(v.size() - 1);
}

}  // namespace

TeeModel::TeeModel() : TeeModel(std::span<const double>{}, Options{}) {}

TeeModel::TeeModel(std::span<const double> returns, Options options)
    : options_(std::move(options)) {
  if (!(options_.h_min > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "h_min must be positive");
  }
  h0_ = options_.h0.value_or(sample_variance(returns));
  if (!(h0_ > 0.0)) {
    throw Error(ErrorCode::DegenerateData, "initial variance must be positive");
  }
  beta0_ = options_.beta0_init.value_or(sample_mean(returns));
  if (options_.pi0) {
    pi0_ = *options_.pi0;
    if (pi0_.rows() != 3 || pi0_.cols() != 3) {
      throw Error(ErrorCode::InvalidArgument, "Pi0 must be 3 x 3");
    }
  } else {
    pi0_ = VectorXd((VectorXd(3) << h0_ * h0_, 10.0, 10.0).finished()).asDiagonal();
  }
  resid2_0_ = options_.presample_resid2.value_or(h0_);
}

std::vector<std::string> TeeModel::parameter_names() const {
  return {"a0", "a1", "b1", "delta", "sigma0", "sigma1"};
}

void TeeModel::validate(const VectorXd& theta) const {
  Model::validate(theta);
  if (!(theta(kA0) > 0.0) || theta(kA1) < 0.0 || theta(kB1) < 0.0) {
    throw Error(ErrorCode::NonStationary, "GARCH coefficients need a0 > 0, a1 >= 0, b1 >= 0");
  }
  if (!(theta(kA1) + theta(kB1) < 1.0)) {
    throw Error(ErrorCode::NonStationary, "a1 + b1 must be below 1");
  }
}

InitialState TeeModel::initial_state(const VectorXd&) const {
  InitialState s;
  s.mean = (VectorXd(3) << h0_, beta0_, options_.beta1_init).finished();
  s.pi0 = pi0_;
  s.d_mean.assign(kNumParams, VectorXd::Zero(3));
  s.d_pi0.assign(kNumParams, MatrixXd::Zero(3, 3));
  return s;
}

double TeeModel::predicted_variance(const FilterContext& ctx, bool* floored) const {
  *floored = false;
  if (ctx.phase == Phase::TimeUpdate) {
    // S = 0, so H does not enter the time update.
    return 1.0;
  }
  const double h = ctx.alpha(0);
  if (!(h > 0.0)) {
    throw Error(ErrorCode::NonPositiveVariance, "predicted conditional variance is not positive");
  }
  if (h < options_.h_min) {
    *floored = true;
    ++floor_events_;
    return options_.h_min;
  }
  return h;
}

RawMatrices TeeModel::raw_matrices(const VectorXd& theta, const FilterContext& ctx) const {
  RawMatrices m = RawMatrices::zeros(dims());
  m.t.diagonal() << theta(kB1), 1.0, 1.0;
  const double y_prev = ctx.y_prev.size() ? ctx.y_prev(0) : 0.0;
  m.z << theta(kDelta), 1.0, y_prev;
  m.b(0, 0) = theta(kA0);
  m.b(0, 1) = theta(kA1);
  m.q(1, 1) = theta(kSigma0) * theta(kSigma0);
  m.q(2, 2) = theta(kSigma1) * theta(kSigma1);
  bool floored = false;
  m.h(0, 0) = predicted_variance(ctx, &floored);
  return m;
}

std::vector<RawMatrices> TeeModel::raw_derivatives(const VectorXd& theta,
                                                   const FilterContext& ctx) const {
  std::vector<RawMatrices> out(kNumParams, RawMatrices::zeros(dims()));
  out[kA0].b(0, 0) = 1.0;
  out[kA1].b(0, 1) = 1.0;
  out[kB1].t(0, 0) = 1.0;
  out[kDelta].z(0, 0) = 1.0;
  out[kSigma0].q(1, 1) = 2.0 * theta(kSigma0);
  out[kSigma1].q(2, 2) = 2.0 * theta(kSigma1);

  if (ctx.phase == Phase::MeasurementUpdate && !ctx.d_alpha.empty()) {
    const double h = ctx.alpha(0);
    if (h >= options_.h_min) {
      for (Index i = 0; i < kNumParams; ++i) out[i].h(0, 0) = ctx.d_alpha[i](0);
    }
  }
  return out;
}

VectorXd TeeModel::regressor_from_innovation(const VectorXd&, const VectorXd& e) const {
  return (VectorXd(2) << 1.0, e(0) * e(0)).finished();
}

std::vector<VectorXd> TeeModel::regressor_derivatives(const VectorXd&, const VectorXd& e,
                                                      std::span<const VectorXd> d_e) const {
  std::vector<VectorXd> out;
  out.reserve(d_e.size());
  for (const auto& de : d_e) out.push_back((VectorXd(2) << 0.0, 2.0 * e(0) * de(0)).finished());
  return out;
}

VectorXd TeeModel::presample_regressor(const VectorXd&) const {
  return (VectorXd(2) << 1.0, resid2_0_).finished();
}

}  // namespace udkf

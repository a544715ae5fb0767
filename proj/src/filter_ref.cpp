#include "udkf/filter_ref.hpp"

#include "udkf/error.hpp"

#include <cmath>
#include <limits>

namespace udkf {

namespace {

void symmetrize(MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

}  // namespace

DenseFilterState conv_time_update(const DenseFilterState& state, const VectorXd& x_prev,
                                  const VectorXd& y_prev, const StepMatrices& mats) {
  DenseFilterState pri;
  pri.k = state.k + 1;
  pri.alpha = mats.t_bar * state.alpha + mats.b_bar * x_prev + mats.s_hinv * y_prev;
  pri.p = mats.t_bar * state.p * mats.t_bar.transpose() + mats.q_bar;
  symmetrize(pri.p);
  return pri;
}

std::pair<DenseFilterState, ConvStepOutput> conv_measurement_update(
    const DenseFilterState& prior, const VectorXd& y, const VectorXd& x,
    const StepMatrices& mats) {
  ConvStepOutput out;
  const MatrixXd pzt = prior.p * mats.z.transpose();
  out.re = mats.z * pzt + mats.h;
  symmetrize(out.re);

  Eigen::PartialPivLU<MatrixXd> lu(out.re);
  const double rcond = lu.rcond();
  if (!(rcond > std::numeric_limits<double>::epsilon())) {
    throw Error(ErrorCode::SingularInnovationCov,
                "innovation covariance is numerically singular (rcond " +
                    std::to_string(rcond) + ")");
  }
  out.re_inv = lu.inverse();
  out.gain = pzt * out.re_inv;
  out.e = y - mats.z * prior.alpha - mats.beta * x;

  const double det = lu.determinant();
  out.log_det_re = std::log(det);  // NaN for a non-positive determinant
  out.quad = out.e.dot(out.re_inv * out.e);

  DenseFilterState post;
  post.k = prior.k;
  post.alpha = prior.alpha + out.gain * out.e;
  const Index n = prior.p.rows();
  post.p = (MatrixXd::Identity(n, n) - out.gain * mats.z) * prior.p;
  symmetrize(post.p);
  return {std::move(post), std::move(out)};
}

std::pair<DenseFilterState, ConvStepOutput> conv_step(const DenseFilterState& state,
                                                      const VectorXd& y, const VectorXd& x_prev,
                                                      const VectorXd& x, const VectorXd& y_prev,
                                                      const StepMatrices& mats) {
  return conv_measurement_update(conv_time_update(state, x_prev, y_prev, mats), y, x, mats);
}

DenseSensitivityState conv_sensitivity_time_update(
    const DenseFilterState& state, const DenseSensitivityState& sens,
    const VectorXd& x_prev, std::span<const VectorXd> d_x_prev, const VectorXd& y_prev,
    const StepMatrices& mats, const std::vector<StepDerivatives>& d_mats) {
  const std::size_t p = d_mats.size();
  DenseSensitivityState out;
  out.d_alpha.resize(p);
  out.d_p.resize(p);
  const MatrixXd tp = mats.t_bar * state.p;
  for (std::size_t i = 0; i < p; ++i) {
    const StepDerivatives& dm = d_mats[i];
    out.d_alpha[i] = dm.t_bar * state.alpha + mats.t_bar * sens.d_alpha[i] +
                     dm.b_bar * x_prev + dm.s_hinv * y_prev;
    if (!d_x_prev.empty()) out.d_alpha[i] += mats.b_bar * d_x_prev[i];
    const MatrixXd a = dm.t_bar * tp.transpose();  // dT P T'
    out.d_p[i] = a + a.transpose() + mats.t_bar * sens.d_p[i] * mats.t_bar.transpose() +
                 dm.q_bar;
    symmetrize(out.d_p[i]);
  }
  return out;
}

std::pair<DenseSensitivityState, ConvSensitivityOutput> conv_sensitivity_measurement_update(
    const DenseFilterState& prior, const DenseSensitivityState& sens_prior,
    const ConvStepOutput& out, const VectorXd& x, const StepMatrices& mats,
    const std::vector<StepDerivatives>& d_mats) {
  const std::size_t p = d_mats.size();
  const Index n = prior.p.rows();
  DenseSensitivityState post;
  post.d_alpha.resize(p);
  post.d_p.resize(p);
  ConvSensitivityOutput so;
  so.d_e.resize(p);
  so.d_re.resize(p);

  const MatrixXd ikz = MatrixXd::Identity(n, n) - out.gain * mats.z;
  for (std::size_t i = 0; i < p; ++i) {
    const StepDerivatives& dm = d_mats[i];
    const MatrixXd& dp = sens_prior.d_p[i];
    const MatrixXd zpdzt = mats.z * prior.p * dm.z.transpose();
    MatrixXd dre = zpdzt + zpdzt.transpose() + mats.z * dp * mats.z.transpose() + dm.h;
    symmetrize(dre);
    const MatrixXd dk = (dp * mats.z.transpose() + prior.p * dm.z.transpose() -
                         out.gain * dre) * out.re_inv;
    const VectorXd de = -dm.z * prior.alpha - mats.z * sens_prior.d_alpha[i] - dm.beta * x;
    post.d_alpha[i] = sens_prior.d_alpha[i] + dk * out.e + out.gain * de;
    post.d_p[i] = ikz * dp - (dk * mats.z + out.gain * dm.z) * prior.p;
    symmetrize(post.d_p[i]);
    so.d_e[i] = de;
    so.d_re[i] = std::move(dre);
  }
  return {std::move(post), std::move(so)};
}

double conv_loglik_term(const ConvStepOutput& out) { return out.log_det_re + out.quad; }

ConvRunResult conv_run(const Model& model, const VectorXd& theta, const Dataset& data,
                       bool score, bool keep_path) {
  model.validate(theta);
  check_dataset(model, data);
  const Dims dims = model.dims();
  const std::size_t p = score ? static_cast<std::size_t>(dims.p) : 0;

  const InitialState init = model.initial_state(theta);
  DenseFilterState state{init.mean, init.pi0, 0};
  DenseSensitivityState sens;
  if (score) {
    sens.d_alpha = init.d_mean;
    sens.d_p = init.d_pi0;
  }

  ConvRunResult result;
  double sum = 0.0;
  VectorXd grad = VectorXd::Zero(static_cast<Index>(p));
  VectorXd x_prev = data_regressor(model, theta, data, 0);
  std::vector<VectorXd> d_x_prev;

  const bool invariant = model.time_invariant();
  StepMatrices mats_fixed;
  std::vector<StepDerivatives> dmats_fixed;
  if (invariant) {
    FilterContext ctx;
    ctx.k = 1;
    ctx.alpha = state.alpha;
    mats_fixed = matrices_at(model, theta, ctx);
    if (score) dmats_fixed = derivatives_at(model, theta, ctx, mats_fixed);
  }

  for (std::size_t k = 1; k <= data.size(); ++k) {
    try {
      const VectorXd y_prev = previous_measurement(model, data, k);
      FilterContext ctx{k, Phase::TimeUpdate, y_prev, state.alpha, sens.d_alpha};

      StepMatrices mats_tu;
      std::vector<StepDerivatives> dmats_tu;
      if (!invariant) {
        mats_tu = matrices_at(model, theta, ctx);
        if (score) dmats_tu = derivatives_at(model, theta, ctx, mats_tu);
      }
      const StepMatrices& mt = invariant ? mats_fixed : mats_tu;
      const auto& dmt = invariant ? dmats_fixed : dmats_tu;

      DenseFilterState prior = conv_time_update(state, x_prev, y_prev, mt);
      DenseSensitivityState sens_prior;
      if (score) sens_prior = conv_sensitivity_time_update(state, sens, x_prev, d_x_prev, y_prev, mt, dmt);

      ctx.phase = Phase::MeasurementUpdate;
      ctx.alpha = prior.alpha;
      ctx.d_alpha = sens_prior.d_alpha;
      StepMatrices mats_mu;
      std::vector<StepDerivatives> dmats_mu;
      if (!invariant) {
        mats_mu = matrices_at(model, theta, ctx);
        if (score) dmats_mu = derivatives_at(model, theta, ctx, mats_mu);
      }
      const StepMatrices& mm = invariant ? mats_fixed : mats_mu;
      const auto& dmm = invariant ? dmats_fixed : dmats_mu;

      const VectorXd x = model.innovation_regressor() ? VectorXd::Zero(dims.d)
                                                      : data_regressor(model, theta, data, k);
      auto [post, out] = conv_measurement_update(prior, data.y[k - 1], x, mm);
      const double term = conv_loglik_term(out);
      if (!std::isfinite(term)) {
        throw Error(ErrorCode::NonFiniteLogLik, "log-likelihood term is not finite");
      }
      sum += term;

      if (score) {
        auto [sens_post, so] = conv_sensitivity_measurement_update(prior, sens_prior, out, x, mm, dmm);
        const VectorXd rinv_e = out.re_inv * out.e;
        for (std::size_t i = 0; i < p; ++i) {
          const double tr = (out.re_inv * so.d_re[i]).trace();
          const double g = tr + 2.0 * so.d_e[i].dot(rinv_e) - rinv_e.dot(so.d_re[i] * rinv_e);
          grad(static_cast<Index>(i)) += -0.5 * g;
        }
        if (model.innovation_regressor()) {
          d_x_prev = model.regressor_derivatives(theta, out.e, so.d_e);
        }
        sens = std::move(sens_post);
        if (keep_path) result.sensitivities.push_back(std::move(so));
      }
      x_prev = model.innovation_regressor() ? model.regressor_from_innovation(theta, out.e) : x;

      if (keep_path) {
        result.predicted.push_back(prior);
        result.filtered.push_back(post);
        result.steps.push_back(out);
      }
      state = std::move(post);
    } catch (const Error& err) {
      throw err.at_step(k);
    }
  }

  result.eval.value = -loglik_constant(dims.m, data.size()) - 0.5 * sum;
  if (!std::isfinite(result.eval.value)) {
    throw Error(ErrorCode::NonFiniteLogLik, "log-likelihood is not finite");
  }
  if (score) {
    if (!grad.allFinite()) throw Error(ErrorCode::NonFiniteScore, "score is not finite");
    result.eval.grad = std::move(grad);
  }
  return result;
}

double loglik_conventional(const Model& model, const VectorXd& theta, const Dataset& data) {
  return conv_run(model, theta, data, false).eval.value;
}

LogLikEval loglik_and_score_conventional(const Model& model, const VectorXd& theta,
                                         const Dataset& data) {
  return conv_run(model, theta, data, true).eval;
}

}  // namespace udkf

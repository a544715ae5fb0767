#include "udkf/filter_ud.hpp"

#include "udkf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace udkf {

PreArray time_update_pre_array(const UdFactor& p_ud, const StepMatrices& mats) {
  const Index n = p_ud.size();
  PreArray pre{MatrixXd(n, 2 * n), VectorXd(2 * n)};
  pre.a << mats.t_bar * p_ud.u, mats.ud_q_bar.u;
  pre.weights << p_ud.d, mats.ud_q_bar.d;
  return pre;
}

PreArray measurement_update_pre_array(const UdFactor& p_ud, const StepMatrices& mats) {
  const Index n = p_ud.size();
  const Index m = mats.z.rows();
  PreArray pre{MatrixXd::Zero(n + m, n + m), VectorXd(n + m)};
  pre.a.topLeftCorner(n, n) = p_ud.u;
  pre.a.bottomLeftCorner(m, n) = mats.z * p_ud.u;
  pre.a.bottomRightCorner(m, m) = mats.ud_h.u;
  pre.weights << p_ud.d, mats.ud_h.d;
  return pre;
}

UdFilterState ud_time_update(const UdFilterState& state, const VectorXd& x_prev,
                             const VectorXd& y_prev, const StepMatrices& mats,
                             MwgsResult* work, double eps) {
  const PreArray pre = time_update_pre_array(state.p_ud, mats);
  MwgsResult post = mwgs(pre.a, pre.weights, eps);
  UdFilterState out;
  out.k = state.k + 1;
  out.alpha = mats.t_bar * state.alpha + mats.b_bar * x_prev + mats.s_hinv * y_prev;
  out.p_ud = {post.r, post.d_r};
  if (work) *work = std::move(post);
  return out;
}

std::pair<UdFilterState, UdStepOutput> ud_measurement_update(
    const UdFilterState& prior, const VectorXd& y, const VectorXd& x,
    const StepMatrices& mats, MwgsResult* work, double eps) {
  const Index n = prior.p_ud.size();
  const Index m = mats.z.rows();
  const PreArray pre = measurement_update_pre_array(prior.p_ud, mats);
  MwgsResult post = mwgs(pre.a, pre.weights, eps);

  UdStepOutput out;
  out.re_ud = {post.r.bottomRightCorner(m, m), post.d_r.tail(m)};
  for (Index i = 0; i < m; ++i) {
    if (!(out.re_ud.d(i) > 0.0)) {
      throw Error(ErrorCode::SingularInnovationCov, "innovation variance D_Re is not positive");
    }
  }
  out.k_u = post.r.topRightCorner(n, m);
  out.e = y - mats.z * prior.alpha - mats.beta * x;
  out.e_bar = solve_unit_upper(out.re_ud.u, out.e);

  UdFilterState filt;
  filt.k = prior.k;
  filt.alpha = prior.alpha + out.k_u * out.e_bar;
  filt.p_ud = {post.r.topLeftCorner(n, n), post.d_r.head(n)};
  if (work) *work = std::move(post);
  return {std::move(filt), std::move(out)};
}

double ud_loglik_term(const UdStepOutput& out) {
  double acc = 0.0;
  for (Index i = 0; i < out.re_ud.size(); ++i) {
    acc += std::log(out.re_ud.d(i)) + out.e_bar(i) * out.e_bar(i) / out.re_ud.d(i);
  }
  return acc;
}

UdFilterState ud_initial_state(const InitialState& init, double eps) {
  return {init.mean, udu_factorize(init.pi0, eps), 0};
}

namespace {

void track_d_p(const UdFactor& f, UdRunResult& r) {
  if (f.size() == 0) return;
  r.min_d_p = std::min(r.min_d_p, f.d.minCoeff());
  r.negative_d_p += static_cast<std::size_t>((f.d.array() < 0.0).count());
}

}  // namespace

UdRunResult ud_run(const Model& model, const VectorXd& theta, const Dataset& data,
                   bool keep_path) {
  model.validate(theta);
  check_dataset(model, data);
  const Dims dims = model.dims();

  UdRunResult result;
  UdFilterState state = ud_initial_state(model.initial_state(theta));
  result.min_d_p = std::numeric_limits<double>::infinity();
  track_d_p(state.p_ud, result);

  const bool invariant = model.time_invariant();
  StepMatrices fixed;
  if (invariant) {
    FilterContext ctx;
    ctx.k = 1;
    ctx.alpha = state.alpha;
    fixed = matrices_at(model, theta, ctx);
  }

  double sum = 0.0;
  VectorXd x_prev = data_regressor(model, theta, data, 0);
  for (std::size_t k = 1; k <= data.size(); ++k) {
    try {
      const VectorXd y_prev = previous_measurement(model, data, k);
      FilterContext ctx{k, Phase::TimeUpdate, y_prev, state.alpha, {}};
      StepMatrices mt = invariant ? StepMatrices{} : matrices_at(model, theta, ctx);
      UdFilterState prior = ud_time_update(state, x_prev, y_prev, invariant ? fixed : mt);
      track_d_p(prior.p_ud, result);

      ctx.phase = Phase::MeasurementUpdate;
      ctx.alpha = prior.alpha;
      StepMatrices mm = invariant ? StepMatrices{} : matrices_at(model, theta, ctx);
      const VectorXd x = model.innovation_regressor() ? VectorXd::Zero(dims.d)
                                                      : data_regressor(model, theta, data, k);
      auto [post, out] = ud_measurement_update(prior, data.y[k - 1], x, invariant ? fixed : mm);
      track_d_p(post.p_ud, result);

      const double term = ud_loglik_term(out);
      if (!std::isfinite(term)) {
        throw Error(ErrorCode::NonFiniteLogLik, "log-likelihood term is not finite");
      }
      sum += term;
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
  return result;
}

double loglik_ud(const Model& model, const VectorXd& theta, const Dataset& data) {
  return ud_run(model, theta, data).eval.value;
}

}  // namespace udkf

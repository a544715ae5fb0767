#include "udkf/filter_ud_diff.hpp"

#include "udkf/error.hpp"

#include <cmath>

namespace udkf {

UdSensitivityState ud_initial_sensitivity(const InitialState& init, const UdFactor& pi0_ud,
                                          double eps) {
  UdSensitivityState s;
  s.d_alpha = init.d_mean;
  for (const auto& dpi : init.d_pi0) {
    UdDerivative d = udu_derivative(pi0_ud, dpi, eps);
    s.d_u_p.push_back(std::move(d.du));
    s.d_d_p.push_back(std::move(d.dd));
  }
  return s;
}

std::pair<UdFilterState, UdSensitivityState> diff_time_update(
    const UdFilterState& state, const UdSensitivityState& sens, const VectorXd& x_prev,
    std::span<const VectorXd> d_x_prev, const VectorXd& y_prev, const StepMatrices& mats,
    const std::vector<StepDerivatives>& d_mats, double eps) {
  const std::size_t p = d_mats.size();
  const Index n = state.p_ud.size();
  MwgsResult work;
  UdFilterState prior = ud_time_update(state, x_prev, y_prev, mats, &work, eps);

  UdSensitivityState out;
  out.d_alpha.resize(p);
  std::vector<MatrixXd> d_pre(p);
  std::vector<VectorXd> d_w(p);
  for (std::size_t i = 0; i < p; ++i) {
    const StepDerivatives& dm = d_mats[i];
    VectorXd& da = out.d_alpha[i];
    da.noalias() = dm.t_bar * state.alpha;
    da.noalias() += mats.t_bar * sens.d_alpha[i];
    da.noalias() += dm.b_bar * x_prev;
    da.noalias() += dm.s_hinv * y_prev;
    if (!d_x_prev.empty()) da.noalias() += mats.b_bar * d_x_prev[i];

    d_pre[i].resize(n, 2 * n);
    auto left = d_pre[i].leftCols(n);
    left.noalias() = dm.t_bar * state.p_ud.u;
    left.noalias() += mats.t_bar * sens.d_u_p[i];
    d_pre[i].rightCols(n) = dm.ud_q_bar.du;
    d_w[i].resize(2 * n);
    d_w[i] << sens.d_d_p[i], dm.ud_q_bar.dd;
  }
  const VectorXd weights = (VectorXd(2 * n) << state.p_ud.d, mats.ud_q_bar.d).finished();
  diff_ud_from(work, weights, d_pre, d_w, eps, out.d_u_p, out.d_d_p);
  return {std::move(prior), std::move(out)};
}

DiffMeasurementResult diff_measurement_update(const UdFilterState& prior,
                                              const UdSensitivityState& sens_prior,
                                              const VectorXd& y, const VectorXd& x,
                                              const StepMatrices& mats,
                                              const std::vector<StepDerivatives>& d_mats,
                                              double eps) {
  const std::size_t p = d_mats.size();
  const Index n = prior.p_ud.size();
  const Index m = mats.z.rows();
  MwgsResult work;
  auto [filt, out] = ud_measurement_update(prior, y, x, mats, &work, eps);

  std::vector<MatrixXd> d_pre(p);
  std::vector<VectorXd> d_w(p);
  for (std::size_t i = 0; i < p; ++i) {
    const StepDerivatives& dm = d_mats[i];
    d_pre[i] = MatrixXd::Zero(n + m, n + m);
    d_pre[i].topLeftCorner(n, n) = sens_prior.d_u_p[i];
    auto bl = d_pre[i].bottomLeftCorner(m, n);
    bl.noalias() = dm.z * prior.p_ud.u;
    bl.noalias() += mats.z * sens_prior.d_u_p[i];
    d_pre[i].bottomRightCorner(m, m) = dm.ud_h.du;
    d_w[i].resize(n + m);
    d_w[i] << sens_prior.d_d_p[i], dm.ud_h.dd;
  }
  const VectorXd weights = (VectorXd(n + m) << prior.p_ud.d, mats.ud_h.d).finished();
  std::vector<MatrixXd> dr;
  std::vector<VectorXd> dd_r;
  diff_ud_from(work, weights, d_pre, d_w, eps, dr, dd_r);

  DiffMeasurementResult res;
  res.sens.d_alpha.resize(p);
  res.sens.d_u_p.resize(p);
  res.sens.d_d_p.resize(p);
  res.step.d_e.resize(p);
  res.step.d_e_bar.resize(p);
  res.step.d_u_re.resize(p);
  res.step.d_d_re.resize(p);
  for (std::size_t i = 0; i < p; ++i) {
    const StepDerivatives& dm = d_mats[i];
    res.sens.d_u_p[i] = dr[i].topLeftCorner(n, n);
    res.sens.d_d_p[i] = dd_r[i].head(n);
    res.step.d_u_re[i] = dr[i].bottomRightCorner(m, m);
    res.step.d_d_re[i] = dd_r[i].tail(m);

    VectorXd& de = res.step.d_e[i];
    de.noalias() = -dm.z * prior.alpha;
    de.noalias() -= mats.z * sens_prior.d_alpha[i];
    de.noalias() -= dm.beta * x;
    VectorXd rhs = de;
    rhs.noalias() -= res.step.d_u_re[i] * out.e_bar;
    res.step.d_e_bar[i] = solve_unit_upper(out.re_ud.u, rhs);
    VectorXd& da = res.sens.d_alpha[i];
    da = sens_prior.d_alpha[i];
    da.noalias() += dr[i].topRightCorner(n, m) * out.e_bar;
    da.noalias() += out.k_u * res.step.d_e_bar[i];
  }
  res.filtered = std::move(filt);
  res.out = std::move(out);
  return res;
}

DiffStepResult diff_step(const UdFilterState& state, const UdSensitivityState& sens,
                         const VectorXd& y, const VectorXd& x_prev,
                         std::span<const VectorXd> d_x_prev, const VectorXd& x,
                         const VectorXd& y_prev, const StepMatrices& mats,
                         const std::vector<StepDerivatives>& d_mats, double eps) {
  DiffStepResult r;
  std::tie(r.predicted, r.sens_predicted) =
      diff_time_update(state, sens, x_prev, d_x_prev, y_prev, mats, d_mats, eps);
  r.update = diff_measurement_update(r.predicted, r.sens_predicted, y, x, mats, d_mats, eps);
  return r;
}

VectorXd ud_score_term(const UdStepOutput& out, const UdStepSensitivity& step) {
  const std::size_t p = step.d_d_re.size();
  const VectorXd& d = out.re_ud.d;
  const VectorXd& eb = out.e_bar;
  VectorXd g(static_cast<Index>(p));
  for (std::size_t i = 0; i < p; ++i) {
    const VectorXd& dd = step.d_d_re[i];
    const VectorXd& deb = step.d_e_bar[i];
    double acc = 0.0;
    for (Index j = 0; j < d.size(); ++j) {
      acc += dd(j) / d(j) + 2.0 * deb(j) * eb(j) / d(j) - eb(j) * eb(j) * dd(j) / (d(j) * d(j));
    }
    g(static_cast<Index>(i)) = acc;
  }
  return g;
}

UdDiffRunResult ud_diff_run(const Model& model, const VectorXd& theta, const Dataset& data,
                            bool keep_path) {
  model.validate(theta);
  check_dataset(model, data);
  const Dims dims = model.dims();

  const InitialState init = model.initial_state(theta);
  UdFilterState state = ud_initial_state(init);
  UdSensitivityState sens = ud_initial_sensitivity(init, state.p_ud);

  const bool invariant = model.time_invariant();
  StepMatrices fixed;
  std::vector<StepDerivatives> d_fixed;
  if (invariant) {
    FilterContext ctx;
    ctx.k = 1;
    ctx.alpha = state.alpha;
    fixed = matrices_at(model, theta, ctx);
    d_fixed = derivatives_at(model, theta, ctx, fixed);
  }

  UdDiffRunResult result;
  double sum = 0.0;
  VectorXd grad = VectorXd::Zero(dims.p);
  VectorXd x_prev = data_regressor(model, theta, data, 0);
  std::vector<VectorXd> d_x_prev;

  for (std::size_t k = 1; k <= data.size(); ++k) {
    try {
      const VectorXd y_prev = previous_measurement(model, data, k);
      FilterContext ctx{k, Phase::TimeUpdate, y_prev, state.alpha, sens.d_alpha};
      StepMatrices mt;
      std::vector<StepDerivatives> dmt;
      if (!invariant) {
        mt = matrices_at(model, theta, ctx);
        dmt = derivatives_at(model, theta, ctx, mt);
      }
      auto [prior, sens_prior] =
          diff_time_update(state, sens, x_prev, d_x_prev, y_prev, invariant ? fixed : mt,
                           invariant ? d_fixed : dmt);

      ctx.phase = Phase::MeasurementUpdate;
      ctx.alpha = prior.alpha;
      ctx.d_alpha = sens_prior.d_alpha;
      StepMatrices mm;
      std::vector<StepDerivatives> dmm;
      if (!invariant) {
        mm = matrices_at(model, theta, ctx);
        dmm = derivatives_at(model, theta, ctx, mm);
      }
      const VectorXd x = model.innovation_regressor() ? VectorXd::Zero(dims.d)
                                                      : data_regressor(model, theta, data, k);
      DiffMeasurementResult upd = diff_measurement_update(
          prior, sens_prior, data.y[k - 1], x, invariant ? fixed : mm, invariant ? d_fixed : dmm);

      const double term = ud_loglik_term(upd.out);
      if (!std::isfinite(term)) {
        throw Error(ErrorCode::NonFiniteLogLik, "log-likelihood term is not finite");
      }
      sum += term;
      grad += -0.5 * ud_score_term(upd.out, upd.step);

      if (model.innovation_regressor()) {
        x_prev = model.regressor_from_innovation(theta, upd.out.e);
        d_x_prev = model.regressor_derivatives(theta, upd.out.e, upd.step.d_e);
      } else {
        x_prev = x;
      }
      if (keep_path) {
        result.filtered.push_back(upd.filtered);
        result.sensitivities.push_back(upd.sens);
        result.steps.push_back(std::move(upd.out));
        result.step_sensitivities.push_back(std::move(upd.step));
      }
      state = std::move(upd.filtered);
      sens = std::move(upd.sens);
    } catch (const Error& err) {
      throw err.at_step(k);
    }
  }

  result.eval.value = -loglik_constant(dims.m, data.size()) - 0.5 * sum;
  if (!std::isfinite(result.eval.value)) {
    throw Error(ErrorCode::NonFiniteLogLik, "log-likelihood is not finite");
  }
  if (!grad.allFinite()) throw Error(ErrorCode::NonFiniteScore, "score is not finite");
  result.eval.grad = std::move(grad);
  return result;
}

LogLikEval loglik_and_score_ud(const Model& model, const VectorXd& theta, const Dataset& data) {
  return ud_diff_run(model, theta, data).eval;
}

}  // namespace udkf

#include "support.hpp"

#include "udkf/error.hpp"
#include "udkf/filter_ref.hpp"
#include "udkf/filter_ud.hpp"
#include "udkf/models.hpp"
#include "udkf/simulate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace udkf;
using udkf::test::Gen;
using udkf::test::rel_err;

namespace {

MatrixXd m1(double v) { return MatrixXd::Constant(1, 1, v); }

// n = m = 1, d = 0, no parameters.
PolynomialModel scalar_model(double t, double z, double q, double h, double pi0) {
  PolynomialModel::Spec s;
  s.dims = {1, 1, 0, 0};
  s.t.base = m1(t);
  s.z.base = m1(z);
  s.q.base = m1(q);
  s.h.base = m1(h);
  s.s.base = m1(0);
  s.b.base = MatrixXd::Zero(1, 0);
  s.beta.base = MatrixXd::Zero(1, 0);
  s.alpha0.base = m1(0);
  s.pi0.base = m1(pi0);
  return PolynomialModel(std::move(s));
}

Dataset one_obs(double y) {
  Dataset d;
  d.y.push_back(VectorXd::Constant(1, y));
  return d;
}

StepMatrices random_mats(Gen& g, Index n, Index m, Index d) {
  RawMatrices raw{g.matrix(n, n, 0.5), g.matrix(m, n), g.matrix(n, d), g.matrix(m, d),
                  g.spd(n, 0.1), g.spd(m, 0.5), MatrixXd::Zero(n, m)};
  return precompute_bars(raw);
}

}  // namespace

TEST(ConvFilter, ScalarOneStep) {
  const PolynomialModel model = scalar_model(1, 1, 0, 1, 1);
  const ConvRunResult r = conv_run(model, VectorXd(0), one_obs(2.0), false, true);
  ASSERT_EQ(r.filtered.size(), 1u);
  EXPECT_DOUBLE_EQ(r.filtered[0].alpha(0), 1.0);
  EXPECT_DOUBLE_EQ(r.filtered[0].p(0, 0), 0.5);
}

TEST(UdFilter, ScalarOneStep) {
  const PolynomialModel model = scalar_model(1, 1, 0, 1, 1);
  const UdRunResult r = ud_run(model, VectorXd(0), one_obs(2.0), true);
  ASSERT_EQ(r.filtered.size(), 1u);
  EXPECT_DOUBLE_EQ(r.filtered[0].alpha(0), 1.0);
  EXPECT_DOUBLE_EQ(reconstruct(r.filtered[0].p_ud)(0, 0), 0.5);
}

TEST(LogLik, SingleStepConstant) {
  // Z = 0 and H = 1 give Re = 1; y = 0 gives e = 0.
  const PolynomialModel model = scalar_model(1, 0, 0, 1, 1);
  const double expected = -0.5 * std::log(2 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(loglik_conventional(model, VectorXd(0), one_obs(0.0)), expected);
  EXPECT_DOUBLE_EQ(loglik_ud(model, VectorXd(0), one_obs(0.0)), expected);
}

TEST(ConvFilter, NoInformationMeasurement) {
  Gen g(1);
  StepMatrices mats = random_mats(g, 3, 2, 1);
  mats.z.setZero();
  mats.beta.setZero();
  const DenseFilterState prior{g.vector(3), g.spd(3), 1};
  const VectorXd y = g.vector(2);
  auto [post, out] = conv_measurement_update(prior, y, g.vector(1), mats);
  EXPECT_EQ(out.e, y);
  EXPECT_EQ(out.gain, MatrixXd::Zero(3, 2));
  EXPECT_EQ(post.alpha, prior.alpha);
  EXPECT_LT(rel_err(post.p, prior.p), 1e-15);
}

TEST(ConvFilter, Example1FirstStep) {
  const Example1Model model(1.0);
  VectorXd theta(1);
  theta << 3.0;
  const Dataset data = simulate(model, theta, 1, 5).data;
  const ConvRunResult r = conv_run(model, theta, data, false, true);
  const RawMatrices raw = model.raw_matrices(theta, FilterContext{});
  const MatrixXd p_prior = raw.t * (9.0 * MatrixXd::Identity(4, 4)) * raw.t.transpose() + raw.q;
  const MatrixXd re = raw.z * p_prior * raw.z.transpose() + 9.0 * MatrixXd::Identity(2, 2);
  EXPECT_LT(rel_err(r.predicted[0].p, p_prior), 1e-14);
  EXPECT_LT(rel_err(r.steps[0].re, re), 1e-14);
}

TEST(ConvFilter, SymmetricCovariances) {
  Gen g(2);
  auto sys = udkf::test::random_system(g, 4, 2, 1, true);
  const Dataset data = simulate(sys.model, sys.theta, 30, 3).data;
  const ConvRunResult r = conv_run(sys.model, sys.theta, data, true, true);
  for (const auto& s : r.filtered) EXPECT_EQ(s.p, s.p.transpose());
  for (const auto& s : r.predicted) EXPECT_EQ(s.p, s.p.transpose());
}

TEST(ConvFilter, SingularInnovationIsReported) {
  const Example1Model model(1e-8);
  VectorXd theta(1);
  theta << 3.0;
  const Dataset data = simulate(model, theta, 100, 1).data;
  try {
    loglik_conventional(model, theta, data);
    FAIL() << "expected the conventional filter to break down";
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::SingularInnovationCov ||
                e.code() == ErrorCode::NonFiniteLogLik);
    EXPECT_TRUE(e.step().has_value());
  }
  // The UD filter completes all steps with positive innovation variances.
  const UdRunResult u = ud_run(model, theta, data, true);
  ASSERT_EQ(u.steps.size(), 100u);
  for (const auto& s : u.steps) EXPECT_TRUE((s.re_ud.d.array() > 0.0).all());
  EXPECT_TRUE(std::isfinite(u.eval.value));
}

TEST(ConvSensitivity, ZeroDerivativesStayZero) {
  Gen g(4);
  const StepMatrices mats = random_mats(g, 3, 2, 1);
  StepDerivatives zero;
  zero.t = zero.t_bar = zero.q = zero.q_bar = MatrixXd::Zero(3, 3);
  zero.z = MatrixXd::Zero(2, 3);
  zero.b = zero.b_bar = MatrixXd::Zero(3, 1);
  zero.beta = MatrixXd::Zero(2, 1);
  zero.h = MatrixXd::Zero(2, 2);
  zero.s = zero.s_hinv = MatrixXd::Zero(3, 2);
  const std::vector<StepDerivatives> d_mats{zero};
  const DenseFilterState state{g.vector(3), g.spd(3), 0};
  const DenseSensitivityState sens{{VectorXd::Zero(3)}, {MatrixXd::Zero(3, 3)}};
  const VectorXd x = g.vector(1), y = g.vector(2);
  const DenseFilterState prior = conv_time_update(state, x, y, mats);
  const DenseSensitivityState sp = conv_sensitivity_time_update(state, sens, x, {}, y, mats, d_mats);
  auto [post, out] = conv_measurement_update(prior, g.vector(2), x, mats);
  auto [sq, so] = conv_sensitivity_measurement_update(prior, sp, out, x, mats, d_mats);
  EXPECT_EQ(sq.d_alpha[0], VectorXd::Zero(3));
  EXPECT_EQ(sq.d_p[0], MatrixXd::Zero(3, 3));
  EXPECT_EQ(so.d_e[0], VectorXd::Zero(2));
  EXPECT_EQ(so.d_re[0], MatrixXd::Zero(2, 2));
}

TEST(ConvSensitivity, Example1InnovationCovarianceDerivative) {
  const Example1Model model(1.0);
  VectorXd theta(1);
  theta << 3.0;
  const Dataset data = simulate(model, theta, 3, 9).data;
  const ConvRunResult r = conv_run(model, theta, data, true, true);
  const double h = 1e-6;
  const ConvRunResult up = conv_run(model, VectorXd::Constant(1, 3.0 + h), data, false, true);
  const ConvRunResult dn = conv_run(model, VectorXd::Constant(1, 3.0 - h), data, false, true);
  for (std::size_t k = 0; k < 3; ++k) {
    const MatrixXd fd = (up.steps[k].re - dn.steps[k].re) / (2 * h);
    EXPECT_LT(rel_err(r.sensitivities[k].d_re[0], fd), 1e-6) << "step " << k + 1;
    const VectorXd fde = (up.steps[k].e - dn.steps[k].e) / (2 * h);
    EXPECT_LT(rel_err(r.sensitivities[k].d_e[0], fde), 1e-6) << "step " << k + 1;
  }
}

TEST(ConvSensitivity, ScoreMatchesFiniteDifferences) {
  Gen g(5);
  for (int trial = 0; trial < 5; ++trial) {
    auto sys = udkf::test::random_system(g, 3, 2, 1, trial % 2 == 1);
    const Dataset data = simulate(sys.model, sys.theta, 40, 100 + trial).data;
    const LogLikEval e = loglik_and_score_conventional(sys.model, sys.theta, data);
    EXPECT_DOUBLE_EQ(e.value, loglik_conventional(sys.model, sys.theta, data));
    for (Index i = 0; i < 5; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(sys.theta(i)));
      VectorXd up = sys.theta, dn = sys.theta;
      up(i) += h;
      dn(i) -= h;
      const double fd = (loglik_conventional(sys.model, up, data) -
                         loglik_conventional(sys.model, dn, data)) / (2 * h);
      EXPECT_LT(rel_err(e.grad(i), fd), 1e-5) << "trial " << trial << " theta_" << i;
    }
  }
}

TEST(UdFilter, StaticNoiselessTimeUpdateIsIdentity) {
  Gen g(6);
  StepMatrices mats = random_mats(g, 3, 1, 1);
  mats.t_bar = MatrixXd::Identity(3, 3);
  mats.b_bar.setZero();
  mats.s_hinv.setZero();
  mats.ud_q_bar = {MatrixXd::Identity(3, 3), VectorXd::Zero(3)};
  const UdFilterState state{g.vector(3), udu_factorize(g.spd(3)), 0};
  const UdFilterState prior = ud_time_update(state, g.vector(1), g.vector(1), mats);
  EXPECT_EQ(prior.alpha, state.alpha);
  EXPECT_LT(rel_err(prior.p_ud.u, state.p_ud.u), 1e-15);
  EXPECT_LT(rel_err(prior.p_ud.d, state.p_ud.d), 1e-15);
}

TEST(UdFilter, NoInformationMeasurement) {
  Gen g(7);
  StepMatrices mats = random_mats(g, 3, 2, 1);
  mats.z.setZero();
  const UdFilterState prior{g.vector(3), udu_factorize(g.spd(3)), 1};
  auto [post, out] = ud_measurement_update(prior, g.vector(2), g.vector(1), mats);
  EXPECT_LT(rel_err(out.re_ud.u, mats.ud_h.u), 1e-15);
  EXPECT_LT(rel_err(out.re_ud.d, mats.ud_h.d), 1e-15);
  EXPECT_EQ(out.k_u, MatrixXd::Zero(3, 2));
  EXPECT_EQ(post.alpha, prior.alpha);
  EXPECT_LT(rel_err(reconstruct(post.p_ud), reconstruct(prior.p_ud)), 1e-15);
}

TEST(UdFilter, Example1FirstTimeUpdate) {
  const Example1Model model(1.0);
  VectorXd theta(1);
  theta << 3.0;
  const Dataset data = simulate(model, theta, 1, 2).data;
  const UdRunResult r = ud_run(model, theta, data, true);
  const RawMatrices raw = model.raw_matrices(theta, FilterContext{});
  const MatrixXd oracle = raw.t * (9.0 * MatrixXd::Identity(4, 4)) * raw.t.transpose() + raw.q;
  EXPECT_LT(rel_err(reconstruct(r.predicted[0].p_ud), oracle), 1e-12);
}

TEST(UdFilter, EquivalentToConventionalProperty) {
  Gen g(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = g.integer(1, 6), m = g.integer(1, 3), d = g.integer(0, 2);
    auto sys = udkf::test::random_system(g, n, m, d, trial % 2 == 0);
    const Dataset data = simulate(sys.model, sys.theta, 50, 500 + trial).data;
    const ConvRunResult c = conv_run(sys.model, sys.theta, data, false, true);
    const UdRunResult u = ud_run(sys.model, sys.theta, data, true);
    for (std::size_t k = 0; k < data.size(); ++k) {
      ASSERT_LT(rel_err(u.predicted[k].alpha, c.predicted[k].alpha), 1e-9) << trial << " " << k;
      ASSERT_LT(rel_err(reconstruct(u.predicted[k].p_ud), c.predicted[k].p), 1e-9);
      ASSERT_LT(rel_err(u.filtered[k].alpha, c.filtered[k].alpha), 1e-9);
      ASSERT_LT(rel_err(reconstruct(u.filtered[k].p_ud), c.filtered[k].p), 1e-9);

      const UdStepOutput& s = u.steps[k];
      const ConvStepOutput& o = c.steps[k];
      // Unit-triangular determinant identity and the quadratic form.
      EXPECT_LT(rel_err(s.re_ud.d.array().log().sum(), o.log_det_re), 1e-10);
      const double quad = (s.e_bar.array().square() / s.re_ud.d.array()).sum();
      EXPECT_LT(rel_err(quad, o.quad), 1e-10);
      // K = K_u U_Re^-1.
      const MatrixXd k_gain =
          s.re_ud.u.transpose().triangularView<Eigen::UnitLower>().solve(s.k_u.transpose()).transpose();
      EXPECT_LT(rel_err(k_gain, o.gain), 1e-9);
      EXPECT_TRUE((u.filtered[k].p_ud.d.array() >= 0.0).all());
    }
    EXPECT_LT(rel_err(u.eval.value, c.eval.value), 1e-9);
  }
}

TEST(UdFilter, PairwiseEqualsLtiWithLaggedRegressor) {
  Gen g(9);
  for (int trial = 0; trial < 5; ++trial) {
    auto pw = udkf::test::random_system(g, 3, 2, 2, trial % 2 == 0, ModelKind::Pairwise);
    PolynomialModel::Spec spec = pw.model.spec();
    spec.kind = ModelKind::LtiMimo;
    const PolynomialModel lti(spec);

    Dataset data = simulate(pw.model, pw.theta, 40, 900 + trial).data;
    Dataset lagged = data;
    lagged.x.clear();
    for (std::size_t k = 0; k < data.size(); ++k) {
      lagged.x.push_back(k == 0 ? data.y0 : data.y[k - 1]);
    }
    lagged.x0 = spec.presample;
    data.x.clear();  // pairwise models take the regressor from y themselves

    EXPECT_LT(rel_err(loglik_ud(pw.model, pw.theta, data), loglik_ud(lti, pw.theta, lagged)), 1e-13);
    EXPECT_LT(rel_err(loglik_conventional(pw.model, pw.theta, data),
                      loglik_conventional(lti, pw.theta, lagged)), 1e-13);
  }
}

TEST(UdFilter, StructuralPsdAcrossDeltaSweep) {
  VectorXd theta(1);
  theta << 3.0;
  for (int e = 0; e <= 12; ++e) {
    const Example1Model model(std::pow(10.0, -e));
    const Dataset data = simulate(model, theta, 100, 77).data;
    const UdRunResult r = ud_run(model, theta, data, true);
    EXPECT_EQ(r.negative_d_p, 0u) << "delta 1e-" << e;
    EXPECT_GE(r.min_d_p, 0.0);
    for (const auto& s : r.predicted) EXPECT_TRUE((s.p_ud.d.array() >= 0.0).all());
    for (const auto& s : r.filtered) EXPECT_TRUE((s.p_ud.d.array() >= 0.0).all());
  }
}

TEST(UdFilter, TeeTimeUpdateKeepsMeanCoefficients) {
  VectorXd theta(6);
  theta << 0.1, 0.1, 0.8, 0.05, 0.0, 0.0;
  const SimulatedData sim = simulate_tee(theta, 200, 3, {0.1, 0.3, 0.0});
  for (const auto& a : sim.alpha) {
    EXPECT_EQ(a(1), 0.1);
    EXPECT_EQ(a(2), 0.3);
  }
  std::vector<double> returns;
  for (const auto& y : sim.data.y) returns.push_back(y(0));
  const TeeModel model(returns, {});
  const UdRunResult r = ud_run(model, theta, sim.data, true);
  for (std::size_t k = 1; k < r.predicted.size(); ++k) {
    EXPECT_EQ(r.predicted[k].alpha.tail(2), r.filtered[k - 1].alpha.tail(2));
  }
}

TEST(Filters, ErrorsCarryStepIndex) {
  const PolynomialModel model = scalar_model(1, 1, 0.1, 1, 1);
  Dataset data;
  for (double y : {0.5, -0.2, std::nan(""), 1.0}) data.y.push_back(VectorXd::Constant(1, y));
  for (int which = 0; which < 2; ++which) {
    try {
      if (which == 0) ud_run(model, VectorXd(0), data);
      else conv_run(model, VectorXd(0), data, false);
      FAIL() << "expected an error";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NonFiniteLogLik);
      EXPECT_EQ(e.step(), std::optional<std::size_t>(3));
    }
  }
}

#include "udkf/optimizer.hpp"

#include "udkf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace udkf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArmijo = 1e-4;
constexpr double kBacktrack = 0.5;
constexpr int kMaxHalvings = 50;

// GarchStationarity layout: [a0, a1, b1, delta, sigma0, sigma1] with
//   a0 = exp(phi0), a1 + b1 = logistic(phi1), a1 / (a1 + b1) = logistic(phi2),
//   delta = phi3, sigma_j = phi_{4+j} (only sigma^2 enters the model).
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

void check_garch_size(const VectorXd& v) {
  if (v.size() != 6) {
    throw Error(ErrorCode::InvalidArgument, "GARCH transform needs six parameters");
  }
}

struct Box {
  VectorXd lo, hi;
};

Box internal_box(const FitConfig& cfg, Index p) {
  Box b{VectorXd::Constant(p, -kInf), VectorXd::Constant(p, kInf)};
  if (cfg.transform == Transform::GarchStationarity) {
    if (cfg.lower.size()) b.lo = cfg.lower;
    if (cfg.upper.size()) b.hi = cfg.upper;
    return b;
  }
  if (cfg.lower.size()) b.lo = cfg.lower;
  if (cfg.upper.size()) b.hi = cfg.upper;
  if (cfg.transform == Transform::LogPositive) {
    for (Index i = 0; i < p; ++i) {
      b.lo(i) = b.lo(i) > 0.0 ? std::log(b.lo(i)) : -kInf;
      b.hi(i) = b.hi(i) < kInf ? std::log(b.hi(i)) : kInf;
    }
  }
  return b;
}

VectorXd project(const VectorXd& phi, const Box& box) {
  return phi.cwiseMax(box.lo).cwiseMin(box.hi);
}

// Evaluates -ln L at phi. Value-only unless `with_grad`; the gradient is
// returned in phi coordinates.
struct Evaluator {
  const Objective& objective;
  const FitConfig& cfg;
  const Box& box;
  std::size_t calls = 0;

  double value(const VectorXd& phi) {
    ++calls;
    return -objective(from_internal(cfg.transform, phi), false).value;
  }

  // Returns false on failure.
  bool value_and_grad(const VectorXd& phi, double& f, VectorXd& g) {
    try {
      ++calls;
      LogLikEval e = objective(from_internal(cfg.transform, phi), true);
      if (!std::isfinite(e.value) || e.grad.size() != phi.size() || !e.grad.allFinite()) {
        return false;
      }
      f = -e.value;
      g = -(internal_jacobian(cfg.transform, phi).transpose() * e.grad);
      return true;
    } catch (const Error&) {
      return false;
    }
  }

  double safe_value(const VectorXd& phi) {
    try {
      const double v = value(phi);
      return std::isfinite(v) ? v : kInf;
    } catch (const Error&) {
      return kInf;
    }
  }

  // Central differences, one-sided at the box or when one side fails.
  bool numeric_grad(const VectorXd& phi, double f, VectorXd& g) {
    const Index p = phi.size();
    g.resize(p);
    for (Index i = 0; i < p; ++i) {
      const double h = std::cbrt(std::numeric_limits<double>::epsilon()) *
                       std::max(1.0, std::abs(phi(i)));
      VectorXd plus = phi, minus = phi;
      plus(i) += h;
      minus(i) -= h;
      const bool up_ok = plus(i) <= box.hi(i);
      const bool down_ok = minus(i) >= box.lo(i);
      const double fp = up_ok ? safe_value(plus) : kInf;
      const double fm = down_ok ? safe_value(minus) : kInf;
      if (std::isfinite(fp) && std::isfinite(fm)) {
        g(i) = (fp - fm) / (2.0 * h);
      } else if (std::isfinite(fp)) {
        g(i) = (fp - f) / h;
      } else if (std::isfinite(fm)) {
        g(i) = (f - fm) / h;
      } else {
        return false;
      }
    }
    return true;
  }

  bool at_point(const VectorXd& phi, double& f, VectorXd& g) {
    if (cfg.use_analytic_score) return value_and_grad(phi, f, g);
    f = safe_value(phi);
    if (!std::isfinite(f)) return false;
    return numeric_grad(phi, f, g);
  }
};

void validate_config(const FitConfig& cfg) {
  const Index p = cfg.theta0.size();
  if (p == 0) throw Error(ErrorCode::InvalidBounds, "empty starting point");
  if ((cfg.lower.size() && cfg.lower.size() != p) || (cfg.upper.size() && cfg.upper.size() != p)) {
    throw Error(ErrorCode::InvalidBounds, "bounds have the wrong length");
  }
  if (cfg.lower.size() && cfg.upper.size() && !(cfg.lower.array() < cfg.upper.array()).all()) {
    throw Error(ErrorCode::InvalidBounds, "lower bound must be below upper bound");
  }
  if (cfg.transform != Transform::GarchStationarity) {
    if (cfg.lower.size() && (cfg.theta0.array() < cfg.lower.array()).any()) {
      throw Error(ErrorCode::InvalidBounds, "starting point below lower bound");
    }
    if (cfg.upper.size() && (cfg.theta0.array() > cfg.upper.array()).any()) {
      throw Error(ErrorCode::InvalidBounds, "starting point above upper bound");
    }
  }
  if (cfg.transform == Transform::LogPositive && !(cfg.theta0.array() > 0.0).all()) {
    throw Error(ErrorCode::InvalidBounds, "log transform needs a positive starting point");
  }
  if (cfg.max_iters < 0 || !(cfg.grad_tol >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "bad iteration limits");
  }
}

// Zeroes components that push against an active bound.
VectorXd projected_gradient(const VectorXd& phi, const VectorXd& g, const Box& box) {
  VectorXd pg = g;
  for (Index i = 0; i < g.size(); ++i) {
    if ((phi(i) <= box.lo(i) && g(i) > 0.0) || (phi(i) >= box.hi(i) && g(i) < 0.0)) pg(i) = 0.0;
  }
  return pg;
}

}  // namespace

std::string_view to_string(FitStatus s) {
  switch (s) {
    case FitStatus::Converged: return "converged";
    case FitStatus::MaxIters: return "max_iters";
    case FitStatus::ObjectiveFailure: return "objective_failure";
  }
  return "unknown";
}

VectorXd to_internal(Transform t, const VectorXd& theta) {
  switch (t) {
    case Transform::None: return theta;
    case Transform::LogPositive: return theta.array().log().matrix();
    case Transform::GarchStationarity: {
      check_garch_size(theta);
      const double s = theta(1) + theta(2);
      VectorXd phi(6);
      phi(0) = std::log(theta(0));
      phi(1) = logit(s);
      phi(2) = logit(s > 0.0 ? theta(1) / s : 0.5);
      phi(3) = theta(3);
      phi(4) = theta(4);
      phi(5) = theta(5);
      return phi;
    }
  }
  return theta;
}

VectorXd from_internal(Transform t, const VectorXd& phi) {
  switch (t) {
    case Transform::None: return phi;
    case Transform::LogPositive: return phi.array().exp().matrix();
    case Transform::GarchStationarity: {
      check_garch_size(phi);
      const double s = logistic(phi(1));
      const double share = logistic(phi(2));
      VectorXd theta(6);
      theta << std::exp(phi(0)), s * share, s * (1.0 - share), phi(3), phi(4), phi(5);
      return theta;
    }
  }
  return phi;
}

MatrixXd internal_jacobian(Transform t, const VectorXd& phi) {
  const Index p = phi.size();
  switch (t) {
    case Transform::None: return MatrixXd::Identity(p, p);
    case Transform::LogPositive: return phi.array().exp().matrix().asDiagonal();
    case Transform::GarchStationarity: {
      check_garch_size(phi);
      const double s = logistic(phi(1)), ds = s * (1.0 - s);
      const double c = logistic(phi(2)), dc = c * (1.0 - c);
      MatrixXd j = MatrixXd::Identity(6, 6);
      j(0, 0) = std::exp(phi(0));
      j(1, 1) = ds * c;
      j(1, 2) = s * dc;
      j(2, 1) = ds * (1.0 - c);
      j(2, 2) = -s * dc;
      return j;
    }
  }
  return MatrixXd::Identity(p, p);
}

FitResult fit_mle(const Objective& objective, const FitConfig& cfg) {
  validate_config(cfg);
  const Index p = cfg.theta0.size();
  const Box box = internal_box(cfg, p);
  Evaluator ev{objective, cfg, box};

  FitResult res;
  VectorXd phi = project(to_internal(cfg.transform, cfg.theta0), box);
  double f = 0.0;
  VectorXd g;
  res.theta = from_internal(cfg.transform, phi);
  if (!ev.at_point(phi, f, g)) {
    res.status = FitStatus::ObjectiveFailure;
    res.detail = "objective failed at the starting point";
    res.theta = cfg.theta0;
    res.evaluations = ev.calls;
    return res;
  }
  res.loglik = -f;
  res.history.push_back(-f);

  MatrixXd hinv = MatrixXd::Identity(p, p);
  bool scaled = false;
  for (int iter = 0;; ++iter) {
    res.iterations = iter;
    const VectorXd pg = projected_gradient(phi, g, box);
    if (pg.lpNorm<Eigen::Infinity>() < cfg.grad_tol) {
      res.status = FitStatus::Converged;
      res.detail = "projected gradient below tolerance";
      break;
    }
    if (iter >= cfg.max_iters) {
      res.status = FitStatus::MaxIters;
      res.detail = "iteration limit reached";
      break;
    }

    // Free variables only; active ones stay on their bound.
    VectorXd mask = VectorXd::Ones(p);
    for (Index i = 0; i < p; ++i) {
      if (pg(i) == 0.0 && g(i) != 0.0) mask(i) = 0.0;
    }
    auto direction = [&](const MatrixXd& h) -> VectorXd {
      return -(mask.asDiagonal() * h * mask.asDiagonal() * g);
    };
    VectorXd d = direction(hinv);
    if (!(d.dot(g) < 0.0)) {
      hinv.setIdentity();
      scaled = false;
      d = direction(hinv);
    }
    if (!scaled) {
      const double dn = d.norm();
      if (dn > 1.0) d /= dn;
    }

    double f_new = kInf;
    VectorXd phi_new, g_new;
    bool accepted = false;
    bool steepest = !scaled;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double t = 1.0;
      for (int h = 0; h < kMaxHalvings; ++h, t *= kBacktrack) {
        phi_new = project(phi + t * d, box);
        const VectorXd step = phi_new - phi;
        // A step this small cannot change the iterate meaningfully.
        if (step.lpNorm<Eigen::Infinity>() <=
            cfg.step_tol * (1.0 + phi.lpNorm<Eigen::Infinity>())) {
          break;
        }
        // Same for a predicted decrease the objective cannot resolve.
        if (-g.dot(step) <= cfg.f_tol * (1.0 + std::abs(f))) break;
        // Trials are value-only in both modes; the gradient is taken once at
        // the accepted point.
        const double trial = ev.safe_value(phi_new);
        if (std::isfinite(trial) && trial <= f + kArmijo * g.dot(step)) {
          f_new = trial;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        // Retry once along steepest descent before giving up.
        if (steepest) break;
        steepest = true;
        hinv.setIdentity();
        scaled = false;
        d = direction(hinv);
        const double dn = d.norm();
        if (dn > 1.0) d /= dn;
      }
    }
    if (!accepted) {
      res.status = FitStatus::Converged;
      res.detail = "line search made no further progress";
      break;
    }
    bool grad_ok;
    if (cfg.use_analytic_score) {
      double f_check;
      grad_ok = ev.value_and_grad(phi_new, f_check, g_new);
    } else {
      grad_ok = ev.numeric_grad(phi_new, f_new, g_new);
    }
    if (!grad_ok) {
      phi = phi_new;
      f = f_new;
      res.history.push_back(-f);
      res.status = FitStatus::ObjectiveFailure;
      res.detail = "gradient evaluation failed";
      res.iterations = iter + 1;
      break;
    }

    const VectorXd s = phi_new - phi;
    const VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        hinv = (sy / y.squaredNorm()) * MatrixXd::Identity(p, p);
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const MatrixXd v = MatrixXd::Identity(p, p) - rho * s * y.transpose();
      hinv = v * hinv * v.transpose() + rho * s * s.transpose();
    }

    const double f_old = f;
    phi = phi_new;
    f = f_new;
    g = g_new;
    res.history.push_back(-f);
    if (s.lpNorm<Eigen::Infinity>() <= cfg.step_tol * (1.0 + phi.lpNorm<Eigen::Infinity>())) {
      res.status = FitStatus::Converged;
      res.detail = "step below tolerance";
      res.iterations = iter + 1;
      break;
    }
    if (std::abs(f_old - f) <= cfg.f_tol * (1.0 + std::abs(f))) {
      res.status = FitStatus::Converged;
      res.detail = "objective change below tolerance";
      res.iterations = iter + 1;
      break;
    }
  }

  res.theta = from_internal(cfg.transform, phi);
  res.loglik = -f;
  res.evaluations = ev.calls;
  return res;
}

}  // namespace udkf

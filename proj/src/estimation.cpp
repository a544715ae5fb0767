#include "udkf/estimation.hpp"

#include "udkf/filter_ref.hpp"
#include "udkf/filter_ud.hpp"
#include "udkf/filter_ud_diff.hpp"

namespace udkf {

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::ConvNumeric: return "conv-numeric";
    case Estimator::ConvAnalytic: return "conv-analytic";
    case Estimator::UdNumeric: return "ud-numeric";
    case Estimator::UdAnalytic: return "ud-analytic";
  }
  return "unknown";
}

std::optional<Estimator> parse_estimator(std::string_view name) {
  for (Estimator e : kAllEstimators) {
    if (to_string(e) == name) return e;
  }
  return std::nullopt;
}

bool uses_ud(Estimator e) { return e == Estimator::UdNumeric || e == Estimator::UdAnalytic; }

bool uses_analytic_score(Estimator e) {
  return e == Estimator::ConvAnalytic || e == Estimator::UdAnalytic;
}

Objective make_objective(Estimator e, const Model& model, const Dataset& data) {
  if (uses_ud(e)) {
    return [&model, &data](const VectorXd& theta, bool need_grad) {
      if (need_grad) return loglik_and_score_ud(model, theta, data);
      return LogLikEval{loglik_ud(model, theta, data), {}};
    };
  }
  return [&model, &data](const VectorXd& theta, bool need_grad) {
    if (need_grad) return loglik_and_score_conventional(model, theta, data);
    return LogLikEval{loglik_conventional(model, theta, data), {}};
  };
}

FitResult fit_estimator(Estimator e, const Model& model, const Dataset& data,
                        FitConfig config) {
  config.use_analytic_score = uses_analytic_score(e);
  return fit_mle(make_objective(e, model, data), config);
}

}  // namespace udkf

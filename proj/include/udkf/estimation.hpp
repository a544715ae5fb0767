#pragma once

// The four likelihood estimators: {conventional, UD} filter x {numeric,
// analytic} score.

#include "udkf/model.hpp"
#include "udkf/optimizer.hpp"

#include <optional>
#include <string_view>

namespace udkf {

enum class Estimator { ConvNumeric, ConvAnalytic, UdNumeric, UdAnalytic };

inline constexpr Estimator kAllEstimators[] = {Estimator::ConvNumeric, Estimator::ConvAnalytic,
                                               Estimator::UdNumeric, Estimator::UdAnalytic};

/// "conv-numeric", "conv-analytic", "ud-numeric", "ud-analytic".
std::string_view to_string(Estimator e);
std::optional<Estimator> parse_estimator(std::string_view name);

bool uses_ud(Estimator e);
bool uses_analytic_score(Estimator e);

/// ln L objective for fit_mle. The model and data must outlive it.
Objective make_objective(Estimator e, const Model& model, const Dataset& data);

/// fit_mle with the estimator's filter and score mode; `config` supplies
/// the starting point, bounds and transform.
FitResult fit_estimator(Estimator e, const Model& model, const Dataset& data,
                        FitConfig config);

}  // namespace udkf

#pragma once

// Monte Carlo accuracy and timing study. Run j simulates its data from
// seed base_seed + j, and every requested estimator fits that same data.

#include "udkf/estimation.hpp"
#include "udkf/simulate.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace udkf {

struct McRun {
  VectorXd theta_hat;
  FitStatus status = FitStatus::ObjectiveFailure;
  std::string detail;
  double seconds = 0.0;
  int iterations = 0;
  std::uint64_t data_hash = 0;
};

struct McSummary {
  Estimator estimator = Estimator::UdAnalytic;
  VectorXd mean;  // over successful runs
  VectorXd rmse;
  VectorXd mape;  // percent
  double time_mean = 0.0;    // seconds, over all runs
  double time_median = 0.0;
  std::size_t successes = 0;
  std::size_t failures = 0;
  std::vector<McRun> per_run;
};

struct McConfig {
  std::size_t runs = 100;
  std::size_t horizon = 100;
  std::uint64_t base_seed = 1;
  unsigned threads = 0;  // 0 means hardware concurrency
  FitConfig fit;         // starting point, bounds, transform
};

using DataGenerator = std::function<SimulatedData(std::uint64_t seed)>;

/// Runs every estimator in `estimators` on each replicate. When `generate`
/// is empty the data come from simulate(model, theta_true, horizon, seed).
/// Replicates run in parallel; the estimators of one replicate run
/// sequentially on one thread so their timings are comparable.
std::vector<McSummary> monte_carlo_compare(const std::vector<Estimator>& estimators,
                                           const Model& model, const VectorXd& theta_true,
                                           const McConfig& config,
                                           const DataGenerator& generate = {});

McSummary monte_carlo_study(Estimator estimator, const Model& model, const VectorXd& theta_true,
                            const McConfig& config, const DataGenerator& generate = {});

/// Recomputes the statistics of `s` from its per-run records.
void summarize(McSummary& s, const VectorXd& theta_true);

/// (t_numeric - t_analytic) / t_analytic * 100 using mean fit times.
double cpu_benefit_pct(const McSummary& numeric, const McSummary& analytic);

}  // namespace udkf

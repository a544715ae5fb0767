#include "udkf/monte_carlo.hpp"

#include "udkf/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace udkf {

void summarize(McSummary& s, const VectorXd& theta_true) {
  const Index p = theta_true.size();
  s.mean = VectorXd::Zero(p);
  s.rmse = VectorXd::Zero(p);
  s.mape = VectorXd::Zero(p);
  s.successes = 0;
  s.failures = 0;
  std::vector<double> times;
  for (const McRun& r : s.per_run) {
    times.push_back(r.seconds);
    if (r.status == FitStatus::ObjectiveFailure) {
      ++s.failures;
      continue;
    }
    ++s.successes;
    const VectorXd err = r.theta_hat - theta_true;
    s.mean += r.theta_hat;
    s.rmse += err.cwiseAbs2();
    s.mape += (err.cwiseAbs().array() / theta_true.cwiseAbs().array()).matrix();
  }
  if (s.successes) {
    const double k = static_cast<double>(s.successes);
    s.mean /= k;
    s.rmse = (s.rmse / k).cwiseSqrt();
    s.mape *= 100.0 / k;
  } else {
    const double nan = std::nan("");
    s.mean.setConstant(nan);
    s.rmse.setConstant(nan);
    s.mape.setConstant(nan);
  }
  if (!times.empty()) {
    double acc = 0.0;
    for (double t : times) acc += t;
    s.time_mean = acc / static_cast<double>(times.size());
    std::sort(times.begin(), times.end());
    const std::size_t mid = times.size() / 2;
    s.time_median = times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
  }
}

std::vector<McSummary> monte_carlo_compare(const std::vector<Estimator>& estimators,
                                           const Model& model, const VectorXd& theta_true,
                                           const McConfig& config,
                                           const DataGenerator& generate) {
  if (config.runs == 0) throw Error(ErrorCode::InvalidArgument, "need at least one run");
  std::vector<McSummary> out(estimators.size());
  for (std::size_t e = 0; e < estimators.size(); ++e) {
    out[e].estimator = estimators[e];
    out[e].per_run.resize(config.runs);
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t j = next++; j < config.runs; j = next++) {
      const std::uint64_t seed = config.base_seed + j;
      const SimulatedData sim =
          generate ? generate(seed) : simulate(model, theta_true, config.horizon, seed);
      const std::uint64_t hash = dataset_hash(sim.data);
      for (std::size_t e = 0; e < estimators.size(); ++e) {
        McRun& run = out[e].per_run[j];
        run.data_hash = hash;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          FitResult fit = fit_estimator(estimators[e], model, sim.data, config.fit);
          run.theta_hat = std::move(fit.theta);
          run.status = fit.status;
          run.detail = std::move(fit.detail);
          run.iterations = fit.iterations;
        } catch (const Error& err) {
          run.theta_hat = config.fit.theta0;
          run.status = FitStatus::ObjectiveFailure;
          run.detail = err.what();
        }
        run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
    }
  };

  unsigned threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(config.runs)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (auto& s : out) summarize(s, theta_true);
  return out;
}

McSummary monte_carlo_study(Estimator estimator, const Model& model, const VectorXd& theta_true,
                            const McConfig& config, const DataGenerator& generate) {
  return monte_carlo_compare({estimator}, model, theta_true, config, generate).front();
}

double cpu_benefit_pct(const McSummary& numeric, const McSummary& analytic) {
  return (numeric.time_mean - analytic.time_mean) / analytic.time_mean * 100.0;
}

}  // namespace udkf

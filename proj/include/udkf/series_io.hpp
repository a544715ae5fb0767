#pragma once

// Text input/output: price CSVs, simulated-series CSVs, polynomial model
// configuration files and the efficiency path of a fitted GARCH-in-Mean
// model.

#include "udkf/models.hpp"
#include "udkf/simulate.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace udkf {

/// 17 significant digits, enough to round-trip a double.
std::string format_double(double v);

struct PriceSeries {
  std::vector<std::string> dates;
  std::vector<double> close;

  /// y_k = 100 (ln S_k - ln S_{k-1}); one element shorter than close.
  std::vector<double> returns() const;
};

/// Reads a CSV with at least the columns `date` and `close` (any order,
/// extra columns ignored). Throws CsvParseError naming the line.
PriceSeries read_price_csv(std::istream& in);
PriceSeries read_price_csv_file(const std::string& path);

/// Splits one CSV line on commas (no quoting support) and trims blanks.
std::vector<std::string> split_csv_line(const std::string& line);

/// Simulated series as CSV: columns k, y1..ym, x1..xd, alpha1..alphan.
/// Row k = 0 holds the pre-sample values (alpha columns empty); with
/// N = 0 only the header is written.
void write_simulation_csv(std::ostream& out, const SimulatedData& sim, const Dims& dims);
SimulatedData read_simulation_csv(std::istream& in, const Dims& dims);

struct EfficiencyRow {
  std::string date;
  double beta1 = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool efficient = false;  // 0 inside [ci_low, ci_high]
  double h = 0.0;          // one-step-ahead conditional variance
};

/// Filtered beta1_{k|k} with a 95% band from the UD filter run at theta.
/// `dates` may be empty or hold one label per observation.
std::vector<EfficiencyRow> efficiency_path(const TeeModel& model, const VectorXd& theta,
                                           const Dataset& data,
                                           const std::vector<std::string>& dates = {});

/// Reads a polynomial model description. Lines are `key = value`, `#`
/// starts a comment. Keys:
///   kind = lti | pairwise
///   dims = n m d p
///   names = a b ...
///   M, M@i, M@i^2 for M in T Z B beta Q H S alpha0 Pi0   (i is 1-based)
///   presample = v1 v2 ...
/// Matrix values list rows separated by `;`, entries by blanks.
PolynomialModel::Spec read_model_config(std::istream& in);
PolynomialModel::Spec read_model_config_file(const std::string& path);

}  // namespace udkf

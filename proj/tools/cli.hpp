#pragma once

// Subcommands of the udkf command-line tool. Each returns the process exit
// code: 0 success, 1 estimator failures occurred (results still written),
// 2 configuration or input error.

#include "udkf/estimation.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace udkf::cli {

inline constexpr const char* kVersion = "0.1.0";

enum class Format { Csv, Json };

using Cell = std::variant<std::string, double, std::int64_t, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct Example1Options {
  std::vector<double> deltas;  // empty means 1e0 .. 1e-12
  std::size_t runs = 100;
  std::size_t horizon = 100;
  double theta_true = 3.0;
  double theta0 = 1.0;
  std::vector<Estimator> estimators;  // empty means all four
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out = ".";
  Format format = Format::Csv;
};

struct TeeOptions {
  std::string csv;
  std::vector<double> theta0;  // empty means data-driven defaults
  double h_min = 1e-10;
  std::uint64_t seed = 1;
  std::string out = ".";
  Format format = Format::Csv;
};

struct SimulateOptions {
  std::string model = "example1";  // example1, tee or a model config file
  double delta = 1.0;              // example1 only
  std::vector<double> theta;       // empty means the model default
  std::size_t n = 100;
  std::uint64_t seed = 1;
  std::string out = ".";
  Format format = Format::Csv;
};

struct FitOptions {
  std::string model = "example1";  // example1 or a model config file
  double delta = 1.0;
  std::string data;                // simulation CSV
  std::vector<double> theta0;
  std::vector<double> lower, upper;
  Estimator estimator = Estimator::UdAnalytic;
  std::uint64_t seed = 1;
  std::string out = ".";
  Format format = Format::Csv;
};

int cmd_example1(const Example1Options& opt, std::ostream& log);
int cmd_tee(const TeeOptions& opt, std::ostream& log);
int cmd_simulate(const SimulateOptions& opt, std::ostream& log);
int cmd_fit(const FitOptions& opt, std::ostream& log);

/// Writes `<dir>/<stem>.csv` or `<dir>/<stem>.json` ({config, rows[],
/// version}) and returns the path written.
std::string write_table(const Table& table, const std::string& config_json,
                        const std::string& dir, const std::string& stem, Format format);

/// Parses argv and dispatches; prints usage errors to `err`.
int run(int argc, char** argv, std::ostream& log, std::ostream& err);

}  // namespace udkf::cli

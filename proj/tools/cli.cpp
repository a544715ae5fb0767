#include "cli.hpp"

#include "udkf/error.hpp"
#include "udkf/monte_carlo.hpp"
#include "udkf/series_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <ostream>

namespace udkf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string cell_csv(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) return v;
        else if constexpr (std::is_same_v<T, double>) return format_double(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else return std::to_string(v);
      },
      c);
}

json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return nullptr;
        }
        return v;
      },
      c);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  return f;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::InvalidArgument, "cannot create directory " + dir);
}

VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

json vec_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

const char* format_name(Format f) { return f == Format::Csv ? "csv" : "json"; }

std::vector<double> default_deltas() {
  std::vector<double> d;
  for (int e = 0; e >= -12; --e) d.push_back(std::pow(10.0, e));
  return d;
}

// Model named on the command line: "example1", "tee" or a config file.
std::unique_ptr<Model> load_model(const std::string& name, double delta) {
  if (name == "example1") return std::make_unique<Example1Model>(delta);
  if (name == "tee") return std::make_unique<TeeModel>();
  return std::make_unique<PolynomialModel>(read_model_config_file(name));
}

}  // namespace

std::string write_table(const Table& table, const std::string& config_json,
                        const std::string& dir, const std::string& stem, Format format) {
  ensure_dir(dir);
  const std::string path = (fs::path(dir) / (stem + "." + format_name(format))).string();
  auto f = open_out(path);
  if (format == Format::Csv) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      f << (i ? "," : "") << table.columns[i];
    }
    f << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << cell_csv(row[i]);
      f << '\n';
    }
  } else {
    json doc;
    doc["config"] = json::parse(config_json);
    doc["version"] = kVersion;
    doc["rows"] = json::array();
    for (const auto& row : table.rows) {
      json r = json::object();
      for (std::size_t i = 0; i < row.size(); ++i) r[table.columns[i]] = cell_json(row[i]);
      doc["rows"].push_back(std::move(r));
    }
    f << doc.dump(2) << '\n';
  }
  return path;
}

int cmd_example1(const Example1Options& opt, std::ostream& log) {
  const std::vector<double> deltas = opt.deltas.empty() ? default_deltas() : opt.deltas;
  std::vector<Estimator> ests = opt.estimators;
  if (ests.empty()) ests.assign(std::begin(kAllEstimators), std::end(kAllEstimators));
  for (double d : deltas) {
    if (!(d > 0.0)) throw Error(ErrorCode::InvalidDelta, "delta values must be positive");
  }
  if (opt.runs == 0 || opt.horizon == 0) {
    throw Error(ErrorCode::InvalidArgument, "runs and horizon must be positive");
  }

  json config = {{"command", "example1"},   {"deltas", deltas},
                 {"runs", opt.runs},        {"horizon", opt.horizon},
                 {"theta_true", opt.theta_true}, {"theta0", opt.theta0},
                 {"seed", opt.seed}};
  config["estimators"] = json::array();
  for (Estimator e : ests) config["estimators"].push_back(std::string(to_string(e)));

  Table table{{"delta", "estimator", "mean", "rmse", "mape", "time_mean", "time_median",
               "benefit_pct", "failures"},
              {}};
  bool any_failure = false;
  const VectorXd theta_true = VectorXd::Constant(1, opt.theta_true);
  for (double delta : deltas) {
    Example1Model model(delta);
    McConfig mc;
    mc.runs = opt.runs;
    mc.horizon = opt.horizon;
    mc.base_seed = opt.seed;
    mc.threads = opt.threads;
    mc.fit.theta0 = VectorXd::Constant(1, opt.theta0);
    mc.fit.lower = VectorXd::Constant(1, 1e-3);
    mc.fit.upper = VectorXd::Constant(1, 1e3);
    const auto summaries = monte_carlo_compare(ests, model, theta_true, mc);

    for (const McSummary& s : summaries) {
      std::vector<Cell> row{delta, std::string(to_string(s.estimator))};
      const bool failed = s.successes == 0;
      any_failure = any_failure || s.failures > 0;
      if (failed) {
        row.insert(row.end(), {std::string("failed"), std::string("failed"), std::string("failed")});
      } else {
        row.insert(row.end(), {s.mean(0), s.rmse(0), s.mape(0)});
      }
      row.push_back(s.time_mean);
      row.push_back(s.time_median);
      // Benefit of the analytic score over the numeric one on the same filter.
      Cell benefit = std::string("");
      if (uses_analytic_score(s.estimator)) {
        const Estimator partner = uses_ud(s.estimator) ? Estimator::UdNumeric : Estimator::ConvNumeric;
        for (const McSummary& o : summaries) {
          if (o.estimator == partner) benefit = cpu_benefit_pct(o, s);
        }
      }
      row.push_back(benefit);
      row.push_back(static_cast<std::int64_t>(s.failures));
      table.rows.push_back(row);

      log << "delta=" << short_num(delta) << " " << to_string(s.estimator) << ": ";
      if (failed) log << "failed";
      else log << "mean " << short_num(s.mean(0)) << " rmse " << short_num(s.rmse(0))
               << " mape " << short_num(s.mape(0)) << "%";
      log << " time " << short_num(s.time_mean) << "s failures " << s.failures << "\n";
    }
  }
  const std::string path = write_table(table, config.dump(), opt.out, "example1", opt.format);
  log << "wrote " << path << "\n";
  return any_failure ? 1 : 0;
}

int cmd_tee(const TeeOptions& opt, std::ostream& log) {
  const PriceSeries prices = read_price_csv_file(opt.csv);
  const std::vector<double> r = prices.returns();
  if (r.size() < 50) {
    throw Error(ErrorCode::DegenerateData, "need at least 50 returns, got " + std::to_string(r.size()));
  }
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
  double var = 0.0;
  for (double x : r) var += (x - mean) * (x - mean);
  var /= static_cast<double>(r.size() - 1);
  if (!(var > 0.0)) throw Error(ErrorCode::DegenerateData, "returns have zero variance");

  TeeModel::Options mo;
  mo.h_min = opt.h_min;
  TeeModel model(r, mo);
  Dataset data;
  for (double x : r) data.y.push_back(VectorXd::Constant(1, x));
  data.y0 = VectorXd::Zero(1);
  const std::vector<std::string> dates(prices.dates.begin() + 1, prices.dates.end());

  FitConfig cfg;
  if (opt.theta0.empty()) {
    cfg.theta0 = (VectorXd(6) << 0.05 * var, 0.05, 0.9, 0.0, 0.01, 0.01).finished();
  } else {
    if (opt.theta0.size() != 6) throw Error(ErrorCode::InvalidArgument, "--theta0 needs 6 values");
    cfg.theta0 = to_vector(opt.theta0);
  }
  cfg.transform = Transform::GarchStationarity;
  model.validate(cfg.theta0);
  FitResult fit = fit_estimator(Estimator::UdAnalytic, model, data, cfg);
  fit.theta(TeeModel::kSigma0) = std::abs(fit.theta(TeeModel::kSigma0));
  fit.theta(TeeModel::kSigma1) = std::abs(fit.theta(TeeModel::kSigma1));

  const double persistence = fit.theta(TeeModel::kA1) + fit.theta(TeeModel::kB1);
  json warnings = json::array();
  if (persistence >= 0.999) {
    warnings.push_back("NonStationaryFit: a1 + b1 = " + format_double(persistence));
    log << "warning: NonStationaryFit, a1 + b1 = " << short_num(persistence) << "\n";
  }

  json config = {{"command", "tee"}, {"csv", opt.csv}, {"h_min", opt.h_min},
                 {"theta0", vec_json(cfg.theta0)}, {"observations", r.size()},
                 {"status", std::string(to_string(fit.status))}, {"detail", fit.detail},
                 {"loglik", fit.loglik}, {"iterations", fit.iterations},
                 {"warnings", warnings}};

  Table params{{"parameter", "estimate"}, {}};
  const auto names = model.parameter_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    params.rows.push_back({names[i], fit.theta(static_cast<Index>(i))});
  }
  const std::string p1 = write_table(params, config.dump(), opt.out, "tee_fit", opt.format);

  Table path{{"date", "beta1", "ci_low", "ci_high", "efficient_flag", "h"}, {}};
  std::size_t efficient = 0;
  for (const EfficiencyRow& row : efficiency_path(model, fit.theta, data, dates)) {
    path.rows.push_back({row.date, row.beta1, row.ci_low, row.ci_high, row.efficient, row.h});
    efficient += row.efficient ? 1 : 0;
  }
  const std::string p2 = write_table(path, config.dump(), opt.out, "tee_efficiency", opt.format);

  log << "status " << to_string(fit.status) << ", ln L " << short_num(fit.loglik) << "\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    log << "  " << names[i] << " = " << short_num(fit.theta(static_cast<Index>(i))) << "\n";
  }
  log << "efficient steps: " << efficient << " of " << path.rows.size() << "\n";
  log << "wrote " << p1 << " and " << p2 << "\n";
  return fit.status == FitStatus::ObjectiveFailure ? 1 : 0;
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& log) {
  SimulatedData sim;
  Dims dims;
  VectorXd theta;
  if (opt.model == "tee") {
    theta = opt.theta.empty()
                ? (VectorXd(6) << 0.05, 0.1, 0.85, 0.1, 0.01, 0.01).finished()
                : to_vector(opt.theta);
    if (theta.size() != 6) throw Error(ErrorCode::InvalidArgument, "tee needs 6 parameters");
    dims = TeeModel().dims();
    sim = simulate_tee(theta, opt.n, opt.seed);
  } else {
    auto model = load_model(opt.model, opt.delta);
    dims = model->dims();
    if (opt.theta.empty()) {
      theta = opt.model == "example1" ? VectorXd::Constant(1, 3.0) : VectorXd::Zero(dims.p);
    } else {
      theta = to_vector(opt.theta);
    }
    sim = simulate(*model, theta, opt.n, opt.seed);
  }

  ensure_dir(opt.out);
  std::string path;
  if (opt.format == Format::Csv) {
    path = (fs::path(opt.out) / "simulation.csv").string();
    auto f = open_out(path);
    write_simulation_csv(f, sim, dims);
  } else {
    std::ostringstream csv;
    write_simulation_csv(csv, sim, dims);
    std::istringstream lines(csv.str());
    std::string line;
    Table t;
    std::getline(lines, line);
    t.columns = split_csv_line(line);
    while (std::getline(lines, line)) {
      std::vector<Cell> row;
      for (const auto& c : split_csv_line(line)) {
        if (c.empty()) row.push_back(std::string(""));
        else row.push_back(std::stod(c));
      }
      row[0] = static_cast<std::int64_t>(std::get<double>(row[0]));
      t.rows.push_back(std::move(row));
    }
    json config = {{"command", "simulate"}, {"model", opt.model}, {"delta", opt.delta},
                   {"theta", vec_json(theta)}, {"n", opt.n}, {"seed", opt.seed}};
    path = write_table(t, config.dump(), opt.out, "simulation", opt.format);
  }
  log << "wrote " << path << "\n";
  return 0;
}

int cmd_fit(const FitOptions& opt, std::ostream& log) {
  auto model = load_model(opt.model, opt.delta);
  if (opt.model == "tee") {
    throw Error(ErrorCode::InvalidArgument, "use the tee command for GARCH-in-Mean fits");
  }
  const Dims dims = model->dims();
  std::ifstream in(opt.data);
  if (!in) throw Error(ErrorCode::CsvParseError, "cannot open " + opt.data);
  const SimulatedData sim = read_simulation_csv(in, dims);

  FitConfig cfg;
  cfg.theta0 = opt.theta0.empty() ? VectorXd::Ones(dims.p) : to_vector(opt.theta0);
  if (opt.model == "example1") {
    cfg.lower = VectorXd::Constant(1, 1e-3);
    cfg.upper = VectorXd::Constant(1, 1e3);
  }
  if (!opt.lower.empty()) cfg.lower = to_vector(opt.lower);
  if (!opt.upper.empty()) cfg.upper = to_vector(opt.upper);
  const FitResult fit = fit_estimator(opt.estimator, *model, sim.data, cfg);

  Table t{{"parameter", "estimate", "status", "loglik", "iterations"}, {}};
  const auto names = model->parameter_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    t.rows.push_back({names[i], fit.theta(static_cast<Index>(i)),
                      std::string(to_string(fit.status)), fit.loglik,
                      static_cast<std::int64_t>(fit.iterations)});
  }
  json config = {{"command", "fit"}, {"model", opt.model}, {"delta", opt.delta},
                 {"data", opt.data}, {"estimator", std::string(to_string(opt.estimator))},
                 {"theta0", vec_json(cfg.theta0)}, {"detail", fit.detail}};
  const std::string path = write_table(t, config.dump(), opt.out, "fit", opt.format);
  log << to_string(opt.estimator) << ": " << to_string(fit.status);
  for (std::size_t i = 0; i < names.size(); ++i) {
    log << " " << names[i] << "=" << short_num(fit.theta(static_cast<Index>(i)));
  }
  log << "\nwrote " << path << "\n";
  return fit.status == FitStatus::ObjectiveFailure ? 1 : 0;
}

int run(int argc, char** argv, std::ostream& log, std::ostream& err) {
  CLI::App app{"UD-factorized Kalman filtering and maximum likelihood estimation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  const std::map<std::string, Format> formats{{"csv", Format::Csv}, {"json", Format::Json}};
  auto common = [&](CLI::App* sub, std::string& out, std::uint64_t& seed, Format& fmt) {
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--format", fmt, "Output format (csv or json)")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
  };

  Example1Options ex;
  std::vector<std::string> est_names;
  auto* ex_cmd = app.add_subcommand("example1", "Monte Carlo study on the ill-conditioned benchmark");
  ex_cmd->add_option("--delta-list", ex.deltas, "Comma-separated delta values")->delimiter(',');
  ex_cmd->add_option("--runs", ex.runs, "Monte Carlo runs per cell");
  ex_cmd->add_option("--horizon", ex.horizon, "Observations per run");
  ex_cmd->add_option("--theta-true", ex.theta_true, "True parameter");
  ex_cmd->add_option("--theta0", ex.theta0, "Starting value");
  ex_cmd->add_option("--estimators", est_names,
                     "Comma-separated subset of conv-numeric,conv-analytic,ud-numeric,ud-analytic")
      ->delimiter(',');
  ex_cmd->add_option("--threads", ex.threads, "Worker threads (0 = all cores)");
  common(ex_cmd, ex.out, ex.seed, ex.format);

  TeeOptions tee;
  auto* tee_cmd = app.add_subcommand("tee", "Fit the evolving-efficiency model to a price CSV");
  tee_cmd->add_option("--csv", tee.csv, "CSV with date,close columns")->required();
  tee_cmd->add_option("--theta0", tee.theta0, "a0,a1,b1,delta,sigma0,sigma1")->delimiter(',');
  tee_cmd->add_option("--h-min", tee.h_min, "Floor for the conditional variance");
  common(tee_cmd, tee.out, tee.seed, tee.format);

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a series from a model");
  sim_cmd->add_option("--model", sim.model, "example1, tee or a model config file");
  sim_cmd->add_option("--delta", sim.delta, "Benchmark delta");
  sim_cmd->add_option("--theta", sim.theta, "Comma-separated parameters")->delimiter(',');
  sim_cmd->add_option("--n", sim.n, "Number of observations");
  common(sim_cmd, sim.out, sim.seed, sim.format);

  FitOptions fit;
  std::string fit_est = "ud-analytic";
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to a simulated series");
  fit_cmd->add_option("--model", fit.model, "example1 or a model config file");
  fit_cmd->add_option("--delta", fit.delta, "Benchmark delta");
  fit_cmd->add_option("--data", fit.data, "Simulation CSV")->required();
  fit_cmd->add_option("--theta0", fit.theta0, "Starting values")->delimiter(',');
  fit_cmd->add_option("--lower", fit.lower, "Lower bounds")->delimiter(',');
  fit_cmd->add_option("--upper", fit.upper, "Upper bounds")->delimiter(',');
  fit_cmd->add_option("--estimator", fit_est, "Estimator name");
  common(fit_cmd, fit.out, fit.seed, fit.format);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, log, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ex_cmd) {
      for (const auto& name : est_names) {
        const auto e = parse_estimator(name);
        if (!e) throw Error(ErrorCode::InvalidArgument, "unknown estimator " + name);
        ex.estimators.push_back(*e);
      }
      return cmd_example1(ex, log);
    }
    if (*tee_cmd) return cmd_tee(tee, log);
    if (*sim_cmd) return cmd_simulate(sim, log);
    if (*fit_cmd) {
      const auto e = parse_estimator(fit_est);
      if (!e) throw Error(ErrorCode::InvalidArgument, "unknown estimator " + fit_est);
      fit.estimator = *e;
      return cmd_fit(fit, log);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace udkf::cli

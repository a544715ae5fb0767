#include "udkf/series_io.hpp"

#include "udkf/error.hpp"
#include "udkf/filter_ud.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace udkf {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

[[noreturn]] void csv_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::CsvParseError, "line " + std::to_string(line) + ": " + what);
}

std::ifstream open_or_throw(const std::string& path, ErrorCode code) {
  std::ifstream in(path);
  if (!in) throw Error(code, "cannot open " + path);
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<double> PriceSeries::returns() const {
  std::vector<double> r;
  for (std::size_t k = 1; k < close.size(); ++k) {
    r.push_back(100.0 * (std::log(close[k]) - std::log(close[k - 1])));
  }
  return r;
}

PriceSeries read_price_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  int date_col = -1, close_col = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cols = split_csv_line(line);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      std::string c = cols[i];
      std::transform(c.begin(), c.end(), c.begin(), [](unsigned char ch) { return std::tolower(ch); });
      if (c == "date") date_col = static_cast<int>(i);
      if (c == "close") close_col = static_cast<int>(i);
    }
    break;
  }
  if (date_col < 0 || close_col < 0) csv_error(lineno, "header must contain date and close");

  PriceSeries s;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cols = split_csv_line(line);
    const auto need = static_cast<std::size_t>(std::max(date_col, close_col));
    if (cols.size() <= need) csv_error(lineno, "too few columns");
    double v;
    if (!parse_double(cols[close_col], v)) csv_error(lineno, "close is not a number");
    if (!(v > 0.0) || !std::isfinite(v)) csv_error(lineno, "close must be positive");
    s.dates.push_back(cols[date_col]);
    s.close.push_back(v);
  }
  return s;
}

PriceSeries read_price_csv_file(const std::string& path) {
  auto in = open_or_throw(path, ErrorCode::CsvParseError);
  return read_price_csv(in);
}

void write_simulation_csv(std::ostream& out, const SimulatedData& sim, const Dims& dims) {
  out << "k";
  for (Index i = 1; i <= dims.m; ++i) out << ",y" << i;
  for (Index i = 1; i <= dims.d; ++i) out << ",x" << i;
  for (Index i = 1; i <= dims.n; ++i) out << ",alpha" << i;
  out << '\n';
  const std::size_t n = sim.data.size();
  if (n == 0) return;

  auto put = [&](const VectorXd& v, Index len) {
    for (Index i = 0; i < len; ++i) out << ',' << (v.size() ? format_double(v(i)) : "0");
  };
  out << 0;
  put(sim.data.y0, dims.m);
  put(sim.data.x0, dims.d);
  for (Index i = 0; i < dims.n; ++i) out << ',';
  out << '\n';
  for (std::size_t k = 1; k <= n; ++k) {
    out << k;
    put(sim.data.y[k - 1], dims.m);
    put(sim.data.x.empty() ? VectorXd() : sim.data.x[k - 1], dims.d);
    put(k - 1 < sim.alpha.size() ? sim.alpha[k - 1] : VectorXd(), dims.n);
    out << '\n';
  }
}

SimulatedData read_simulation_csv(std::istream& in, const Dims& dims) {
  std::string line;
  std::size_t lineno = 0;
  const auto width = static_cast<std::size_t>(1 + dims.m + dims.d + dims.n);
  SimulatedData sim;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cols = split_csv_line(line);
    if (cols.size() != width) csv_error(lineno, "expected " + std::to_string(width) + " columns");
    if (header) {
      header = false;
      continue;
    }
    auto read = [&](std::size_t from, Index len, VectorXd& v) {
      v.resize(len);
      for (Index i = 0; i < len; ++i) {
        if (!parse_double(cols[from + static_cast<std::size_t>(i)], v(i))) {
          csv_error(lineno, "column " + std::to_string(from + i + 1) + " is not a number");
        }
      }
    };
    VectorXd y, x, a;
    read(1, dims.m, y);
    read(1 + dims.m, dims.d, x);
    if (cols[0] == "0") {
      sim.data.y0 = y;
      sim.data.x0 = x;
      continue;
    }
    read(1 + dims.m + dims.d, dims.n, a);
    sim.data.y.push_back(y);
    sim.data.x.push_back(x);
    sim.alpha.push_back(a);
  }
  if (header) csv_error(lineno, "missing header");
  return sim;
}

std::vector<EfficiencyRow> efficiency_path(const TeeModel& model, const VectorXd& theta,
                                           const Dataset& data,
                                           const std::vector<std::string>& dates) {
  if (!dates.empty() && dates.size() != data.size()) {
    throw Error(ErrorCode::InvalidArgument, "need one date per observation");
  }
  const UdRunResult run = ud_run(model, theta, data, true);
  std::vector<EfficiencyRow> rows;
  rows.reserve(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    const MatrixXd p = reconstruct(run.filtered[k].p_ud);
    const double b = run.filtered[k].alpha(2);
    const double half = 1.96 * std::sqrt(std::max(0.0, p(2, 2)));
    EfficiencyRow r;
    r.date = dates.empty() ? std::to_string(k + 1) : dates[k];
    r.beta1 = b;
    r.ci_low = b - half;
    r.ci_high = b + half;
    r.efficient = r.ci_low <= 0.0 && 0.0 <= r.ci_high;
    r.h = std::max(run.predicted[k].alpha(0), model.h_min());
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

MatrixXd parse_matrix(const std::string& text, std::size_t lineno) {
  std::vector<std::vector<double>> rows;
  std::stringstream all(text);
  std::string row;
  while (std::getline(all, row, ';')) {
    std::istringstream rs(row);
    std::vector<double> vals;
    std::string tok;
    while (rs >> tok) {
      double v;
      if (!parse_double(tok, v)) csv_error(lineno, "bad number '" + tok + "'");
      vals.push_back(v);
    }
    if (!vals.empty()) rows.push_back(std::move(vals));
  }
  if (rows.empty()) return MatrixXd();
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) csv_error(lineno, "ragged matrix");
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return m;
}

}  // namespace

PolynomialModel::Spec read_model_config(std::istream& in) {
  PolynomialModel::Spec spec;
  std::map<std::string, PolyMatrix*> slots{
      {"T", &spec.t},     {"Z", &spec.z}, {"B", &spec.b},           {"beta", &spec.beta},
      {"Q", &spec.q},     {"H", &spec.h}, {"S", &spec.s},           {"alpha0", &spec.alpha0},
      {"Pi0", &spec.pi0}};
  struct Entry {
    PolyMatrix* slot;
    int index;  // 0 base, >0 parameter
    bool quadratic;
    MatrixXd value;
  };
  std::vector<Entry> entries;
  bool have_dims = false;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) csv_error(lineno, "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));

    if (key == "kind") {
      if (value == "lti") spec.kind = ModelKind::LtiMimo;
      else if (value == "pairwise") spec.kind = ModelKind::Pairwise;
      else csv_error(lineno, "kind must be lti or pairwise");
    } else if (key == "dims") {
      std::istringstream ds(value);
      if (!(ds >> spec.dims.n >> spec.dims.m >> spec.dims.d >> spec.dims.p)) {
        csv_error(lineno, "dims needs n m d p");
      }
      have_dims = true;
    } else if (key == "names") {
      std::istringstream ns(value);
      std::string nm;
      while (ns >> nm) spec.names.push_back(nm);
    } else if (key == "presample") {
      const MatrixXd m = parse_matrix(value, lineno);
      spec.presample = m.size() ? VectorXd(m.reshaped()) : VectorXd();
    } else {
      std::string name = key;
      int index = 0;
      bool quadratic = false;
      if (const auto at = key.find('@'); at != std::string::npos) {
        name = key.substr(0, at);
        std::string rest = key.substr(at + 1);
        if (rest.size() > 2 && rest.substr(rest.size() - 2) == "^2") {
          quadratic = true;
          rest.resize(rest.size() - 2);
        }
        auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), index);
        if (ec != std::errc() || ptr != rest.data() + rest.size() || index < 1) {
          csv_error(lineno, "bad parameter index in '" + key + "'");
        }
      }
      const auto it = slots.find(name);
      if (it == slots.end()) csv_error(lineno, "unknown key '" + key + "'");
      MatrixXd m = parse_matrix(value, lineno);
      if (name == "alpha0" && m.rows() == 1) m.transposeInPlace();
      entries.push_back({it->second, index, quadratic, std::move(m)});
    }
  }
  if (!have_dims) throw Error(ErrorCode::InvalidArgument, "model config needs dims");

  const Dims& d = spec.dims;
  auto shape = [&](PolyMatrix* slot) -> std::pair<Index, Index> {
    if (slot == &spec.t || slot == &spec.q || slot == &spec.pi0) return {d.n, d.n};
    if (slot == &spec.z) return {d.m, d.n};
    if (slot == &spec.b) return {d.n, d.d};
    if (slot == &spec.beta) return {d.m, d.d};
    if (slot == &spec.h) return {d.m, d.m};
    if (slot == &spec.s) return {d.n, d.m};
    return {d.n, 1};
  };
  for (auto& [name, slot] : slots) {
    const auto [r, c] = shape(slot);
    slot->base = MatrixXd::Zero(r, c);
  }
  for (auto& e : entries) {
    const auto [r, c] = shape(e.slot);
    if (e.value.rows() != r || e.value.cols() != c) {
      throw Error(ErrorCode::InvalidArgument, "model config: matrix has wrong size");
    }
    if (e.index == 0) {
      e.slot->base = e.value;
      continue;
    }
    if (e.index > d.p) throw Error(ErrorCode::InvalidArgument, "model config: parameter index out of range");
    auto& list = e.quadratic ? e.slot->quadratic : e.slot->linear;
    if (static_cast<int>(list.size()) < e.index) list.resize(e.index);
    list[e.index - 1] = e.value;
  }
  return spec;
}

PolynomialModel::Spec read_model_config_file(const std::string& path) {
  auto in = open_or_throw(path, ErrorCode::InvalidArgument);
  return read_model_config(in);
}

}  // namespace udkf

#include "evqr/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <variant>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "evqr/conditional.hpp"
#include "evqr/errors.hpp"
#include "evqr/gp_benchmark.hpp"
#include "evqr/kernel.hpp"
#include "evqr/parallel.hpp"
#include "evqr/pickands.hpp"
#include "evqr/report_io.hpp"
#include "evqr/selection.hpp"
#include "evqr/simulation.hpp"

namespace evqr::cli {

namespace {

// Failures are sorted into exit codes by exception type.
struct ConfigError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------- options

struct Options {
  std::string config;
  std::string data;
  std::string y_column = "y";
  std::string x_grid;
  std::string beta = "0.01";
  std::optional<double> alpha;
  int J = 3;
  double r = 1.0 / 3.0;
  std::string weights = "rp1";
  std::optional<double> h;
  std::optional<int> k;
  std::string select = "separate";
  std::string target = "rp-quantile";
  std::string h_values;
  std::size_t h_grid_size = 50;
  std::string trace;
  std::string survival_out;
  std::string scenario;
  std::size_t n = 200;
  std::size_t reps = 400;
  std::uint64_t seed = 1;
  std::string estimators = "rq,rp1,rp2,gp";
  std::string j_list;
  std::string alpha_grid;
  std::string selection = "oracle";
  std::size_t eval_points = 100;
  std::string out = "-";
  std::string format = "csv";
  bool paper_table = false;
  unsigned threads = 1;
};

// Reads "key = value" lines ('#' comments) and fills options not given on the command line.
void apply_config_file(CLI::App& sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{}:{}: expected key=value", path, line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "config") throw ConfigError(fmt::format("{}:{}: nested config files are not supported", path, line_no));
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr) {
      throw ConfigError(fmt::format("{}:{}: unknown key '{}' for command '{}'", path, line_no, key,
                                    sub.get_name()));
    }
    if (opt->count() > 0) continue;  // command line wins
    try {
      if (opt->get_type_size() == 0) {
        if (value == "true" || value == "1") opt->add_result("true");
        else if (value == "false" || value == "0") continue;
        else throw ConfigError(fmt::format("{}:{}: '{}' expects true or false", path, line_no, key));
      } else {
        opt->add_result(value);
      }
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError(fmt::format("{}:{}: invalid value for '{}': {}", path, line_no, key, e.what()));
    }
  }
}

// ---------------------------------------------------------------- tables

using Cell = std::variant<std::monostate, double, long long, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string cell_text(const Cell& c) {
  if (std::holds_alternative<double>(c)) {
    const double v = std::get<double>(c);
    return std::isfinite(v) ? format_number(v) : std::string();
  }
  if (std::holds_alternative<long long>(c)) return std::to_string(std::get<long long>(c));
  if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
  return {};
}

nlohmann::ordered_json cell_json(const Cell& c) {
  if (std::holds_alternative<double>(c)) {
    const double v = std::get<double>(c);
    if (!std::isfinite(v)) return nullptr;
    return v;
  }
  if (std::holds_alternative<long long>(c)) return std::get<long long>(c);
  if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
  return nullptr;
}

void write_table(std::ostream& out, const Table& t, const std::string& format,
                 const ConfigEcho& echo) {
  if (format == "json") {
    nlohmann::ordered_json doc;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [key, value] : echo) cfg[key] = value;
    doc["config"] = cfg;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
      nlohmann::ordered_json obj = nlohmann::ordered_json::object();
      for (std::size_t c = 0; c < t.columns.size(); ++c) obj[t.columns[c]] = cell_json(row[c]);
      rows.push_back(std::move(obj));
    }
    doc["rows"] = std::move(rows);
    out << doc.dump(2) << '\n';
    return;
  }
  write_config_echo(out, echo);
  for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << cell_text(row[c]);
    out << '\n';
  }
}

// Writes to a file, or stdout for "-". The file is only replaced once the content is complete.
void emit(const std::string& path, const std::function<void(std::ostream&)>& writer) {
  std::ostringstream buffer;
  writer(buffer);
  if (path.empty() || path == "-") {
    std::cout << buffer.str();
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(fmt::format("cannot open output file '{}'", path));
  out << buffer.str();
  if (!out) throw Error(fmt::format("failed writing '{}'", path));
}

// ---------------------------------------------------------------- shared parsing

std::vector<double> parse_levels(const std::string& key, const std::string& text) {
  std::vector<double> values;
  try {
    values = parse_number_list(text);
  } catch (const InvalidArgument& e) {
    throw ConfigError(fmt::format("--{}: {}", key, e.what()));
  }
  for (double v : values) {
    if (!(v > 0.0 && v < 1.0)) throw ConfigError(fmt::format("--{}: level {} outside (0, 1)", key, v));
  }
  return values;
}

Sample load_data(const Options& o) {
  if (o.data.empty()) throw ConfigError("--data is required");
  try {
    return read_sample_csv_file(o.data, o.y_column);
  } catch (const InvalidArgument& e) {
    throw DataError(fmt::format("{}: {}", o.data, e.what()));
  }
}

// Query points, each of the sample's dimension. Univariate grids are a comma list or
// "lo:hi:count"; multivariate points are separated by ';' with comma-separated coordinates.
std::vector<std::vector<double>> parse_x_grid(const std::string& text, const Sample& s) {
  const int p = s.dim();
  std::vector<std::vector<double>> points;
  if (text.empty()) {
    if (p != 1) throw ConfigError("--x-grid is required for multivariate covariates");
    double lo = s.xs().front(), hi = lo;
    for (double v : s.xs()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    for (double x : evaluation_grid(20)) points.push_back({lo + x * (hi - lo)});
    return points;
  }
  if (p == 1 && text.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::string part;
    std::istringstream ss(text);
    while (std::getline(ss, part, ':')) {
      try {
        parts.push_back(parse_number_list(part).at(0));
      } catch (const std::exception&) {
        throw ConfigError(fmt::format("--x-grid: cannot parse '{}'", text));
      }
    }
    if (parts.size() != 3 || parts[2] < 1 || parts[2] != std::floor(parts[2]) || parts[1] < parts[0]) {
      throw ConfigError(fmt::format("--x-grid: expected lo:hi:count, got '{}'", text));
    }
    const auto count = static_cast<std::size_t>(parts[2]);
    for (std::size_t i = 0; i < count; ++i) {
      const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
      points.push_back({parts[0] + t * (parts[1] - parts[0])});
    }
    return points;
  }
  try {
    if (p == 1) {
      for (double v : parse_number_list(text)) points.push_back({v});
      return points;
    }
    std::string chunk;
    std::istringstream ss(text);
    while (std::getline(ss, chunk, ';')) {
      auto point = parse_number_list(chunk);
      if (static_cast<int>(point.size()) != p) {
        throw ConfigError(fmt::format("--x-grid: point '{}' has {} coordinates, expected {}", chunk,
                                      point.size(), p));
      }
      points.push_back(std::move(point));
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(fmt::format("--x-grid: {}", e.what()));
  }
  if (points.empty()) throw ConfigError("--x-grid is empty");
  return points;
}

void append_x(std::vector<Cell>& row, const std::vector<double>& x) {
  for (double v : x) row.emplace_back(v);
}

std::vector<std::string> x_columns(int p) {
  if (p == 1) return {"x"};
  std::vector<std::string> cols;
  for (int i = 1; i <= p; ++i) cols.push_back(fmt::format("x{}", i));
  return cols;
}

void check_h(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError(fmt::format("--h must be positive, got {}", h));
}

// Bandwidth: --h, or the cross-validated choice over the design-based grid.
double resolve_h(const Options& o, const Sample& s, const KernelSpec& kern) {
  if (o.h) {
    check_h(*o.h);
    return *o.h;
  }
  if (s.dim() != 1) throw ConfigError("--h is required for multivariate covariates");
  try {
    const auto grid = bandwidth_grid(s, o.h_grid_size);
    return cv_select(s, kern, grid, o.threads).h;
  } catch (const InvalidArgument& e) {
    throw DataError(e.what());
  } catch (const SelectionError& e) {
    throw DataError(e.what());
  }
}

std::vector<double> resolve_weights(const Options& o) {
  if (o.weights == "rp1") return rp1_weights(o.J);
  if (o.weights == "rp2") return rp2_weights(o.J);
  throw ConfigError(fmt::format("--weights must be rp1 or rp2, got '{}'", o.weights));
}

void check_rp(const Options& o) {
  if (o.J < 3) throw ConfigError(fmt::format("--J must be >= 3, got {}", o.J));
  if (!(o.r > 0.0 && o.r < 1.0)) throw ConfigError(fmt::format("--r must lie in (0, 1), got {}", o.r));
}

void check_format(const Options& o) {
  if (o.format != "csv" && o.format != "json") {
    throw ConfigError(fmt::format("--format must be csv or json, got '{}'", o.format));
  }
}

ConfigEcho common_echo(const std::string& command, const Options& o) {
  ConfigEcho echo{{"command", command}};
  if (!o.data.empty()) echo.emplace_back("data", o.data);
  return echo;
}

std::string join_status(const std::vector<std::string>& flags) {
  if (flags.empty()) return "ok";
  std::string out;
  for (const auto& f : flags) out += (out.empty() ? "" : ";") + f;
  return out;
}

// ---------------------------------------------------------------- fit

int cmd_fit(const Options& o) {
  check_format(o);
  const auto betas = parse_levels("beta", o.beta);
  if (o.h) check_h(*o.h);
  const Sample s = load_data(o);
  const KernelSpec kern = radial_triweight(s.dim());
  const auto points = parse_x_grid(o.x_grid, s);
  const double h = resolve_h(o, s, kern);

  Table table;
  table.columns = x_columns(s.dim());
  for (const char* c : {"beta", "h", "n_star", "q_hat", "status"}) table.columns.emplace_back(c);
  Table survival;
  survival.columns = x_columns(s.dim());
  for (const char* c : {"y", "survival"}) survival.columns.emplace_back(c);

  std::size_t flagged = 0;
  for (const auto& x : points) {
    const LocalWindow window = local_window(s, kern, h, x);
    const bool empty = !(window.total_weight > 0.0);
    std::optional<WeightedStepSurvival> step;
    if (!empty) step.emplace(s, window);
    for (double beta : betas) {
      std::vector<Cell> row;
      append_x(row, x);
      row.emplace_back(beta);
      row.emplace_back(h);
      row.emplace_back(static_cast<long long>(window.n_star));
      if (empty) {
        row.emplace_back(std::monostate{});
        row.emplace_back(std::string("empty_window"));
        ++flagged;
      } else {
        row.emplace_back(step->quantile(beta));
        row.emplace_back(std::string("ok"));
      }
      table.rows.push_back(std::move(row));
    }
    if (step) {
      for (double y : step->jumps()) {
        std::vector<Cell> row;
        append_x(row, x);
        row.emplace_back(y);
        row.emplace_back(step->survival(y));
        survival.rows.push_back(std::move(row));
      }
    }
  }

  ConfigEcho echo = common_echo("fit", o);
  echo.emplace_back("beta", o.beta);
  echo.emplace_back("h", format_number(h));
  echo.emplace_back("x_grid", o.x_grid.empty() ? "default" : o.x_grid);
  emit(o.out, [&](std::ostream& out) { write_table(out, table, o.format, echo); });
  if (!o.survival_out.empty()) {
    emit(o.survival_out, [&](std::ostream& out) { write_table(out, survival, o.format, echo); });
  }
  std::cerr << fmt::format("fit: {} rows, {} flagged\n", table.rows.size(), flagged);
  return kOk;
}

// ---------------------------------------------------------------- extreme

int cmd_extreme(const Options& o) {
  check_format(o);
  check_rp(o);
  const auto betas = parse_levels("beta", o.beta);
  const auto weights = resolve_weights(o);
  if (o.alpha && !(*o.alpha > 0.0 && *o.alpha < 1.0)) {
    throw ConfigError(fmt::format("--alpha must lie in (0, 1), got {}", *o.alpha));
  }
  if (o.k && *o.k < 1) throw ConfigError(fmt::format("--k must be >= 1, got {}", *o.k));
  if (!o.alpha && !o.k) throw ConfigError("one of --alpha or --k is required");
  if (o.alpha) {
    for (double b : betas) {
      if (b > *o.alpha) {
        throw ConfigError(fmt::format("--beta {} exceeds --alpha {}; extrapolation needs beta <= alpha",
                                      b, *o.alpha));
      }
    }
  }
  if (o.h) check_h(*o.h);
  const Sample s = load_data(o);
  const KernelSpec kern = radial_triweight(s.dim());
  const auto points = parse_x_grid(o.x_grid, s);
  const double h = resolve_h(o, s, kern);

  Table table;
  table.columns = x_columns(s.dim());
  for (const char* c : {"beta", "alpha", "h", "n_star", "k", "rq", "rq_anchor", "rp", "gamma_rp",
                        "a_rp", "gp", "gamma_gp", "status"}) {
    table.columns.emplace_back(c);
  }
  std::size_t flagged = 0;
  for (const auto& x : points) {
    const LocalWindow window = local_window(s, kern, h, x);
    const bool empty = !(window.total_weight > 0.0);
    const double n_star = static_cast<double>(window.n_star);
    const double alpha = o.alpha ? *o.alpha : (n_star > 0 ? *o.k / n_star : NAN);
    const long long k = o.k ? *o.k : static_cast<long long>(std::floor(alpha * n_star));
    std::optional<WeightedStepSurvival> step;
    if (!empty) step.emplace(s, window);
    std::optional<RPEstimate> rp;
    if (step && alpha > 0.0 && alpha < 1.0) {
      RPConfig cfg{alpha, o.J, o.r, weights};
      rp = rp_gamma(*step, cfg);
    }
    std::optional<ExceedanceSet> exceed;
    std::optional<GPFit> gp;
    if (k >= 1 && static_cast<std::size_t>(k) < window.n_star) {
      exceed = build_exceedances(s, kern, h, x, static_cast<std::size_t>(k));
      if (exceed->k_x >= 2) gp = gp_fit(*exceed);
    }
    for (double beta : betas) {
      std::vector<std::string> flags;
      std::vector<Cell> row;
      append_x(row, x);
      row.emplace_back(beta);
      row.emplace_back(alpha);
      row.emplace_back(h);
      row.emplace_back(static_cast<long long>(window.n_star));
      row.emplace_back(k);
      if (empty) flags.emplace_back("empty_window");
      row.emplace_back(step ? Cell(step->quantile(beta)) : Cell());
      row.emplace_back(rp ? Cell(rp->anchor_quantile) : Cell());
      if (rp && !rp->degenerate && beta <= alpha) {
        row.emplace_back(extrapolate(*rp, beta));
        row.emplace_back(rp->gamma_hat);
        row.emplace_back(rp->a_hat);
      } else {
        if (!empty) flags.emplace_back(rp && rp->degenerate ? "rp_degenerate" : "rp_unavailable");
        for (int i = 0; i < 3; ++i) row.emplace_back(std::monostate{});
      }
      if (gp) {
        row.emplace_back(gp_quantile(*gp, *exceed, beta));
        row.emplace_back(gp->gamma_hat);
      } else {
        if (!empty) flags.emplace_back("gp_insufficient");
        row.emplace_back(std::monostate{});
        row.emplace_back(std::monostate{});
      }
      if (!flags.empty()) ++flagged;
      row.emplace_back(join_status(flags));
      table.rows.push_back(std::move(row));
    }
  }
  ConfigEcho echo = common_echo("extreme", o);
  echo.emplace_back("beta", o.beta);
  echo.emplace_back("alpha", o.alpha ? format_number(*o.alpha) : "k/n_star");
  if (o.k) echo.emplace_back("k", std::to_string(*o.k));
  echo.emplace_back("J", std::to_string(o.J));
  echo.emplace_back("r", format_number(o.r));
  echo.emplace_back("weights", o.weights);
  echo.emplace_back("h", format_number(h));
  emit(o.out, [&](std::ostream& out) { write_table(out, table, o.format, echo); });
  std::cerr << fmt::format("extreme: {} rows, {} flagged\n", table.rows.size(), flagged);
  return kOk;
}

// ---------------------------------------------------------------- select

int cmd_select(const Options& o) {
  check_format(o);
  check_rp(o);
  const auto target = parse_selection_target(o.target);
  if (!target) {
    throw ConfigError(fmt::format(
        "--target must be one of rp-quantile, rp-gamma, gp-quantile, gp-gamma; got '{}'", o.target));
  }
  if (o.select != "cv" && o.select != "separate" && o.select != "simultaneous") {
    throw ConfigError(fmt::format("--select must be cv, separate or simultaneous, got '{}'", o.select));
  }
  const auto betas = parse_levels("beta", o.beta);
  if (betas.size() != 1) throw ConfigError("select takes a single --beta");
  const double beta = betas[0];
  const auto weights = resolve_weights(o);
  if (o.h) check_h(*o.h);
  std::vector<double> h_given;
  if (!o.h_values.empty()) {
    try {
      h_given = parse_number_list(o.h_values);
    } catch (const InvalidArgument& e) {
      throw ConfigError(fmt::format("--h-values: {}", e.what()));
    }
    for (double h : h_given) check_h(h);
    if (o.select == "simultaneous" && h_given.size() < 2) {
      throw ConfigError("simultaneous selection needs at least two --h-values");
    }
  }
  const Sample s = load_data(o);
  if (s.dim() != 1) throw DataError("select supports a single covariate column");
  const KernelSpec kern = triweight();
  const auto points = parse_x_grid(o.x_grid, s);
  std::vector<double> xs;
  for (const auto& p : points) xs.push_back(p[0]);

  std::vector<double> grid = h_given;
  if (grid.empty()) {
    try {
      grid = bandwidth_grid(s, o.h_grid_size);
    } catch (const InvalidArgument& e) {
      throw DataError(e.what());
    }
  }
  double h_cv = 0.0;
  if (o.h) {
    h_cv = *o.h;
  } else if (grid.size() == 1) {
    h_cv = grid[0];
  } else {
    try {
      h_cv = cv_select(s, kern, grid, o.threads).h;
    } catch (const SelectionError& e) {
      throw DataError(e.what());
    }
  }

  Table table;
  table.columns = {"x", "h", "k", "estimate", "score", "status"};
  Table trace;
  trace.columns = {"x", "h", "n_star", "usable", "k", "score", "estimate", "failure"};
  std::vector<std::vector<Cell>> rows(xs.size());
  std::vector<std::vector<std::vector<Cell>>> traces(xs.size());

  parallel_for(xs.size(), o.threads, [&](std::size_t i) {
    const double x = xs[i];
    auto& row = rows[i];
    row.emplace_back(x);
    if (o.select == "cv") {
      row.emplace_back(h_cv);
      row.emplace_back(std::monostate{});
      row.emplace_back(std::monostate{});
      row.emplace_back(std::monostate{});
      row.emplace_back(std::string("ok"));
      return;
    }
    if (o.select == "separate") {
      const double h = h_cv;
      const EstimateSurface surface =
          target_surface(*target, s, kern, x, std::span<const double>(&h, 1), o.J, o.r, weights, beta);
      const auto& r = surface.rows[0];
      row.emplace_back(h);
      try {
        const KSelection sel = select_k_separate(r.estimates, 1, k_window_for(r.n_star));
        row.emplace_back(static_cast<long long>(sel.k));
        row.emplace_back(sel.estimate);
        row.emplace_back(sel.score);
        row.emplace_back(std::string("ok"));
      } catch (const SelectionError&) {
        for (int c = 0; c < 3; ++c) row.emplace_back(std::monostate{});
        row.emplace_back(std::string("selection_failed"));
      }
      return;
    }
    const EstimateSurface surface =
        target_surface(*target, s, kern, x, grid, o.J, o.r, weights, beta);
    std::vector<HTrace> steps;
    try {
      const SelectionResult sel = select_hk_simultaneous(surface, static_cast<int>(std::min<std::size_t>(10, grid.size())));
      row.emplace_back(sel.h_selected);
      row.emplace_back(static_cast<long long>(sel.k_selected));
      row.emplace_back(sel.estimate);
      row.emplace_back(sel.stability_score);
      row.emplace_back(std::string("ok"));
      steps = sel.trace;
    } catch (const SelectionError&) {
      for (int c = 0; c < 4; ++c) row.emplace_back(std::monostate{});
      row.emplace_back(std::string("selection_failed"));
    }
    for (const auto& t : steps) {
      traces[i].push_back({x, t.h, static_cast<long long>(t.n_star), static_cast<long long>(t.usable),
                           t.usable ? Cell(static_cast<long long>(t.k)) : Cell(),
                           t.usable ? Cell(t.score) : Cell(), t.usable ? Cell(t.estimate) : Cell(),
                           t.failure});
    }
  });

  std::size_t failed = 0;
  for (auto& row : rows) {
    if (std::get<std::string>(row.back()) != "ok") ++failed;
    table.rows.push_back(std::move(row));
  }
  for (auto& t : traces) {
    for (auto& r : t) trace.rows.push_back(std::move(r));
  }
  ConfigEcho echo = common_echo("select", o);
  echo.emplace_back("select", o.select);
  echo.emplace_back("target", o.target);
  echo.emplace_back("beta", format_number(beta));
  echo.emplace_back("J", std::to_string(o.J));
  echo.emplace_back("r", format_number(o.r));
  echo.emplace_back("weights", o.weights);
  echo.emplace_back("h_cv", format_number(h_cv));
  echo.emplace_back("h_grid", std::to_string(grid.size()));
  emit(o.out, [&](std::ostream& out) { write_table(out, table, o.format, echo); });
  if (!o.trace.empty()) {
    emit(o.trace, [&](std::ostream& out) { write_table(out, trace, o.format, echo); });
  }
  std::cerr << fmt::format("select: {} points, {} failed\n", xs.size(), failed);
  if (!xs.empty() && failed == xs.size()) {
    std::cerr << "error: selection failed at every grid point\n";
    return kDataError;
  }
  return kOk;
}

// ---------------------------------------------------------------- simulate

std::vector<int> parse_j_list(const Options& o) {
  if (o.j_list.empty()) return {o.J};
  std::vector<int> out;
  try {
    for (double v : parse_number_list(o.j_list)) {
      if (v != std::floor(v) || v < 3) throw ConfigError(fmt::format("--J-list: invalid J {}", v));
      out.push_back(static_cast<int>(v));
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(fmt::format("--J-list: {}", e.what()));
  }
  return out;
}

std::vector<Estimator> parse_estimators(const std::string& text) {
  std::vector<Estimator> out;
  std::string name;
  std::istringstream ss(text);
  while (std::getline(ss, name, ',')) {
    const auto e = parse_estimator(name);
    if (!e) {
      throw ConfigError(fmt::format(
          "--estimator: unknown '{}' (valid: rq, rp1, rp2, gp, gamma-rp1, gamma-rp2, gamma-gp, "
          "truth, truth-gamma)",
          name));
    }
    out.push_back(*e);
  }
  if (out.empty()) throw ConfigError("--estimator is empty");
  return out;
}

bool uses_j(Estimator e) {
  return e == Estimator::RP1 || e == Estimator::RP2 || e == Estimator::GammaRP1 ||
         e == Estimator::GammaRP2;
}

int cmd_simulate(const Options& o) {
  check_format(o);
  if (o.scenario.empty()) throw ConfigError("--scenario is required (valid: gaussian, student, beta)");
  const auto model = parse_error_model(o.scenario);
  if (!model) {
    throw ConfigError(
        fmt::format("unknown scenario '{}' (valid: gaussian, student, beta)", o.scenario));
  }
  const auto selection = parse_parameter_selection(o.selection);
  if (!selection) {
    throw ConfigError(fmt::format(
        "--selection must be oracle, oracle-avg or data-driven, got '{}'", o.selection));
  }
  const auto estimators = parse_estimators(o.estimators);
  const auto js = parse_j_list(o);
  const auto beta = parse_levels("beta", o.beta);
  if (beta.size() != 1) throw ConfigError("simulate takes a single --beta");

  McConfig base;
  base.scenario = Scenario{*model, o.n};
  base.beta = beta[0];
  base.r = o.r;
  if (!o.alpha_grid.empty()) base.alpha_grid = parse_levels("alpha-grid", o.alpha_grid);
  base.h_grid_size = o.h_grid_size;
  base.eval_points = o.eval_points;
  base.reps = o.reps;
  base.seed = o.seed;
  base.selection = *selection;
  base.threads = o.threads;
  base.keep_per_point = false;
  for (int J : js) {
    McConfig probe = base;
    probe.J = J;
    try {
      probe.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }

  const KernelSpec kern = triweight();
  std::vector<MetricReport> reports;
  std::map<Estimator, MetricReport> j_free;
  for (int J : js) {
    for (Estimator e : estimators) {
      if (!uses_j(e)) {
        auto it = j_free.find(e);
        if (it == j_free.end()) {
          McConfig cfg = base;
          cfg.J = js.front();
          cfg.estimator = e;
          it = j_free.emplace(e, run_mc(cfg, kern)).first;
        }
        MetricReport m = it->second;
        m.J = J;
        reports.push_back(std::move(m));
        continue;
      }
      McConfig cfg = base;
      cfg.J = J;
      cfg.estimator = e;
      reports.push_back(run_mc(cfg, kern));
    }
  }

  ConfigEcho echo{{"command", "simulate"},
                  {"scenario", o.scenario},
                  {"n", std::to_string(o.n)},
                  {"reps", std::to_string(o.reps)},
                  {"seed", std::to_string(o.seed)},
                  {"beta", format_number(base.beta)},
                  {"J", o.j_list.empty() ? std::to_string(o.J) : o.j_list},
                  {"r", format_number(o.r)},
                  {"estimator", o.estimators},
                  {"selection", o.selection},
                  {"h_grid_size", std::to_string(o.h_grid_size)},
                  {"eval_points", std::to_string(o.eval_points)}};
  std::string alphas;
  for (double a : base.alpha_grid) alphas += (alphas.empty() ? "" : ",") + format_number(a);
  echo.emplace_back("alpha_grid", alphas);

  if (o.paper_table) {
    Table table;
    table.columns = {"J"};
    for (Estimator e : estimators) {
      table.columns.push_back(to_string(e) + "_mse");
      table.columns.push_back(to_string(e) + "_bias");
    }
    std::size_t idx = 0;
    for (int J : js) {
      std::vector<Cell> row{static_cast<long long>(J)};
      for (std::size_t i = 0; i < estimators.size(); ++i, ++idx) {
        row.emplace_back(reports[idx].mse);
        row.emplace_back(reports[idx].bias);
      }
      table.rows.push_back(std::move(row));
    }
    emit(o.out, [&](std::ostream& out) { write_table(out, table, o.format, echo); });
  } else if (o.format == "json") {
    emit(o.out, [&](std::ostream& out) { write_metrics_json(out, reports, echo); });
  } else {
    emit(o.out, [&](std::ostream& out) { write_metrics_csv(out, reports, echo); });
  }
  std::size_t failed = 0;
  for (const auto& m : reports) failed += m.failed_reps;
  std::cerr << fmt::format("simulate: {} metric rows, {} failed replications\n", reports.size(),
                           failed);
  return kOk;
}

// ---------------------------------------------------------------- wiring

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "key=value file; command-line flags take precedence");
  sub->add_option("--out", o.out, "output path, '-' for stdout")->capture_default_str();
  sub->add_option("--format", o.format, "csv or json")->capture_default_str();
  sub->add_option("--threads", o.threads, "worker threads (0 = all cores)")->capture_default_str();
  sub->add_option("--beta", o.beta, "extreme level(s), comma-separated")->capture_default_str();
}

void add_data(CLI::App* sub, Options& o) {
  sub->add_option("--data", o.data, "CSV with covariate columns and a response column");
  sub->add_option("--y-column", o.y_column, "name of the response column")->capture_default_str();
  sub->add_option("--x-grid", o.x_grid, "query points: list, lo:hi:count, or ';'-separated tuples");
  sub->add_option("--h", o.h, "bandwidth (default: cross-validated)");
  sub->add_option("--h-grid-size", o.h_grid_size, "bandwidth grid size")->capture_default_str();
}

void add_rp(CLI::App* sub, Options& o) {
  sub->add_option("--J", o.J, "number of quantiles")->capture_default_str();
  sub->add_option("--r", o.r, "level ratio in (0, 1)")->capture_default_str();
  sub->add_option("--weights", o.weights, "rp1 or rp2")->capture_default_str();
}

}  // namespace

int run(int argc, char** argv) {
  Options o;
  CLI::App app{"Kernel-smoothed extreme conditional quantile estimation"};
  app.set_help_flag("--help", "print this help message and exit");
  app.require_subcommand(1);

  auto* fit = app.add_subcommand("fit", "conditional quantiles over an x grid");
  add_common(fit, o);
  add_data(fit, o);
  fit->add_option("--survival-out", o.survival_out, "also write survival curves at each x");

  auto* extreme = app.add_subcommand("extreme", "RQ, refined Pickands and GP estimates side by side");
  add_common(extreme, o);
  add_data(extreme, o);
  add_rp(extreme, o);
  extreme->add_option("--alpha", o.alpha, "anchor order of the refined Pickands estimator");
  extreme->add_option("--k", o.k, "exceedance count of the GP benchmark");

  auto* select = app.add_subcommand("select", "bandwidth and k selection per x");
  add_common(select, o);
  add_data(select, o);
  add_rp(select, o);
  select->add_option("--select", o.select, "cv, separate or simultaneous")->capture_default_str();
  select->add_option("--target", o.target, "rp-quantile, rp-gamma, gp-quantile or gp-gamma")
      ->capture_default_str();
  select->add_option("--h-values", o.h_values, "explicit bandwidth grid, comma-separated");
  select->add_option("--trace", o.trace, "write per-bandwidth stability traces");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo comparison of estimators");
  add_common(simulate, o);
  add_rp(simulate, o);
  simulate->add_option("--scenario", o.scenario, "gaussian, student or beta");
  simulate->add_option("--n", o.n, "sample size")->capture_default_str();
  simulate->add_option("--reps", o.reps, "replications")->capture_default_str();
  simulate->add_option("--seed", o.seed, "master seed")->capture_default_str();
  simulate->add_option("--estimator", o.estimators, "comma-separated estimators")->capture_default_str();
  simulate->add_option("--J-list", o.j_list, "several J values, one table row each");
  simulate->add_option("--alpha-grid", o.alpha_grid, "anchor orders searched by the oracle");
  simulate->add_option("--h-grid-size", o.h_grid_size, "bandwidth grid size")->capture_default_str();
  simulate->add_option("--selection", o.selection, "oracle, oracle-avg or data-driven")
      ->capture_default_str();
  simulate->add_option("--eval-points", o.eval_points, "evaluation grid size")->capture_default_str();
  simulate->add_flag("--paper-table", o.paper_table, "rows J, columns MSE/bias per estimator");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (!o.config.empty()) apply_config_file(*active, o.config);
    const std::string name = active->get_name();
    if (name == "fit") return cmd_fit(o);
    if (name == "extreme") return cmd_extreme(o);
    if (name == "select") return cmd_select(o);
    return cmd_simulate(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("evqr");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  argv.push_back(nullptr);
  return run(static_cast<int>(storage.size()), argv.data());
}

}  // namespace evqr::cli

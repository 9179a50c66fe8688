#include "evqr/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "evqr/errors.hpp"

namespace evqr {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool skip_line(const std::string& line) {
  const std::string t = trim(line);
  return t.empty() || t.front() == '#';
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& cell : split_commas(text)) {
    double v = 0.0;
    if (!parse_double(cell, v)) {
      throw InvalidArgument(fmt::format("cannot parse number '{}' in list '{}'", cell, text));
    }
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument("empty number list");
  return out;
}

Sample read_sample_csv(std::istream& in, const std::string& y_column) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    header = split_commas(line);
    break;
  }
  if (header.empty()) throw InvalidArgument("data file has no header row");
  std::size_t y_col = header.size();
  std::vector<std::size_t> x_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == y_column && y_col == header.size()) {
      y_col = c;
    } else {
      x_cols.push_back(c);
    }
  }
  if (y_col == header.size()) {
    throw InvalidArgument(fmt::format("response column '{}' not found in header", y_column));
  }
  if (x_cols.empty()) throw InvalidArgument("no covariate column in header");

  std::vector<double> xs, ys;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw InvalidArgument(fmt::format("line {}: expected {} fields, found {}", line_no,
                                        header.size(), cells.size()));
    }
    for (std::size_t c : x_cols) {
      double x = 0.0;
      if (!parse_double(cells[c], x) || !std::isfinite(x)) {
        throw InvalidArgument(
            fmt::format("line {}: bad value '{}' in column '{}'", line_no, cells[c], header[c]));
      }
      xs.push_back(x);
    }
    double y = 0.0;
    if (!parse_double(cells[y_col], y) || !std::isfinite(y)) {
      throw InvalidArgument(fmt::format("line {}: bad response '{}'", line_no, cells[y_col]));
    }
    ys.push_back(y);
  }
  if (ys.empty()) throw InvalidArgument("data file has no observations");
  return Sample(static_cast<int>(x_cols.size()), std::move(xs), std::move(ys));
}

Sample read_sample_csv_file(const std::string& path, const std::string& y_column) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument(fmt::format("cannot open data file '{}'", path));
  return read_sample_csv(in, y_column);
}

void write_config_echo(std::ostream& out, const ConfigEcho& echo) {
  for (const auto& [key, value] : echo) out << "# " << key << '=' << value << '\n';
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricReport>& reports,
                       const ConfigEcho& echo) {
  write_config_echo(out, echo);
  out << "scenario,estimator,beta,J,r,reps,mse,bias,failed_reps\n";
  for (const auto& m : reports) {
    out << m.scenario << ',' << m.estimator << ',' << format_number(m.beta) << ',' << m.J << ','
        << format_number(m.r) << ',' << m.reps << ',' << format_number(m.mse) << ','
        << format_number(m.bias) << ',' << m.failed_reps << '\n';
  }
}

void write_metrics_json(std::ostream& out, const std::vector<MetricReport>& reports,
                        const ConfigEcho& echo) {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [key, value] : echo) config[key] = value;
  doc["config"] = config;
  // JSON has no NaN; degenerate metrics become null.
  auto num = [](double v) -> nlohmann::ordered_json {
    if (!std::isfinite(v)) return nullptr;
    return v;
  };
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& m : reports) {
    rows.push_back({{"scenario", m.scenario},
                    {"estimator", m.estimator},
                    {"beta", num(m.beta)},
                    {"J", m.J},
                    {"r", num(m.r)},
                    {"reps", m.reps},
                    {"mse", num(m.mse)},
                    {"bias", num(m.bias)},
                    {"failed_reps", m.failed_reps}});
  }
  doc["metrics"] = rows;
  out << doc.dump(2) << '\n';
}

std::vector<MetricRow> read_metrics_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const auto cells = split_commas(line);
    if (!header_seen) {
      if (cells.size() != 9 || cells[0] != "scenario") {
        throw InvalidArgument(fmt::format("line {}: unexpected metric header", line_no));
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != 9) {
      throw InvalidArgument(fmt::format("line {}: expected 9 fields", line_no));
    }
    MetricRow row;
    row.scenario = cells[0];
    row.estimator = cells[1];
    double J = 0.0, reps = 0.0, failed = 0.0;
    const bool ok = parse_double(cells[2], row.beta) && parse_double(cells[3], J) &&
                    parse_double(cells[4], row.r) && parse_double(cells[5], reps) &&
                    (parse_double(cells[6], row.mse) || cells[6] == "nan") &&
                    (parse_double(cells[7], row.bias) || cells[7] == "nan") &&
                    parse_double(cells[8], failed);
    if (!ok) throw InvalidArgument(fmt::format("line {}: malformed metric row", line_no));
    if (cells[6] == "nan") row.mse = std::nan("");
    if (cells[7] == "nan") row.bias = std::nan("");
    row.J = static_cast<int>(J);
    row.reps = static_cast<std::size_t>(reps);
    row.failed_reps = static_cast<std::size_t>(failed);
    rows.push_back(row);
  }
  if (!header_seen) throw InvalidArgument("metric table has no header");
  return rows;
}

}  // namespace evqr

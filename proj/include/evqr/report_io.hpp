#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "evqr/conditional.hpp"
#include "evqr/simulation.hpp"

namespace evqr {

/// Reads a sample from CSV. A header row is required, lines starting
/// with '#' are skipped. Every column other than `y_column` is a covariate.
/// Throws InvalidArgument with a line number on malformed input.
Sample read_sample_csv(std::istream& in, const std::string& y_column = "y");
Sample read_sample_csv_file(const std::string& path, const std::string& y_column = "y");

/// Effective configuration, written as "# key=value" lines ahead of a CSV table.
using ConfigEcho = std::vector<std::pair<std::string, std::string>>;
void write_config_echo(std::ostream& out, const ConfigEcho& echo);

/// Aggregate metric tables. Numbers use the shortest round-trip representation.
void write_metrics_csv(std::ostream& out, const std::vector<MetricReport>& reports,
                       const ConfigEcho& echo = {});
void write_metrics_json(std::ostream& out, const std::vector<MetricReport>& reports,
                        const ConfigEcho& echo = {});

/// Row of a metric table read back from CSV.
struct MetricRow {
  std::string scenario;
  std::string estimator;
  double beta = 0.0;
  int J = 0;
  double r = 0.0;
  std::size_t reps = 0;
  double mse = 0.0;
  double bias = 0.0;
  std::size_t failed_reps = 0;
};
std::vector<MetricRow> read_metrics_csv(std::istream& in);

/// Formats a double for CSV/JSON: shortest round-trip, "nan"/"inf" spelled out.
std::string format_number(double v);

/// Splits a comma-separated list of numbers ("0.1,0.5,0.9").
std::vector<double> parse_number_list(const std::string& text);

}  // namespace evqr

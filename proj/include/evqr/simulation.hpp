#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "evqr/conditional.hpp"
#include "evqr/kernel.hpp"
#include "evqr/rng.hpp"
#include "evqr/selection.hpp"

namespace evqr {

enum class ErrorModel { Gaussian, Student, Beta };

std::optional<ErrorModel> parse_error_model(const std::string& name);
std::string to_string(ErrorModel model);

/// Y = G(X) + sigma(X) U with X ~ U(0, 1) and U | X = x drawn from the error model.
struct Scenario {
  ErrorModel model = ErrorModel::Gaussian;
  std::size_t n = 200;

  /// G(x) = sqrt(x (1 - x)) sin(2 pi (1 + 2^(-7/5)) / (x + 2^(-7/5))).
  static double location(double x);
  /// sigma(x) = (1 + x) / 10.
  static double scale(double x);
  /// nu(x) = {(1/10 + sin(pi x)) (11/10 - exp(-64 (x - 1/2)^2) / 2)}^(-1).
  static double nu(double x);
  /// k(x) = floor(nu(x)) + 1.
  static int student_df(double x);

  double true_gamma(double x) const;
  /// q(beta | x) = G(x) + sigma(x) Fbar_U^(-1)(beta | x).
  double true_quantile(double beta, double x) const;

  /// Inverse survival, survival and density of the error U given X = x.
  double error_inverse_survival(double beta, double x) const;
  double error_survival(double u, double x) const;
  double error_density(double u, double x) const;

  /// a(y | x) = Fbar(y | x) / f(y | x) of the response.
  double auxiliary(double y, double x) const;

  /// Draws the sample. Each observation consumes two uniforms: X, then U by inversion.
  Sample generate(Rng& rng) const;
};

/// Estimators compared by the Monte Carlo harness.
enum class Estimator {
  RQ,          // q_hat(beta | x)
  RP1,         // q_tilde RP with constant weights
  RP2,         // q_tilde RP with linear weights
  GP,          // q_hat GP
  GammaRP1,
  GammaRP2,
  GammaGP,
  Truth,       // true quantile (sanity check)
  TruthGamma,  // true gamma (sanity check)
};

std::optional<Estimator> parse_estimator(const std::string& name);
std::string to_string(Estimator e);
bool targets_gamma(Estimator e);

enum class ParameterSelection {
  OracleMse,          // per-replication minimiser of the replication's MSE
  OracleMseAveraged,  // single cell minimising the replication-averaged MSE
  DataDriven,         // h_cv, then the separate k stability rule per x
};

std::optional<ParameterSelection> parse_parameter_selection(const std::string& name);
std::string to_string(ParameterSelection s);

struct McConfig {
  Scenario scenario;
  Estimator estimator = Estimator::RP1;
  double beta = 0.01;
  int J = 3;
  double r = 1.0 / 3.0;
  std::vector<double> alpha_grid = default_alpha_grid();
  std::size_t h_grid_size = 50;
  HMaxRule h_max_rule = HMaxRule::Half;
  std::size_t eval_points = 100;
  std::size_t reps = 400;
  std::uint64_t seed = 1;
  ParameterSelection selection = ParameterSelection::OracleMse;
  unsigned threads = 1;
  bool keep_per_point = true;

  /// {0.1, 0.15, ..., 0.95}.
  static std::vector<double> default_alpha_grid();
  void validate() const;
};

/// x_l = (l - 1/2) / L, l = 1..L.
std::vector<double> evaluation_grid(std::size_t L);

struct ReplicationResult {
  std::size_t index = 0;
  bool failed = false;
  double mse = 0.0;
  double bias = 0.0;
  double alpha = 0.0;  // chosen alpha (oracle selection), 0 otherwise
  double h = 0.0;      // chosen bandwidth
  std::vector<double> errors;  // estimate - truth at each x_l (if kept)
};

struct MetricReport {
  std::string scenario;
  std::string estimator;
  double beta = 0.0;
  int J = 0;
  double r = 0.0;
  std::size_t reps = 0;
  double mse = 0.0;
  double bias = 0.0;
  std::size_t failed_reps = 0;
  double mse_se = 0.0;   // Monte Carlo standard error of mse across replications
  double bias_se = 0.0;  // Monte Carlo standard error of bias across replications
  double error_variance = 0.0;  // pooled variance of the errors kept per point
  std::vector<double> grid;
  std::vector<ReplicationResult> replications;
};

/// Runs the replications (concurrently when cfg.threads != 1) and aggregates them.
/// Each replication draws from its own substream, so results do not depend on
/// the thread count.
MetricReport run_mc(const McConfig& cfg, const KernelSpec& kernel);

/// Intermediate-quantile normalisation study at a fixed x: standardized errors
/// sqrt(n h alpha) (q_hat(alpha | x) / q(alpha | x) - 1) over replications.
struct StandardizedErrorStudy {
  std::vector<double> errors;
  double empirical_variance = 0.0;
  double heavy_tail_variance = 0.0;  // ||K||^2 gamma(x)^2 / g(x), g = 1
  double location_adjusted_variance = 0.0;  // ||K||^2 (a(q|x) / q)^2 / g(x)
  std::size_t empty_windows = 0;
};

StandardizedErrorStudy standardized_quantile_errors(const Scenario& sc, const KernelSpec& kernel,
                                                    double x, double alpha, double h,
                                                    std::size_t reps, std::uint64_t seed,
                                                    unsigned threads = 1);

}  // namespace evqr

#include "evqr/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "evqr/errors.hpp"
#include "evqr/gp_benchmark.hpp"
#include "evqr/parallel.hpp"
#include "evqr/pickands.hpp"

namespace evqr {

namespace bm = boost::math;

std::optional<ErrorModel> parse_error_model(const std::string& name) {
  if (name == "gaussian") return ErrorModel::Gaussian;
  if (name == "student") return ErrorModel::Student;
  if (name == "beta") return ErrorModel::Beta;
  return std::nullopt;
}

std::string to_string(ErrorModel model) {
  switch (model) {
    case ErrorModel::Gaussian: return "gaussian";
    case ErrorModel::Student: return "student";
    case ErrorModel::Beta: return "beta";
  }
  return "unknown";
}

double Scenario::location(double x) {
  const double c = std::pow(2.0, -7.0 / 5.0);
  return std::sqrt(x * (1.0 - x)) * std::sin(2.0 * std::numbers::pi * (1.0 + c) / (x + c));
}

double Scenario::scale(double x) { return (1.0 + x) / 10.0; }

double Scenario::nu(double x) {
  const double a = 0.1 + std::sin(std::numbers::pi * x);
  const double b = 1.1 - 0.5 * std::exp(-64.0 * (x - 0.5) * (x - 0.5));
  return 1.0 / (a * b);
}

int Scenario::student_df(double x) { return static_cast<int>(std::floor(nu(x))) + 1; }

double Scenario::true_gamma(double x) const {
  switch (model) {
    case ErrorModel::Gaussian: return 0.0;
    case ErrorModel::Student: return 1.0 / student_df(x);
    case ErrorModel::Beta: return -1.0 / nu(x);
  }
  return 0.0;
}

double Scenario::error_inverse_survival(double beta, double x) const {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw DomainError(fmt::format("beta must lie in (0, 1), got {}", beta));
  }
  switch (model) {
    case ErrorModel::Gaussian:
      return bm::quantile(bm::complement(bm::normal_distribution<double>(), beta));
    case ErrorModel::Student:
      return bm::quantile(
          bm::complement(bm::students_t_distribution<double>(student_df(x)), beta));
    case ErrorModel::Beta: {
      const double v = nu(x);
      return bm::quantile(bm::complement(bm::beta_distribution<double>(v, v), beta));
    }
  }
  return 0.0;
}

double Scenario::error_survival(double u, double x) const {
  switch (model) {
    case ErrorModel::Gaussian: return bm::cdf(bm::complement(bm::normal_distribution<double>(), u));
    case ErrorModel::Student:
      return bm::cdf(bm::complement(bm::students_t_distribution<double>(student_df(x)), u));
    case ErrorModel::Beta: {
      if (u <= 0.0) return 1.0;
      if (u >= 1.0) return 0.0;
      const double v = nu(x);
      return bm::cdf(bm::complement(bm::beta_distribution<double>(v, v), u));
    }
  }
  return 0.0;
}

double Scenario::error_density(double u, double x) const {
  switch (model) {
    case ErrorModel::Gaussian: return bm::pdf(bm::normal_distribution<double>(), u);
    case ErrorModel::Student: return bm::pdf(bm::students_t_distribution<double>(student_df(x)), u);
    case ErrorModel::Beta: {
      if (u <= 0.0 || u >= 1.0) return 0.0;
      const double v = nu(x);
      return bm::pdf(bm::beta_distribution<double>(v, v), u);
    }
  }
  return 0.0;
}

double Scenario::true_quantile(double beta, double x) const {
  return location(x) + scale(x) * error_inverse_survival(beta, x);
}

double Scenario::auxiliary(double y, double x) const {
  const double s = scale(x);
  const double u = (y - location(x)) / s;
  return s * error_survival(u, x) / error_density(u, x);
}

Sample Scenario::generate(Rng& rng) const {
  if (n < 1) throw InvalidArgument("scenario sample size must be >= 1");
  std::vector<double> xs(n);
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform();
    const double p = rng.uniform();
    double u = 0.0;
    switch (model) {
      case ErrorModel::Gaussian: u = bm::quantile(bm::normal_distribution<double>(), p); break;
      case ErrorModel::Student:
        u = bm::quantile(bm::students_t_distribution<double>(student_df(x)), p);
        break;
      case ErrorModel::Beta: {
        const double v = nu(x);
        u = bm::quantile(bm::beta_distribution<double>(v, v), p);
        break;
      }
    }
    xs[i] = x;
    ys[i] = location(x) + scale(x) * u;
  }
  return Sample::univariate(std::move(xs), std::move(ys));
}

std::optional<Estimator> parse_estimator(const std::string& name) {
  if (name == "rq") return Estimator::RQ;
  if (name == "rp1") return Estimator::RP1;
  if (name == "rp2") return Estimator::RP2;
  if (name == "gp") return Estimator::GP;
  if (name == "gamma-rp1") return Estimator::GammaRP1;
  if (name == "gamma-rp2") return Estimator::GammaRP2;
  if (name == "gamma-gp") return Estimator::GammaGP;
  if (name == "truth") return Estimator::Truth;
  if (name == "truth-gamma") return Estimator::TruthGamma;
  return std::nullopt;
}

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::RQ: return "rq";
    case Estimator::RP1: return "rp1";
    case Estimator::RP2: return "rp2";
    case Estimator::GP: return "gp";
    case Estimator::GammaRP1: return "gamma-rp1";
    case Estimator::GammaRP2: return "gamma-rp2";
    case Estimator::GammaGP: return "gamma-gp";
    case Estimator::Truth: return "truth";
    case Estimator::TruthGamma: return "truth-gamma";
  }
  return "unknown";
}

bool targets_gamma(Estimator e) {
  return e == Estimator::GammaRP1 || e == Estimator::GammaRP2 || e == Estimator::GammaGP ||
         e == Estimator::TruthGamma;
}

std::optional<ParameterSelection> parse_parameter_selection(const std::string& name) {
  if (name == "oracle") return ParameterSelection::OracleMse;
  if (name == "oracle-avg") return ParameterSelection::OracleMseAveraged;
  if (name == "data-driven") return ParameterSelection::DataDriven;
  return std::nullopt;
}

std::string to_string(ParameterSelection s) {
  switch (s) {
    case ParameterSelection::OracleMse: return "oracle";
    case ParameterSelection::OracleMseAveraged: return "oracle-avg";
    case ParameterSelection::DataDriven: return "data-driven";
  }
  return "unknown";
}

std::vector<double> McConfig::default_alpha_grid() {
  std::vector<double> grid;
  for (int i = 2; i <= 19; ++i) grid.push_back(i / 20.0);
  return grid;
}

void McConfig::validate() const {
  if (scenario.n < 3) throw InvalidArgument("scenario sample size must be >= 3");
  if (reps < 1) throw InvalidArgument("reps must be >= 1");
  if (!(beta > 0.0 && beta < 1.0)) {
    throw InvalidArgument(fmt::format("beta must lie in (0, 1), got {}", beta));
  }
  if (J < 3) throw InvalidArgument(fmt::format("J must be >= 3, got {}", J));
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument(fmt::format("r must lie in (0, 1), got {}", r));
  if (alpha_grid.empty()) throw InvalidArgument("alpha grid is empty");
  for (double a : alpha_grid) {
    if (!(a > 0.0 && a < 1.0)) throw InvalidArgument(fmt::format("alpha {} outside (0, 1)", a));
  }
  if (h_grid_size < 1) throw InvalidArgument("bandwidth grid needs at least one point");
  if (eval_points < 1) throw InvalidArgument("need at least one evaluation point");
}

std::vector<double> evaluation_grid(std::size_t L) {
  std::vector<double> xs(L);
  for (std::size_t l = 0; l < L; ++l) {
    xs[l] = (static_cast<double>(l) + 0.5) / static_cast<double>(L);
  }
  return xs;
}

namespace {

bool depends_on_alpha(Estimator e) {
  return e != Estimator::RQ && e != Estimator::Truth && e != Estimator::TruthGamma;
}

std::vector<double> rp_weights_for(Estimator e, int J) {
  return (e == Estimator::RP2 || e == Estimator::GammaRP2) ? rp2_weights(J) : rp1_weights(J);
}

// Upper-alpha sample quantile of the responses: about alpha n observations lie above it.
double global_threshold(const std::vector<double>& sorted_y, double alpha) {
  const std::size_t n = sorted_y.size();
  auto m = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n) + 0.5));
  m = std::clamp<std::size_t>(m, 1, n - 1);
  return sorted_y[n - m - 1];
}

struct Truths {
  std::vector<double> value;  // target at each evaluation point
};

// Estimates at every x for one (alpha, h) cell; nullopt when any point fails.
class CellEvaluator {
public:
  CellEvaluator(const McConfig& cfg, const KernelSpec& kernel, const Sample& s,
                const std::vector<double>& xs, const std::vector<double>& truth)
      : cfg_(cfg), kernel_(kernel), s_(s), xs_(xs), truth_(truth),
        weights_(rp_weights_for(cfg.estimator, cfg.J)), sorted_y_(s.ys()) {
    std::sort(sorted_y_.begin(), sorted_y_.end());
  }

  // Errors (estimate - truth) for every alpha at one bandwidth; nullopt entries fail.
  std::vector<std::optional<std::vector<double>>> errors_at_h(double h,
                                                              std::span<const double> alphas) const {
    const std::size_t L = xs_.size();
    std::vector<std::optional<std::vector<double>>> out(alphas.size(),
                                                        std::vector<double>(L, 0.0));
    auto fail_all = [&] {
      for (auto& cell : out) cell.reset();
    };
    const Estimator est = cfg_.estimator;
    for (std::size_t l = 0; l < L; ++l) {
      const double x = xs_[l];
      if (est == Estimator::Truth || est == Estimator::TruthGamma) {
        for (auto& cell : out) {
          if (cell) (*cell)[l] = 0.0;
        }
        continue;
      }
      if (est == Estimator::GP || est == Estimator::GammaGP) {
        for (std::size_t a = 0; a < alphas.size(); ++a) {
          if (!out[a]) continue;
          const auto value = gp_value(h, x, alphas[a]);
          if (!value) {
            out[a].reset();
          } else {
            (*out[a])[l] = *value - truth_[l];
          }
        }
        continue;
      }
      const LocalWindow window = local_window(s_, kernel_, h, x);
      if (!(window.total_weight > 0.0)) {
        fail_all();
        return out;
      }
      const WeightedStepSurvival survival(s_, window);
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        if (!out[a]) continue;
        std::optional<double> value;
        if (est == Estimator::RQ) {
          value = survival.quantile(cfg_.beta);
        } else {
          value = rp_value(survival, alphas[a]);
        }
        if (!value) {
          out[a].reset();
        } else {
          (*out[a])[l] = *value - truth_[l];
        }
      }
    }
    return out;
  }

private:
  std::optional<double> rp_value(const WeightedStepSurvival& survival, double alpha) const {
    const RPConfig rp{alpha, cfg_.J, cfg_.r, weights_};
    const RPEstimate est = rp_gamma(survival, rp);
    if (est.degenerate) return std::nullopt;
    if (targets_gamma(cfg_.estimator)) return est.gamma_hat;
    if (cfg_.beta > alpha) return std::nullopt;
    const double q = extrapolate(est, cfg_.beta);
    return std::isfinite(q) ? std::optional<double>(q) : std::nullopt;
  }

  std::optional<double> gp_value(double h, double x, double alpha) const {
    const ExceedanceSet e = build_exceedances_over(s_, kernel_, h, x, global_threshold(sorted_y_, alpha));
    if (e.k_x < 2) return std::nullopt;
    const GPFit fit = gp_fit(e);
    if (targets_gamma(cfg_.estimator)) return fit.gamma_hat;
    const double q = gp_quantile(fit, e, cfg_.beta);
    return std::isfinite(q) ? std::optional<double>(q) : std::nullopt;
  }

  const McConfig& cfg_;
  const KernelSpec& kernel_;
  const Sample& s_;
  const std::vector<double>& xs_;
  const std::vector<double>& truth_;
  std::vector<double> weights_;
  std::vector<double> sorted_y_;
};

struct CellStats {
  double mse = 0.0;
  double bias = 0.0;
};

CellStats summarize(const std::vector<double>& errors) {
  CellStats s;
  for (double e : errors) {
    s.mse += e * e;
    s.bias += e;
  }
  s.mse /= static_cast<double>(errors.size());
  s.bias /= static_cast<double>(errors.size());
  return s;
}

// Per-replication table of cell statistics indexed [alpha][h].
struct CellTable {
  std::vector<double> h_values;
  std::vector<std::vector<std::optional<CellStats>>> cells;
};

std::vector<double> alphas_for(const McConfig& cfg) {
  return depends_on_alpha(cfg.estimator) ? cfg.alpha_grid : std::vector<double>{0.0};
}

Sample draw(const McConfig& cfg, std::size_t rep) {
  Rng rng = Rng::substream(cfg.seed, rep);
  return cfg.scenario.generate(rng);
}

// Best cell of one replication under oracle selection; fills `result`.
void oracle_replication(const McConfig& cfg, const KernelSpec& kernel, const std::vector<double>& xs,
                        const std::vector<double>& truth, ReplicationResult& result,
                        CellTable* table) {
  const Sample s = draw(cfg, result.index);
  const auto h_values = bandwidth_grid(s, cfg.h_grid_size, cfg.h_max_rule);
  const auto alphas = alphas_for(cfg);
  const CellEvaluator eval(cfg, kernel, s, xs, truth);
  std::optional<CellStats> best;
  if (table) {
    table->h_values = h_values;
    table->cells.assign(alphas.size(), std::vector<std::optional<CellStats>>(h_values.size()));
  }
  for (std::size_t hi = 0; hi < h_values.size(); ++hi) {
    const auto cells = eval.errors_at_h(h_values[hi], alphas);
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      if (!cells[a]) continue;
      const CellStats stats = summarize(*cells[a]);
      if (table) table->cells[a][hi] = stats;
      if (!best || stats.mse < best->mse) {
        best = stats;
        result.alpha = alphas[a];
        result.h = h_values[hi];
        if (cfg.keep_per_point) result.errors = *cells[a];
      }
    }
  }
  result.failed = !best;
  if (best) {
    result.mse = best->mse;
    result.bias = best->bias;
  }
}

// Fixed (alpha index, h index) cell of one replication.
void fixed_cell_replication(const McConfig& cfg, const KernelSpec& kernel,
                            const std::vector<double>& xs, const std::vector<double>& truth,
                            std::size_t alpha_index, std::size_t h_index, ReplicationResult& result) {
  const Sample s = draw(cfg, result.index);
  const auto h_values = bandwidth_grid(s, cfg.h_grid_size, cfg.h_max_rule);
  const auto alphas = alphas_for(cfg);
  const CellEvaluator eval(cfg, kernel, s, xs, truth);
  const double alpha = alphas[alpha_index];
  const auto cells = eval.errors_at_h(h_values[h_index], std::span<const double>(&alpha, 1));
  result.failed = !cells[0];
  if (cells[0]) {
    const CellStats stats = summarize(*cells[0]);
    result.mse = stats.mse;
    result.bias = stats.bias;
    result.alpha = alpha;
    result.h = h_values[h_index];
    if (cfg.keep_per_point) result.errors = *cells[0];
  }
}

void data_driven_replication(const McConfig& cfg, const KernelSpec& kernel,
                             const std::vector<double>& xs, const std::vector<double>& truth,
                             ReplicationResult& result) {
  const Sample s = draw(cfg, result.index);
  const auto h_values = bandwidth_grid(s, cfg.h_grid_size, cfg.h_max_rule);
  double h_cv = 0.0;
  try {
    h_cv = cv_select(s, kernel, h_values).h;
  } catch (const Error&) {
    result.failed = true;
    return;
  }
  result.h = h_cv;
  std::vector<double> errors(xs.size());
  const auto weights = rp_weights_for(cfg.estimator, cfg.J);
  for (std::size_t l = 0; l < xs.size(); ++l) {
    std::optional<double> value;
    switch (cfg.estimator) {
      case Estimator::Truth:
      case Estimator::TruthGamma: value = truth[l]; break;
      case Estimator::RQ: {
        const LocalWindow window = local_window(s, kernel, h_cv, xs[l]);
        if (window.total_weight > 0.0) value = WeightedStepSurvival(s, window).quantile(cfg.beta);
        break;
      }
      default: {
        SelectionTarget target = SelectionTarget::RPQuantile;
        if (cfg.estimator == Estimator::GammaRP1 || cfg.estimator == Estimator::GammaRP2) {
          target = SelectionTarget::RPGamma;
        } else if (cfg.estimator == Estimator::GP) {
          target = SelectionTarget::GPQuantile;
        } else if (cfg.estimator == Estimator::GammaGP) {
          target = SelectionTarget::GPGamma;
        }
        const double h = h_cv;
        const EstimateSurface surface =
            target_surface(target, s, kernel, xs[l], std::span<const double>(&h, 1), cfg.J, cfg.r,
                           weights, cfg.beta);
        try {
          const auto& row = surface.rows[0];
          value = select_k_separate(row.estimates, 1, k_window_for(row.n_star)).estimate;
        } catch (const Error&) {
        }
      }
    }
    if (!value) {
      result.failed = true;
      return;
    }
    errors[l] = *value - truth[l];
  }
  const CellStats stats = summarize(errors);
  result.mse = stats.mse;
  result.bias = stats.bias;
  if (cfg.keep_per_point) result.errors = std::move(errors);
}

}  // namespace

MetricReport run_mc(const McConfig& cfg, const KernelSpec& kernel) {
  cfg.validate();
  MetricReport report;
  report.scenario = to_string(cfg.scenario.model);
  report.estimator = to_string(cfg.estimator);
  report.beta = cfg.beta;
  report.J = cfg.J;
  report.r = cfg.r;
  report.reps = cfg.reps;
  report.grid = evaluation_grid(cfg.eval_points);

  std::vector<double> truth(report.grid.size());
  for (std::size_t l = 0; l < truth.size(); ++l) {
    truth[l] = targets_gamma(cfg.estimator) ? cfg.scenario.true_gamma(report.grid[l])
                                            : cfg.scenario.true_quantile(cfg.beta, report.grid[l]);
  }

  report.replications.resize(cfg.reps);
  for (std::size_t i = 0; i < cfg.reps; ++i) report.replications[i].index = i;

  switch (cfg.selection) {
    case ParameterSelection::OracleMse:
      parallel_for(cfg.reps, cfg.threads, [&](std::size_t i) {
        oracle_replication(cfg, kernel, report.grid, truth, report.replications[i], nullptr);
      });
      break;
    case ParameterSelection::DataDriven:
      parallel_for(cfg.reps, cfg.threads, [&](std::size_t i) {
        data_driven_replication(cfg, kernel, report.grid, truth, report.replications[i]);
      });
      break;
    case ParameterSelection::OracleMseAveraged: {
      std::vector<CellTable> tables(cfg.reps);
      McConfig lean = cfg;
      lean.keep_per_point = false;
      parallel_for(cfg.reps, cfg.threads, [&](std::size_t i) {
        ReplicationResult scratch;
        scratch.index = i;
        oracle_replication(lean, kernel, report.grid, truth, scratch, &tables[i]);
      });
      // A cell is eligible when it is valid in every replication that has any valid cell.
      const std::size_t n_alpha = alphas_for(cfg).size();
      const std::size_t n_h = cfg.h_grid_size;
      std::optional<std::pair<std::size_t, std::size_t>> best;
      double best_mse = 0.0;
      for (std::size_t a = 0; a < n_alpha; ++a) {
        for (std::size_t hi = 0; hi < n_h; ++hi) {
          double sum = 0.0;
          std::size_t count = 0;
          bool eligible = true;
          for (const auto& t : tables) {
            bool any = false;
            for (const auto& row : t.cells) {
              for (const auto& c : row) any = any || c.has_value();
            }
            if (!any) continue;
            if (!t.cells[a][hi]) {
              eligible = false;
              break;
            }
            sum += t.cells[a][hi]->mse;
            ++count;
          }
          if (!eligible || count == 0) continue;
          const double mean = sum / static_cast<double>(count);
          if (!best || mean < best_mse) {
            best = std::pair{a, hi};
            best_mse = mean;
          }
        }
      }
      if (!best) {
        for (auto& rr : report.replications) rr.failed = true;
        break;
      }
      parallel_for(cfg.reps, cfg.threads, [&](std::size_t i) {
        fixed_cell_replication(cfg, kernel, report.grid, truth, best->first, best->second,
                               report.replications[i]);
      });
      break;
    }
  }

  // Aggregate in replication order so the thread count cannot change the sums.
  std::size_t ok = 0;
  double mse_sum = 0.0, bias_sum = 0.0;
  for (const auto& rr : report.replications) {
    if (rr.failed) {
      ++report.failed_reps;
      continue;
    }
    ++ok;
    mse_sum += rr.mse;
    bias_sum += rr.bias;
  }
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  if (ok == 0) {
    report.mse = report.bias = report.mse_se = report.bias_se = report.error_variance = kNaN;
    return report;
  }
  report.mse = mse_sum / static_cast<double>(ok);
  report.bias = bias_sum / static_cast<double>(ok);
  double mse_ss = 0.0, bias_ss = 0.0;
  for (const auto& rr : report.replications) {
    if (rr.failed) continue;
    mse_ss += (rr.mse - report.mse) * (rr.mse - report.mse);
    bias_ss += (rr.bias - report.bias) * (rr.bias - report.bias);
  }
  if (ok > 1) {
    const double denom = static_cast<double>(ok - 1) * static_cast<double>(ok);
    report.mse_se = std::sqrt(mse_ss / denom);
    report.bias_se = std::sqrt(bias_ss / denom);
  }
  if (cfg.keep_per_point) {
    double mean = 0.0, ss = 0.0;
    std::size_t count = 0;
    for (const auto& rr : report.replications) {
      if (rr.failed) continue;
      for (double e : rr.errors) {
        mean += e;
        ++count;
      }
    }
    mean /= static_cast<double>(count);
    for (const auto& rr : report.replications) {
      if (rr.failed) continue;
      for (double e : rr.errors) ss += (e - mean) * (e - mean);
    }
    report.error_variance = ss / static_cast<double>(count);
  } else {
    report.error_variance = report.mse - report.bias * report.bias;
  }
  return report;
}

StandardizedErrorStudy standardized_quantile_errors(const Scenario& sc, const KernelSpec& kernel,
                                                    double x, double alpha, double h,
                                                    std::size_t reps, std::uint64_t seed,
                                                    unsigned threads) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  if (reps < 2) throw InvalidArgument("need at least two replications");
  const double q = sc.true_quantile(alpha, x);
  const double norm = std::sqrt(static_cast<double>(sc.n) * h * alpha);
  std::vector<std::optional<double>> raw(reps);
  parallel_for(reps, threads, [&](std::size_t i) {
    Rng rng = Rng::substream(seed, i);
    const Sample s = sc.generate(rng);
    const LocalWindow window = local_window(s, kernel, h, x);
    if (!(window.total_weight > 0.0)) return;
    raw[i] = norm * (WeightedStepSurvival(s, window).quantile(alpha) / q - 1.0);
  });
  StandardizedErrorStudy out;
  for (const auto& e : raw) {
    if (e) {
      out.errors.push_back(*e);
    } else {
      ++out.empty_windows;
    }
  }
  double mean = 0.0;
  for (double e : out.errors) mean += e;
  mean /= static_cast<double>(out.errors.size());
  double ss = 0.0;
  for (double e : out.errors) ss += (e - mean) * (e - mean);
  out.empirical_variance = ss / static_cast<double>(out.errors.size() - 1);
  const double gamma = sc.true_gamma(x);
  out.heavy_tail_variance = kernel.l2_norm_sq() * gamma * gamma;
  const double ratio = sc.auxiliary(q, x) / q;
  out.location_adjusted_variance = kernel.l2_norm_sq() * ratio * ratio;
  return out;
}

}  // namespace evqr

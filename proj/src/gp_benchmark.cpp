#include "evqr/gp_benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "evqr/errors.hpp"
#include "evqr/evt_core.hpp"
#include "nelder_mead.hpp"

namespace evqr {

namespace {

constexpr double kGammaFloor = -1.0 + 1e-6;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

ExceedanceSet build_exceedances_over(const Sample& s, const KernelSpec& k, double h,
                                     std::span<const double> x, double threshold) {
  const LocalWindow window = local_window(s, k, h, x);
  ExceedanceSet e;
  e.u_x = threshold;
  e.n_star = window.n_star;
  // Weights for in-window observations; everything else has K_h = 0.
  std::vector<double> weight_of(s.size(), 0.0);
  for (std::size_t j = 0; j < window.indices.size(); ++j) {
    weight_of[window.indices[j]] = window.weights[j];
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.y(i) > threshold) {
      e.z.push_back(s.y(i) - threshold);
      e.w.push_back(weight_of[i]);
      if (weight_of[i] > 0.0) ++e.k_x;
    }
  }
  return e;
}

ExceedanceSet build_exceedances_over(const Sample& s, const KernelSpec& k, double h, double x,
                                     double threshold) {
  return build_exceedances_over(s, k, h, std::span<const double>(&x, 1), threshold);
}

ExceedanceSet build_exceedances(const Sample& s, const KernelSpec& k, double h,
                                std::span<const double> x, std::size_t k_exceed) {
  const LocalWindow window = local_window(s, k, h, x);
  if (k_exceed < 1 || k_exceed >= window.n_star) {
    throw InsufficientDataError(fmt::format(
        "need 1 <= k < n_star for the exceedance threshold, got k = {} with n_star = {}", k_exceed,
        window.n_star));
  }
  std::vector<double> ys;
  ys.reserve(window.n_star);
  for (std::size_t i : window.indices) ys.push_back(s.y(i));
  std::sort(ys.begin(), ys.end());
  // Y_(n* - k) in 1-based ascending order.
  const double threshold = ys[window.n_star - k_exceed - 1];
  return build_exceedances_over(s, k, h, x, threshold);
}

ExceedanceSet build_exceedances(const Sample& s, const KernelSpec& k, double h, double x,
                                std::size_t k_exceed) {
  return build_exceedances(s, k, h, std::span<const double>(&x, 1), k_exceed);
}

namespace {

// (1/count) sum_i w_i log g(z_i); entries with w_i <= 0 are ignored.
double weighted_loglik(std::span<const double> z, std::span<const double> w, std::size_t count,
                       double sigma, double gamma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(gamma)) return kNegInf;
  if (count == 0) return kNegInf;
  const double log_sigma = std::log(sigma);
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!(w[i] > 0.0)) continue;
    const double t = z[i] / sigma;
    double log_density;
    if (gamma == 0.0) {
      log_density = -log_sigma - t;
    } else {
      const double arg = gamma * t;
      if (!(arg > -1.0)) return kNegInf;
      log_density = -log_sigma - (1.0 / gamma + 1.0) * std::log1p(arg);
    }
    acc += w[i] * log_density;
  }
  return acc / static_cast<double>(count);
}

}  // namespace

double gp_loglik(const ExceedanceSet& e, double sigma, double gamma) {
  return weighted_loglik(e.z, e.w, e.z.size(), sigma, gamma);
}

GPFit gp_fit(const ExceedanceSet& e, const GPFitOptions& options) {
  if (e.k_x < 2) {
    throw InsufficientDataError(
        fmt::format("GP fit needs at least two positively weighted exceedances, got {}", e.k_x));
  }
  // Zero-weight exceedances only enter through the normalising count.
  std::vector<double> z, w;
  z.reserve(e.k_x);
  w.reserve(e.k_x);
  double weight_sum = 0.0;
  double mean = 0.0;
  double z_min = std::numeric_limits<double>::infinity();
  double z_max = 0.0;
  for (std::size_t i = 0; i < e.z.size(); ++i) {
    if (!(e.w[i] > 0.0)) continue;
    z.push_back(e.z[i]);
    w.push_back(e.w[i]);
    weight_sum += e.w[i];
    mean += e.w[i] * e.z[i];
    z_min = std::min(z_min, e.z[i]);
    z_max = std::max(z_max, e.z[i]);
  }
  mean /= weight_sum;
  const std::size_t count = e.z.size();
  auto loglik = [&](double sigma, double gamma) {
    return weighted_loglik(z, w, count, sigma, gamma);
  };

  // Grid seeding: gamma in {-0.9, ..., 1.5}, sigma log-spaced over [mean/10, 10 mean].
  std::vector<double> gammas;
  if (options.fixed_gamma) {
    gammas.push_back(*options.fixed_gamma);
  } else {
    for (int i = -9; i <= 15; ++i) gammas.push_back(0.1 * i);
  }
  GPFit best;
  best.loglik = kNegInf;
  constexpr int kSigmaGrid = 15;
  for (double g : gammas) {
    for (int i = 0; i < kSigmaGrid; ++i) {
      const double sigma = mean * std::pow(10.0, -1.0 + 2.0 * i / (kSigmaGrid - 1));
      const double ll = loglik(sigma, g);
      if (ll > best.loglik) {
        best.loglik = ll;
        best.sigma_hat = sigma;
        best.gamma_hat = g;
      }
    }
  }
  if (!std::isfinite(best.loglik)) {
    // Every seed violated the support; fall back to the exponential fit.
    best.sigma_hat = mean;
    best.gamma_hat = options.fixed_gamma.value_or(0.0);
    best.loglik = loglik(best.sigma_hat, best.gamma_hat);
  }
  if (z_max - z_min <= 1e-12 * z_max) {
    // Identical exceedances: the likelihood has no interior maximum.
    best.converged = false;
    return best;
  }

  // Minimise the negative log-likelihood over (log sigma [, gamma]).
  const bool fixed = options.fixed_gamma.has_value();
  auto objective = [&](const std::vector<double>& p) {
    const double g = fixed ? *options.fixed_gamma : p[1];
    if (!fixed && g < kGammaFloor) return std::numeric_limits<double>::infinity();
    const double ll = loglik(std::exp(p[0]), g);
    return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
  };
  std::vector<double> start{std::log(best.sigma_hat)};
  std::vector<double> steps{0.1};
  if (!fixed) {
    start.push_back(best.gamma_hat);
    steps.push_back(0.05);
  }

  int iterations = 0;
  detail::SimplexResult result;
  // A restart from the reported optimum guards against a prematurely collapsed simplex.
  for (int round = 0; round < 3 && iterations < options.max_iterations; ++round) {
    result = detail::nelder_mead(objective, start, steps, options.rel_tol,
                                 options.max_iterations - iterations);
    iterations += result.iterations;
    const bool moved = std::abs(result.x[0] - start[0]) > 10 * options.rel_tol ||
                       (!fixed && std::abs(result.x[1] - start[1]) > 10 * options.rel_tol);
    start = result.x;
    for (double& s : steps) s *= 0.1;
    if (result.converged && !moved) break;
  }

  if (-result.value >= best.loglik) {
    best.sigma_hat = std::exp(result.x[0]);
    best.gamma_hat = fixed ? *options.fixed_gamma : result.x[1];
    best.loglik = -result.value;
  }
  best.iterations = iterations;
  best.converged = result.converged && (fixed || best.gamma_hat > kGammaFloor + 1e-4);
  return best;
}

double gp_quantile(const GPFit& fit, const ExceedanceSet& e, double beta) {
  if (e.k_x == 0) throw InsufficientDataError("GP quantile needs positively weighted exceedances");
  const double ratio = static_cast<double>(e.n_star) * beta / static_cast<double>(e.k_x);
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    throw DomainError(fmt::format("n_star beta / k_x must be positive, got {}", ratio));
  }
  // ((ratio)^(-g) - 1) / g == K_g(1 / ratio), continuous across g = 0.
  return e.u_x + fit.sigma_hat * k_fn(fit.gamma_hat, 1.0 / ratio);
}

}  // namespace evqr

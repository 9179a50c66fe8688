#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "evqr/conditional.hpp"
#include "evqr/kernel.hpp"

namespace evqr {

/// Exceedances Z = Y - u_x over a threshold, weighted by K_h(X - x).
///
/// Every exceedance of the sample is kept (zero weight outside the window), so
/// z.size() is the likelihood's normalising count N_x while k_x counts only the
/// positively weighted ones.
struct ExceedanceSet {
  std::vector<double> z;
  std::vector<double> w;
  double u_x = 0.0;
  std::size_t n_star = 0;  // observations in the closed ball B(x, h)
  std::size_t k_x = 0;     // exceedances with w > 0

  std::size_t n_exceed() const noexcept { return z.size(); }
  /// No positively weighted exceedance (e.g. ties at the threshold).
  bool degenerate() const noexcept { return k_x == 0; }
};

/// Threshold at the (n_star - k)-th ascending in-window order statistic.
/// Requires 1 <= k_exceed < n_star; throws InsufficientDataError otherwise.
ExceedanceSet build_exceedances(const Sample& s, const KernelSpec& k, double h,
                                std::span<const double> x, std::size_t k_exceed);
ExceedanceSet build_exceedances(const Sample& s, const KernelSpec& k, double h, double x,
                                std::size_t k_exceed);

/// Exceedances over a caller-chosen threshold (e.g. a global sample quantile).
ExceedanceSet build_exceedances_over(const Sample& s, const KernelSpec& k, double h,
                                     std::span<const double> x, double threshold);
ExceedanceSet build_exceedances_over(const Sample& s, const KernelSpec& k, double h, double x,
                                     double threshold);

/// (1/N_x) sum_i w_i log g(z_i; sigma, gamma) with g the generalized Pareto density.
/// Returns -infinity when the support constraint 1 + gamma z / sigma > 0 fails for
/// a positively weighted exceedance or sigma <= 0.
double gp_loglik(const ExceedanceSet& e, double sigma, double gamma);

struct GPFit {
  double sigma_hat = 0.0;
  double gamma_hat = 0.0;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct GPFitOptions {
  std::optional<double> fixed_gamma;  // restrict the search to sigma only
  double rel_tol = 1e-8;
  int max_iterations = 500;
};

/// Weighted maximum likelihood over sigma > 0, gamma > -1: grid seeding then
/// simplex refinement. Throws InsufficientDataError when k_x < 2.
GPFit gp_fit(const ExceedanceSet& e, const GPFitOptions& options = {});

/// u_x + sigma_hat / gamma_hat ((n_star beta / k_x)^(-gamma_hat) - 1), with the
/// logarithmic limit at gamma_hat = 0.
double gp_quantile(const GPFit& fit, const ExceedanceSet& e, double beta);

}  // namespace evqr

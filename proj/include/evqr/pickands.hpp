#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "evqr/conditional.hpp"
#include "evqr/evt_core.hpp"
#include "evqr/kernel.hpp"

namespace evqr {

/// Maps an exceedance probability in (0, 1) to a quantile.
using QuantileOracle = std::function<double(double)>;

/// pi_j = 1/(J-2), j = 1..J-2.
std::vector<double> rp1_weights(int J);
/// pi_j = 2j / ((J-1)(J-2)), j = 1..J-2.
std::vector<double> rp2_weights(int J);

/// Parameters of the refined Pickands estimator family.
struct RPConfig {
  double alpha = 0.1;           // anchor order alpha_n
  int J = 3;                    // number of quantiles read off
  double r = 1.0 / 3.0;         // level ratio, tau_j = r^(j-1)
  std::vector<double> weights;  // pi_1..pi_{J-2}

  static RPConfig rp1(double alpha, int J, double r);
  static RPConfig rp2(double alpha, int J, double r);

  /// Throws InvalidArgument on a violated invariant.
  void validate() const;
  FractionLevels levels() const { return FractionLevels::geometric(J, r); }
};

struct RPEstimate {
  double alpha = 0.0;
  double gamma_hat = 0.0;        // meaningful only when !degenerate
  double a_hat = 0.0;            // meaningful only when !degenerate
  double anchor_quantile = 0.0;  // q_hat(alpha | x)
  std::vector<double> quantiles;          // q_hat(tau_j alpha | x), j = 1..J
  std::vector<double> quantile_spacings;  // q_j - q_{j+1}, j = 1..J-1
  bool degenerate = false;
  std::optional<std::size_t> collapsed_spacing;  // 0-based j of the first unusable spacing
};

/// Refined Pickands estimate of gamma (and the matching scale) from a quantile oracle.
/// Collapsed spacings set `degenerate` instead of producing infinities.
RPEstimate rp_gamma(const QuantileOracle& quantile, const RPConfig& cfg);
RPEstimate rp_gamma(const WeightedStepSurvival& survival, const RPConfig& cfg);
RPEstimate rp_gamma(const Sample& s, const KernelSpec& k, double h, double x, const RPConfig& cfg);
RPEstimate rp_gamma(const Sample& s, const KernelSpec& k, double h, std::span<const double> x,
                    const RPConfig& cfg);

/// a_hat = (1 / K_g(r)) sum_j pi_j r^(g j) (q_j - q_{j+1}) for a given g = gamma_hat.
/// Throws DegenerateSpacingError when every spacing used is zero.
double rp_scale(const QuantileOracle& quantile, const RPConfig& cfg, double gamma_hat);
double rp_scale(const Sample& s, const KernelSpec& k, double h, double x, const RPConfig& cfg,
                double gamma_hat);

/// q_tilde(beta) = q_hat(alpha) + K_{gamma_hat}(alpha / beta) a_hat. Requires
/// 0 < beta <= alpha; beta == alpha returns the anchor unchanged.
double extrapolate(double anchor_quantile, double gamma_hat, double a_hat, double alpha,
                   double beta);
/// Throws DegenerateSpacingError for a degenerate anchor.
double extrapolate(const RPEstimate& anchor, double beta);

}  // namespace evqr

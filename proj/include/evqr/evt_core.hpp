#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace evqr {

/// Conditional extreme-value index; the sign classifies the domain of attraction.
struct TailIndex {
  double gamma = 0.0;

  bool frechet() const noexcept { return gamma > 0.0; }
  bool gumbel() const noexcept { return gamma == 0.0; }
  bool weibull() const noexcept { return gamma < 0.0; }
};

/// Fraction levels 0 < tau_J < ... < tau_1 <= 1 at which quantiles are read off.
class FractionLevels {
public:
  /// Arbitrary strictly decreasing levels; J >= 3.
  explicit FractionLevels(std::vector<double> taus);

  /// tau_j = r^(j-1), j = 1..J.
  static FractionLevels geometric(int J, double r);

  int size() const noexcept { return static_cast<int>(taus_.size()); }
  double operator[](int j) const { return taus_[static_cast<std::size_t>(j)]; }
  std::span<const double> taus() const noexcept { return taus_; }
  bool geometric() const noexcept { return ratio_ > 0.0; }
  /// Common ratio r; only meaningful when geometric().
  double ratio() const noexcept { return ratio_; }

private:
  FractionLevels(std::vector<double> taus, double ratio);

  std::vector<double> taus_;
  double ratio_ = 0.0;
};

/// K_z(u) = int_1^u v^(z-1) dv = (u^z - 1)/z, log(u) at z = 0.
double k_fn(double z, double u);

/// dK_z(u)/dz = int_1^u v^(z-1) log(v) dv.
double k_fn_prime(double z, double u);

/// Inverse of u -> K_z(u): (1 + z t)^(1/z), e^t at z = 0. Requires 1 + z t > 0.
double k_fn_inverse(double z, double t);

/// Second-order remainder (q(t alpha) - q(alpha)) / a(q(alpha)) - K_gamma(1/t) of the
/// first-order extreme-value expansion. `aux` is the auxiliary scale a(y).
double remainder_b(const std::function<double(double)>& true_quantile,
                   const std::function<double(double)>& aux, double gamma, double t, double alpha);

/// Sigma_{jj'} = (tau_j tau_j')^(-gamma) / tau_{min(j,j')} (0-based j, j' map to 1-based levels).
Eigen::MatrixXd sigma_matrix(double gamma, const FractionLevels& levels);

/// Sigma with gamma replaced by min(gamma, 0).
Eigen::MatrixXd sigma_tilde_matrix(double gamma, const FractionLevels& levels);

/// V_{jj'} = 1 / tau_{min(j,j')}; covariance shape of the kernel tail-count vector.
Eigen::MatrixXd tail_count_covariance(const FractionLevels& levels);

/// 3 x J matrix A mapping the quantile fluctuations xi to the linearised errors of
/// (gamma_hat, a_hat / a - 1, (q_hat - q) / a), before the 1 / K_gamma(r) factor.
/// `weights` holds pi_1..pi_{J-2}; levels must be geometric.
Eigen::MatrixXd rp_linearization(double gamma, const FractionLevels& levels,
                                 std::span<const double> weights);

/// Asymptotic covariance S = ||K||^2 / (g(x) K_gamma(r)^2) A Sigma A^t of the
/// refined Pickands triple (gamma_hat, a_hat, q_hat(alpha)).
Eigen::Matrix3d rp_covariance(double gamma, const FractionLevels& levels,
                              std::span<const double> weights, double kernel_l2, double g_at_x);

/// c = (1, -(gamma ^ 0), (gamma ^ 0)^2) where ^ is min.
Eigen::Vector3d extrapolation_variance_factor(double gamma);

/// c^t S c: asymptotic variance of the extrapolated quantile after normalisation.
double extrapolation_asymptotic_variance(double gamma, const FractionLevels& levels,
                                         std::span<const double> weights, double kernel_l2,
                                         double g_at_x);

}  // namespace evqr

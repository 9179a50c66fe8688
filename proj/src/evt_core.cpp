#include "evqr/evt_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "evqr/errors.hpp"

namespace evqr {

namespace {

// Below this |z log u| the closed forms lose digits to cancellation.
constexpr double kSeriesSwitch = 1e-4;

void check_positive(double u, const char* what) {
  if (!(u > 0.0) || !std::isfinite(u)) {
    throw DomainError(fmt::format("{} requires u > 0, got {}", what, u));
  }
}

}  // namespace

FractionLevels::FractionLevels(std::vector<double> taus) : FractionLevels(std::move(taus), 0.0) {}

FractionLevels::FractionLevels(std::vector<double> taus, double ratio)
    : taus_(std::move(taus)), ratio_(ratio) {
  if (taus_.size() < 3) throw InvalidArgument("at least three fraction levels are required");
  if (!(taus_.front() <= 1.0)) throw InvalidArgument("tau_1 must not exceed 1");
  if (!(taus_.back() > 0.0)) throw InvalidArgument("fraction levels must be positive");
  for (std::size_t j = 1; j < taus_.size(); ++j) {
    if (!(taus_[j] < taus_[j - 1])) {
      throw InvalidArgument("fraction levels must be strictly decreasing");
    }
  }
}

FractionLevels FractionLevels::geometric(int J, double r) {
  if (J < 3) throw InvalidArgument(fmt::format("J must be >= 3, got {}", J));
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument(fmt::format("r must lie in (0, 1), got {}", r));
  std::vector<double> taus(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) taus[static_cast<std::size_t>(j)] = std::pow(r, j);
  return FractionLevels(std::move(taus), r);
}

double k_fn(double z, double u) {
  check_positive(u, "K_z(u)");
  const double log_u = std::log(u);
  const double w = z * log_u;
  if (std::abs(w) < kSeriesSwitch) {
    // (e^w - 1)/w = 1 + w/2 + w^2/6 + w^3/24 + ...
    return log_u * (1.0 + w * (1.0 / 2.0 + w * (1.0 / 6.0 + w / 24.0)));
  }
  return std::expm1(w) / z;
}

double k_fn_prime(double z, double u) {
  check_positive(u, "K'_z(u)");
  const double log_u = std::log(u);
  const double w = z * log_u;
  if (std::abs(w) < kSeriesSwitch) {
    // d/dw (e^w - 1)/w = 1/2 + w/3 + w^2/8 + w^3/30 + ...
    return log_u * log_u * (1.0 / 2.0 + w * (1.0 / 3.0 + w * (1.0 / 8.0 + w / 30.0)));
  }
  if (std::abs(w) < 1.0) {
    // The closed form below cancels for moderate w; sum
    // (w e^w - e^w + 1) / w^2 = sum_k (k + 1) w^k / (k + 2)! to convergence instead.
    double p = 0.5, sum = 0.0;
    for (int k = 0; k < 40; ++k) {
      const double term = (k + 1) * p;
      sum += term;
      if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
      p *= w / (k + 3);
    }
    return log_u * log_u * sum;
  }
  const double uz = std::exp(w);
  return uz * log_u / z - std::expm1(w) / (z * z);
}

double k_fn_inverse(double z, double t) {
  const double base = 1.0 + z * t;
  if (!(base > 0.0)) {
    throw DomainError(fmt::format("K_z^(-1)(t) requires 1 + z t > 0, got z = {}, t = {}", z, t));
  }
  if (std::abs(z * t) < kSeriesSwitch) {
    if (z == 0.0) return std::exp(t);
    // log(1 + zt)/z = t (1 - zt/2 + (zt)^2/3 - (zt)^3/4)
    const double v = z * t;
    return std::exp(t * (1.0 - v * (1.0 / 2.0 - v * (1.0 / 3.0 - v / 4.0))));
  }
  return std::exp(std::log1p(z * t) / z);
}

double remainder_b(const std::function<double(double)>& true_quantile,
                   const std::function<double(double)>& aux, double gamma, double t, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError(fmt::format("alpha must lie in (0, 1), got {}", alpha));
  }
  if (!(t > 0.0) || !(t * alpha < 1.0)) {
    throw DomainError(fmt::format("t alpha must lie in (0, 1), got t = {}", t));
  }
  const double q_alpha = true_quantile(alpha);
  return (true_quantile(t * alpha) - q_alpha) / aux(q_alpha) - k_fn(gamma, 1.0 / t);
}

Eigen::MatrixXd sigma_matrix(double gamma, const FractionLevels& levels) {
  const int J = levels.size();
  Eigen::MatrixXd sigma(J, J);
  for (int j = 0; j < J; ++j) {
    for (int jp = 0; jp < J; ++jp) {
      // Levels decrease with the index, so tau_{min(j,j')} is the larger one.
      const double tau_min_index = levels[std::min(j, jp)];
      sigma(j, jp) = std::pow(levels[j] * levels[jp], -gamma) / tau_min_index;
    }
  }
  return sigma;
}

Eigen::MatrixXd sigma_tilde_matrix(double gamma, const FractionLevels& levels) {
  return sigma_matrix(std::min(gamma, 0.0), levels);
}

Eigen::MatrixXd tail_count_covariance(const FractionLevels& levels) {
  return sigma_matrix(0.0, levels);
}

Eigen::MatrixXd rp_linearization(double gamma, const FractionLevels& levels,
                                 std::span<const double> weights) {
  if (!levels.geometric()) {
    throw InvalidArgument("the refined Pickands covariance requires geometric levels");
  }
  const int J = levels.size();
  if (static_cast<int>(weights.size()) != J - 2) {
    throw InvalidArgument(fmt::format("expected {} weights for J = {}, got {}", J - 2, J,
                                      weights.size()));
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument(fmt::format("weights must sum to 1, got {:.17g}", total));
  }
  // pi_j for 1-based j, zero outside 1..J-2.
  auto pi = [&](int j) { return (j >= 1 && j <= J - 2) ? weights[static_cast<std::size_t>(j - 1)] : 0.0; };

  const double r = levels.ratio();
  const double log_r = std::log(r);
  const double r_neg = std::pow(r, -gamma);
  const double k_r = k_fn(gamma, r);
  const double kp_r = k_fn_prime(gamma, r);

  double mean_index = 0.0;
  for (int j = 1; j <= J; ++j) mean_index += j * pi(j);
  const double shift = mean_index - kp_r / (log_r * k_r);

  const double b0_gamma = 1.0 / log_r;
  const double b1_gamma = -(1.0 + r_neg) / log_r;
  const double b2_gamma = r_neg / log_r;
  const double b0_a = 1.0 + shift;
  const double b1_a = -r_neg - (r_neg + 1.0) * shift;
  const double b2_a = r_neg * shift;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, J);
  for (int j = 1; j <= J; ++j) {
    const double rg = std::pow(r, gamma * j);
    a(0, j - 1) = rg * (b0_gamma * pi(j) + b1_gamma * pi(j - 1) + b2_gamma * pi(j - 2));
    a(1, j - 1) = rg * (b0_a * pi(j) + b1_a * pi(j - 1) + b2_a * pi(j - 2));
  }
  a(2, 0) = k_r;
  return a;
}

Eigen::Matrix3d rp_covariance(double gamma, const FractionLevels& levels,
                              std::span<const double> weights, double kernel_l2, double g_at_x) {
  if (!(kernel_l2 > 0.0) || !(g_at_x > 0.0)) {
    throw InvalidArgument("kernel L2 norm and design density must be positive");
  }
  const Eigen::MatrixXd a = rp_linearization(gamma, levels, weights);
  const double k_r = k_fn(gamma, levels.ratio());
  const Eigen::MatrixXd s =
      (kernel_l2 / (g_at_x * k_r * k_r)) * (a * sigma_matrix(gamma, levels) * a.transpose());
  // Symmetrise away rounding so callers can rely on S == S^t.
  return 0.5 * (s + s.transpose());
}

Eigen::Vector3d extrapolation_variance_factor(double gamma) {
  const double g = std::min(gamma, 0.0);
  return {1.0, -g, g * g};
}

double extrapolation_asymptotic_variance(double gamma, const FractionLevels& levels,
                                         std::span<const double> weights, double kernel_l2,
                                         double g_at_x) {
  const Eigen::Vector3d c = extrapolation_variance_factor(gamma);
  return c.dot(rp_covariance(gamma, levels, weights, kernel_l2, g_at_x) * c);
}

}  // namespace evqr

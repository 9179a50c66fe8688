#include "evqr/pickands.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "evqr/errors.hpp"

namespace evqr {

namespace {

// Fixes the last weight so the vector sums to one up to a single rounding.
std::vector<double> close_to_one(std::vector<double> w) {
  const double head = std::accumulate(w.begin(), w.end() - 1, 0.0);
  w.back() = 1.0 - head;
  return w;
}

void check_J(int J) {
  if (J < 3) throw InvalidArgument(fmt::format("J must be >= 3, got {}", J));
}

std::vector<double> read_quantiles(const QuantileOracle& quantile, const RPConfig& cfg) {
  std::vector<double> q(static_cast<std::size_t>(cfg.J));
  double tau = 1.0;
  for (int j = 0; j < cfg.J; ++j) {
    q[static_cast<std::size_t>(j)] = quantile(tau * cfg.alpha);
    tau *= cfg.r;
  }
  return q;
}

// a_hat from already-read quantiles; nullopt when every spacing used is zero.
std::optional<double> try_scale(const std::vector<double>& q, const RPConfig& cfg, double gamma_hat) {
  double scale = 0.0;
  bool any_spacing = false;
  for (std::size_t j = 0; j + 2 < q.size(); ++j) {
    const double spacing = q[j] - q[j + 1];
    any_spacing = any_spacing || spacing != 0.0;
    scale += cfg.weights[j] * std::pow(cfg.r, gamma_hat * static_cast<double>(j + 1)) * spacing;
  }
  if (!any_spacing) return std::nullopt;
  return scale / k_fn(gamma_hat, cfg.r);
}

double scale_from_quantiles(const std::vector<double>& q, const RPConfig& cfg, double gamma_hat) {
  const auto scale = try_scale(q, cfg, gamma_hat);
  if (!scale) throw DegenerateSpacingError(0, "all quantile spacings are zero");
  return *scale;
}

}  // namespace

std::vector<double> rp1_weights(int J) {
  check_J(J);
  return close_to_one(std::vector<double>(static_cast<std::size_t>(J - 2), 1.0 / (J - 2)));
}

std::vector<double> rp2_weights(int J) {
  check_J(J);
  std::vector<double> w(static_cast<std::size_t>(J - 2));
  const double denom = static_cast<double>(J - 1) * static_cast<double>(J - 2);
  for (int j = 1; j <= J - 2; ++j) w[static_cast<std::size_t>(j - 1)] = 2.0 * j / denom;
  return close_to_one(std::move(w));
}

RPConfig RPConfig::rp1(double alpha, int J, double r) { return {alpha, J, r, rp1_weights(J)}; }

RPConfig RPConfig::rp2(double alpha, int J, double r) { return {alpha, J, r, rp2_weights(J)}; }

void RPConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgument(fmt::format("alpha must lie in (0, 1), got {}", alpha));
  }
  check_J(J);
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument(fmt::format("r must lie in (0, 1), got {}", r));
  if (static_cast<int>(weights.size()) != J - 2) {
    throw InvalidArgument(fmt::format("expected {} weights for J = {}, got {}", J - 2, J,
                                      weights.size()));
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument(fmt::format("weights must sum to 1, got {:.17g}", total));
  }
}

RPEstimate rp_gamma(const QuantileOracle& quantile, const RPConfig& cfg) {
  cfg.validate();
  RPEstimate est;
  est.alpha = cfg.alpha;
  est.quantiles = read_quantiles(quantile, cfg);
  est.anchor_quantile = est.quantiles.front();
  const auto J = static_cast<std::size_t>(cfg.J);
  est.quantile_spacings.resize(J - 1);
  for (std::size_t j = 0; j + 1 < J; ++j) {
    est.quantile_spacings[j] = est.quantiles[j] - est.quantiles[j + 1];
  }

  double acc = 0.0;
  for (std::size_t j = 0; j + 2 < J; ++j) {
    const double num = est.quantile_spacings[j];
    const double den = est.quantile_spacings[j + 1];
    const double ratio = num / den;
    if (num == 0.0 || den == 0.0 || !std::isfinite(ratio) || !(ratio > 0.0)) {
      est.degenerate = true;
      est.collapsed_spacing = (num == 0.0 || !std::isfinite(num)) ? j : j + 1;
      return est;
    }
    acc += cfg.weights[j] * std::log(ratio);
  }
  est.gamma_hat = acc / std::log(cfg.r);
  est.a_hat = scale_from_quantiles(est.quantiles, cfg, est.gamma_hat);
  return est;
}

RPEstimate rp_gamma(const WeightedStepSurvival& survival, const RPConfig& cfg) {
  return rp_gamma([&](double level) { return survival.quantile(level); }, cfg);
}

RPEstimate rp_gamma(const Sample& s, const KernelSpec& k, double h, std::span<const double> x,
                    const RPConfig& cfg) {
  return rp_gamma(WeightedStepSurvival(s, local_window(s, k, h, x)), cfg);
}

RPEstimate rp_gamma(const Sample& s, const KernelSpec& k, double h, double x, const RPConfig& cfg) {
  return rp_gamma(s, k, h, std::span<const double>(&x, 1), cfg);
}

double rp_scale(const QuantileOracle& quantile, const RPConfig& cfg, double gamma_hat) {
  cfg.validate();
  if (!std::isfinite(gamma_hat)) throw InvalidArgument("gamma_hat must be finite");
  return scale_from_quantiles(read_quantiles(quantile, cfg), cfg, gamma_hat);
}

double rp_scale(const Sample& s, const KernelSpec& k, double h, double x, const RPConfig& cfg,
                double gamma_hat) {
  const WeightedStepSurvival survival(s, local_window(s, k, h, x));
  return rp_scale([&](double level) { return survival.quantile(level); }, cfg, gamma_hat);
}

double extrapolate(double anchor_quantile, double gamma_hat, double a_hat, double alpha,
                   double beta) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError(fmt::format("alpha must lie in (0, 1), got {}", alpha));
  }
  if (!(beta > 0.0) || beta > alpha) {
    throw DomainError(fmt::format("extrapolation order must satisfy 0 < beta <= alpha = {}, got {}",
                                  alpha, beta));
  }
  if (beta == alpha) return anchor_quantile;
  return anchor_quantile + k_fn(gamma_hat, alpha / beta) * a_hat;
}

double extrapolate(const RPEstimate& anchor, double beta) {
  if (anchor.degenerate) {
    throw DegenerateSpacingError(anchor.collapsed_spacing.value_or(0),
                                 "cannot extrapolate from a degenerate refined Pickands estimate");
  }
  return extrapolate(anchor.anchor_quantile, anchor.gamma_hat, anchor.a_hat, anchor.alpha, beta);
}

}  // namespace evqr

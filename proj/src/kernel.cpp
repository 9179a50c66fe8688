#include "evqr/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "evqr/errors.hpp"

namespace evqr {

namespace {

double integrate_unit_interval(const std::function<double(double)>& f) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  // Split at 0 so kinks at the origin (e.g. triangular kernels) stay on a node.
  return gauss_kronrod<double, 61>::integrate(f, -1.0, 0.0, 20, 1e-14, &err) +
         gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 20, 1e-14, &err);
}

}  // namespace

KernelSpec::KernelSpec(std::string name, int dim, Profile density, double l2, double sup)
    : name_(std::move(name)), dim_(dim), density_(std::move(density)), l2_norm_sq_(l2),
      sup_norm_(sup) {}

KernelSpec KernelSpec::univariate(std::string name, std::function<double(double)> density) {
  auto clipped = [density](double t) { return std::abs(t) > 1.0 ? 0.0 : density(t); };
  const double mass = integrate_unit_interval(clipped);
  if (std::abs(mass - 1.0) > 1e-8) {
    throw InvalidArgument(fmt::format("kernel '{}' integrates to {:.12g}, not 1", name, mass));
  }
  const double l2 = integrate_unit_interval([&](double t) {
    const double v = clipped(t);
    return v * v;
  });
  // Sup norm on a dense grid; exact for kernels peaking at a grid node.
  double sup = 0.0;
  constexpr int kGrid = 4000;
  for (int i = 0; i <= kGrid; ++i) {
    const double t = -1.0 + 2.0 * i / kGrid;
    const double v = clipped(t);
    if (v < 0.0) throw InvalidArgument(fmt::format("kernel '{}' is negative at {}", name, t));
    sup = std::max(sup, v);
  }
  KernelSpec::Profile profile = [clipped](std::span<const double> u) { return clipped(u[0]); };
  return KernelSpec(std::move(name), 1, std::move(profile), l2, sup);
}

KernelSpec KernelSpec::multivariate(std::string name, int dim, Profile density, double l2_norm_sq,
                                    double sup_norm) {
  if (dim < 1) throw InvalidArgument("kernel dimension must be >= 1");
  if (!(l2_norm_sq > 0.0) || !std::isfinite(l2_norm_sq) || !(sup_norm > 0.0)) {
    throw InvalidArgument(fmt::format("kernel '{}' constants must be positive and finite", name));
  }
  Profile clipped = [density = std::move(density)](std::span<const double> u) {
    double norm_sq = 0.0;
    for (double v : u) norm_sq += v * v;
    return norm_sq > 1.0 ? 0.0 : density(u);
  };
  return KernelSpec(std::move(name), dim, std::move(clipped), l2_norm_sq, sup_norm);
}

double KernelSpec::evaluate(std::span<const double> u) const {
  if (static_cast<int>(u.size()) != dim_) {
    throw InvalidArgument(
        fmt::format("kernel '{}' has dimension {}, got a {}-vector", name_, dim_, u.size()));
  }
  return density_(u);
}

double KernelSpec::evaluate(double u) const { return evaluate(std::span<const double>(&u, 1)); }

KernelSpec triweight() {
  KernelSpec::Profile profile = [](std::span<const double> u) {
    const double t2 = u[0] * u[0];
    if (t2 > 1.0) return 0.0;
    const double s = 1.0 - t2;
    return 35.0 / 32.0 * s * s * s;
  };
  // int (35/32)^2 (1 - t^2)^6 dt over [-1, 1] = 350/429.
  return KernelSpec::multivariate("triweight", 1, std::move(profile), 350.0 / 429.0, 35.0 / 32.0);
}

KernelSpec radial_triweight(int dim) {
  if (dim < 1) throw InvalidArgument(fmt::format("kernel dimension must be >= 1, got {}", dim));
  if (dim == 1) return triweight();
  const double half = dim / 2.0;
  // int_{|t|<=1} (1 - |t|^2)^m dt = pi^(p/2) Gamma(m + 1) / Gamma(p/2 + m + 1)
  const double log_ball = half * std::log(std::numbers::pi);
  const double c = std::exp(std::lgamma(half + 4.0) - log_ball) / 6.0;
  const double l2 = c * c * std::exp(log_ball + std::lgamma(7.0) - std::lgamma(half + 7.0));
  KernelSpec::Profile profile = [c](std::span<const double> u) {
    double t2 = 0.0;
    for (double v : u) t2 += v * v;
    if (t2 > 1.0) return 0.0;
    const double s = 1.0 - t2;
    return c * s * s * s;
  };
  return KernelSpec::multivariate(fmt::format("triweight{}", dim), dim, std::move(profile), l2, c);
}

double scaled_eval(const KernelSpec& k, double h, std::span<const double> u) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw InvalidArgument(fmt::format("bandwidth must be positive, got {}", h));
  }
  std::vector<double> scaled(u.begin(), u.end());
  for (double& v : scaled) v /= h;
  return k.evaluate(scaled) / std::pow(h, static_cast<double>(k.dim()));
}

double scaled_eval(const KernelSpec& k, double h, double u) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw InvalidArgument(fmt::format("bandwidth must be positive, got {}", h));
  }
  return k.evaluate(u / h) / std::pow(h, static_cast<double>(k.dim()));
}

}  // namespace evqr

#pragma once

// Independent reference implementations used by the tests. They favour the
// most literal reading of each formula over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

namespace oracle {

inline double integrate(const std::function<double(double)>& f, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  if (a == b) return 0.0;
  double err = 0.0;
  return gauss_kronrod<double, 61>::integrate(f, a, b, 8, 1e-14, &err);
}

// K_z(u) = int_1^u v^(z-1) dv, integrated in log coordinates (v = e^s).
inline double k_fn(double z, double u) {
  return integrate([z](double s) { return std::exp(z * s); }, 0.0, std::log(u));
}

// K'_z(u) = int_1^u v^(z-1) log v dv.
inline double k_fn_prime(double z, double u) {
  return integrate([z](double s) { return s * std::exp(z * s); }, 0.0, std::log(u));
}

inline double triweight(double t) {
  if (std::abs(t) > 1.0) return 0.0;
  const double s = 1.0 - t * t;
  return 35.0 / 32.0 * s * s * s;
}

struct Obs {
  double x;
  double y;
};

// sum_i K_h(x - X_i) 1{Y_i > y} / sum_i K_h(x - X_i), straight from the definition.
inline double survival(const std::vector<Obs>& data, double h, double x, double y) {
  double num = 0.0, den = 0.0;
  for (const auto& o : data) {
    const double w = triweight((x - o.x) / h) / h;
    den += w;
    if (o.y > y) num += w;
  }
  return num / den;
}

// Smallest in-window response t with survival(t) <= alpha, by scanning every candidate.
inline double quantile(const std::vector<Obs>& data, double h, double x, double alpha) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& o : data) {
    if (triweight((x - o.x) / h) <= 0.0) continue;
    if (survival(data, h, x, o.y) <= alpha) best = std::min(best, o.y);
  }
  return best;
}

// Leave-one-out CV criterion, O(n^2) per term.
inline double cv_criterion(const std::vector<Obs>& data, double h) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<Obs> rest;
    double mass = 0.0;
    for (std::size_t m = 0; m < data.size(); ++m) {
      if (m == i) continue;
      rest.push_back(data[m]);
      mass += triweight((data[i].x - data[m].x) / h);
    }
    if (!(mass > 0.0)) continue;
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double ind = data[i].y >= data[j].y ? 1.0 : 0.0;
      const double d = ind - survival(rest, h, data[i].x, data[j].y);
      total += d * d;
    }
  }
  return total;
}

inline double sample_sd(const std::vector<double>& v) {
  double mean = 0.0;
  for (double e : v) mean += e;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double e : v) ss += (e - mean) * (e - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct WindowPick {
  std::size_t start = 0;
  double score = 0.0;
};

// Every window of `w` consecutive entries, all present; first minimum wins.
inline std::optional<WindowPick> best_window(const std::vector<std::optional<double>>& v,
                                             std::size_t w) {
  std::optional<WindowPick> best;
  for (std::size_t s = 0; s + w <= v.size(); ++s) {
    std::vector<double> vals;
    for (std::size_t i = s; i < s + w; ++i) {
      if (v[i]) vals.push_back(*v[i]);
    }
    if (vals.size() != w) continue;
    const double sd = sample_sd(vals);
    if (!best || sd < best->score) best = WindowPick{s, sd};
  }
  return best;
}

// Unweighted GP log-likelihood (mean over exceedances).
inline double gp_loglik(const std::vector<double>& z, double sigma, double gamma) {
  double acc = 0.0;
  for (double v : z) {
    if (gamma == 0.0) {
      acc += -std::log(sigma) - v / sigma;
    } else {
      const double arg = 1.0 + gamma * v / sigma;
      if (!(arg > 0.0)) return -std::numeric_limits<double>::infinity();
      acc += -std::log(sigma) - (1.0 / gamma + 1.0) * std::log(arg);
    }
  }
  return acc / static_cast<double>(z.size());
}

// GP MLE by profiling: for each gamma the best sigma by Brent, then Brent over gamma.
inline double gp_profile_max(const std::vector<double>& z) {
  const double z_max = *std::max_element(z.begin(), z.end());
  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= static_cast<double>(z.size());
  auto profile = [&](double gamma) {
    // log sigma range respecting the support when gamma < 0
    double lo = std::log(mean) - 8.0;
    if (gamma < 0.0) lo = std::max(lo, std::log(-gamma * z_max) + 1e-12);
    const double hi = std::log(mean) + 8.0;
    auto neg = [&](double ls) {
      const double ll = gp_loglik(z, std::exp(ls), gamma);
      return std::isfinite(ll) ? -ll : 1e300;
    };
    const auto r = boost::math::tools::brent_find_minima(neg, lo, hi, 52);
    return r.second;
  };
  const auto r = boost::math::tools::brent_find_minima(profile, -0.99, 2.0, 52);
  return -r.second;
}

}  // namespace oracle

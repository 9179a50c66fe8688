#pragma once

// Derivative-free simplex minimiser shared by the likelihood fits.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace evqr::detail {

struct SimplexResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Minimises f starting from `start` with per-coordinate initial steps.
/// Infinite values are treated as rejected points. Converges when both the
/// spread of function values and the simplex extent fall below `rel_tol`
/// relative to their scale.
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> start, const std::vector<double>& steps,
                                 double rel_tol, int max_iterations) {
  const std::size_t n = start.size();
  std::vector<std::vector<double>> pts(n + 1, start);
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += steps[i];
  for (std::size_t i = 0; i <= n; ++i) vals[i] = f(pts[i]);

  SimplexResult out;
  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::vector<std::vector<double>> p2(n + 1);
    std::vector<double> v2(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      p2[i] = pts[order[i]];
      v2[i] = vals[order[i]];
    }
    pts.swap(p2);
    vals.swap(v2);
  };
  auto affine = [&](const std::vector<double>& from, const std::vector<double>& to, double t) {
    std::vector<double> p(n);
    for (std::size_t d = 0; d < n; ++d) p[d] = from[d] + t * (to[d] - from[d]);
    return p;
  };

  for (out.iterations = 0; out.iterations < max_iterations; ++out.iterations) {
    sort_simplex();
    const double f_best = vals.front();
    const double f_worst = vals.back();
    double extent = 0.0;
    double scale = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t d = 0; d < n; ++d) {
        extent = std::max(extent, std::abs(pts[i][d] - pts[0][d]));
        scale = std::max(scale, std::abs(pts[0][d]));
      }
    }
    if (std::isfinite(f_worst) && f_worst - f_best <= rel_tol * (std::abs(f_best) + rel_tol) &&
        extent <= rel_tol * (1.0 + scale)) {
      out.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < n; ++d) centroid[d] += pts[i][d] / static_cast<double>(n);
    }
    const auto reflected = affine(centroid, pts[n], -1.0);
    const double f_reflected = f(reflected);
    if (f_reflected < vals[0]) {
      const auto expanded = affine(centroid, pts[n], -2.0);
      const double f_expanded = f(expanded);
      if (f_expanded < f_reflected) {
        pts[n] = expanded;
        vals[n] = f_expanded;
      } else {
        pts[n] = reflected;
        vals[n] = f_reflected;
      }
      continue;
    }
    if (f_reflected < vals[n - 1]) {
      pts[n] = reflected;
      vals[n] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < vals[n];
    const auto contracted = outside ? affine(centroid, reflected, 0.5) : affine(centroid, pts[n], 0.5);
    const double f_contracted = f(contracted);
    if (f_contracted < (outside ? f_reflected : vals[n])) {
      pts[n] = contracted;
      vals[n] = f_contracted;
      continue;
    }
    for (std::size_t i = 1; i <= n; ++i) {
      pts[i] = affine(pts[0], pts[i], 0.5);
      vals[i] = f(pts[i]);
    }
  }
  sort_simplex();
  out.x = pts.front();
  out.value = vals.front();
  return out;
}

}  // namespace evqr::detail

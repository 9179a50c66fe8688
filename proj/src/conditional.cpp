#include "evqr/conditional.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "evqr/errors.hpp"

namespace evqr {

Sample::Sample(int dim, std::vector<double> xs_row_major, std::vector<double> ys)
    : dim_(dim), xs_(std::move(xs_row_major)), ys_(std::move(ys)) {
  if (dim_ < 1) throw InvalidArgument("covariate dimension must be >= 1");
  if (ys_.empty()) throw InvalidArgument("sample must contain at least one observation");
  if (xs_.size() != ys_.size() * static_cast<std::size_t>(dim_)) {
    throw InvalidArgument(fmt::format("sample has {} responses but {} covariate values for p = {}",
                                      ys_.size(), xs_.size(), dim_));
  }
}

Sample Sample::univariate(std::vector<double> xs, std::vector<double> ys) {
  return Sample(1, std::move(xs), std::move(ys));
}

LocalWindow local_window(const Sample& s, const KernelSpec& k, double h,
                         std::span<const double> x, std::size_t exclude) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw InvalidArgument(fmt::format("bandwidth must be positive, got {}", h));
  }
  const int p = s.dim();
  if (static_cast<int>(x.size()) != p || k.dim() != p) {
    throw InvalidArgument(fmt::format("query point of dimension {} for a {}-dimensional sample",
                                      x.size(), p));
  }
  LocalWindow w;
  w.x.assign(x.begin(), x.end());
  w.h = h;
  const double h_sq = h * h;
  const double scale = 1.0 / std::pow(h, static_cast<double>(p));
  std::vector<double> u(static_cast<std::size_t>(p));
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i == exclude) continue;
    const auto xi = s.x(i);
    double dist_sq = 0.0;
    for (int d = 0; d < p; ++d) {
      const double diff = x[d] - xi[d];
      dist_sq += diff * diff;
    }
    if (dist_sq > h_sq) continue;
    for (int d = 0; d < p; ++d) u[d] = (x[d] - xi[d]) / h;
    const double weight = k.evaluate(u) * scale;
    w.indices.push_back(i);
    w.weights.push_back(weight);
    w.total_weight += weight;
  }
  w.n_star = w.indices.size();
  return w;
}

LocalWindow local_window(const Sample& s, const KernelSpec& k, double h, double x) {
  return local_window(s, k, h, std::span<const double>(&x, 1));
}

WeightedStepSurvival::WeightedStepSurvival(std::vector<std::pair<double, double>> points) {
  std::erase_if(points, [](const auto& pw) { return !(pw.second > 0.0); });
  if (points.empty()) throw EmptyWindowError("no observation with positive kernel weight");
  std::sort(points.begin(), points.end());

  std::vector<double> mass;
  for (const auto& [y, w] : points) {
    if (!values_.empty() && values_.back() == y) {
      mass.back() += w;
    } else {
      values_.push_back(y);
      mass.push_back(w);
    }
  }
  // Suffix sums from the top keep exceed_ monotone with an exact zero at the end.
  const std::size_t m = values_.size();
  std::vector<double> above(m, 0.0);
  double acc = 0.0;
  for (std::size_t i = m; i-- > 0;) {
    above[i] = acc;
    acc += mass[i];
  }
  total_ = acc;
  exceed_.resize(m);
  for (std::size_t i = 0; i < m; ++i) exceed_[i] = above[i] / total_;
}

WeightedStepSurvival::WeightedStepSurvival(const Sample& s, const LocalWindow& window)
    : WeightedStepSurvival([&] {
        std::vector<std::pair<double, double>> pts;
        pts.reserve(window.indices.size());
        for (std::size_t j = 0; j < window.indices.size(); ++j) {
          pts.emplace_back(s.y(window.indices[j]), window.weights[j]);
        }
        return pts;
      }()) {}

double WeightedStepSurvival::survival(double y) const {
  const auto it = std::upper_bound(values_.begin(), values_.end(), y);
  if (it == values_.begin()) return 1.0;
  return exceed_[static_cast<std::size_t>(it - values_.begin()) - 1];
}

double WeightedStepSurvival::quantile(double alpha) const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError(fmt::format("quantile level must lie in (0, 1), got {}", alpha));
  }
  const auto it = std::partition_point(exceed_.begin(), exceed_.end(),
                                       [alpha](double e) { return e > alpha; });
  return values_[static_cast<std::size_t>(it - exceed_.begin())];
}

bool WeightedStepSurvival::saturated(double alpha) const {
  return quantile(alpha) == values_.back();
}

double density_estimate(const Sample& s, const KernelSpec& k, double h, std::span<const double> x) {
  return local_window(s, k, h, x).total_weight / static_cast<double>(s.size());
}

double density_estimate(const Sample& s, const KernelSpec& k, double h, double x) {
  return density_estimate(s, k, h, std::span<const double>(&x, 1));
}

double survival_estimate(const Sample& s, const KernelSpec& k, double h, std::span<const double> x,
                         double y) {
  return WeightedStepSurvival(s, local_window(s, k, h, x)).survival(y);
}

double survival_estimate(const Sample& s, const KernelSpec& k, double h, double x, double y) {
  return survival_estimate(s, k, h, std::span<const double>(&x, 1), y);
}

double quantile_estimate(const Sample& s, const KernelSpec& k, double h, std::span<const double> x,
                         double alpha) {
  return WeightedStepSurvival(s, local_window(s, k, h, x)).quantile(alpha);
}

double quantile_estimate(const Sample& s, const KernelSpec& k, double h, double x, double alpha) {
  return quantile_estimate(s, k, h, std::span<const double>(&x, 1), alpha);
}

}  // namespace evqr

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "evqr/kernel.hpp"

namespace evqr {

/// Paired observations (X_i, Y_i) with covariates stored row-major.
class Sample {
public:
  Sample() = default;
  Sample(int dim, std::vector<double> xs_row_major, std::vector<double> ys);

  static Sample univariate(std::vector<double> xs, std::vector<double> ys);

  std::size_t size() const noexcept { return ys_.size(); }
  int dim() const noexcept { return dim_; }
  std::span<const double> x(std::size_t i) const {
    return {xs_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  double y(std::size_t i) const { return ys_[i]; }
  const std::vector<double>& xs() const noexcept { return xs_; }
  const std::vector<double>& ys() const noexcept { return ys_; }

private:
  int dim_ = 1;
  std::vector<double> xs_;
  std::vector<double> ys_;
};

/// Observations in the closed ball B(x, h) and their weights K_h(x - X_i).
struct LocalWindow {
  std::vector<double> x;
  double h = 0.0;
  std::vector<std::size_t> indices;
  std::vector<double> weights;  // parallel to indices
  std::size_t n_star = 0;       // == indices.size()
  double total_weight = 0.0;    // == n * density_estimate
};

/// Collects B(x, h). Pass `exclude` to leave one observation out.
LocalWindow local_window(const Sample& s, const KernelSpec& k, double h,
                         std::span<const double> x, std::size_t exclude = static_cast<std::size_t>(-1));
LocalWindow local_window(const Sample& s, const KernelSpec& k, double h, double x);

/// Right-continuous step function y -> sum_i w_i 1{Y_i > y} / sum_i w_i over a
/// set of weighted responses. Tied responses are merged into one jump.
class WeightedStepSurvival {
public:
  /// (response, weight) pairs; non-positive weights are dropped. Throws
  /// EmptyWindowError when no positive weight remains.
  explicit WeightedStepSurvival(std::vector<std::pair<double, double>> points);
  WeightedStepSurvival(const Sample& s, const LocalWindow& window);

  double survival(double y) const;

  /// inf{t : survival(t) <= alpha}; always one of the jump points.
  double quantile(double alpha) const;

  /// True when quantile(alpha) is the largest response, i.e. the step
  /// function only drops to alpha at the top of the window.
  bool saturated(double alpha) const;

  std::span<const double> jumps() const noexcept { return values_; }
  double total_weight() const noexcept { return total_; }

private:
  std::vector<double> values_;  // distinct responses, ascending
  std::vector<double> exceed_;  // exceed_[i] = survival(values_[i]), nonincreasing, last = 0
  double total_ = 0.0;
};

/// (1/n) sum_i K_h(x - X_i). Zero for an empty window.
double density_estimate(const Sample& s, const KernelSpec& k, double h, std::span<const double> x);
double density_estimate(const Sample& s, const KernelSpec& k, double h, double x);

/// Kernel estimate of P(Y > y | X = x). Throws EmptyWindowError.
double survival_estimate(const Sample& s, const KernelSpec& k, double h, std::span<const double> x,
                         double y);
double survival_estimate(const Sample& s, const KernelSpec& k, double h, double x, double y);

/// Generalized inverse of survival_estimate at level alpha in (0, 1).
double quantile_estimate(const Sample& s, const KernelSpec& k, double h, std::span<const double> x,
                         double alpha);
double quantile_estimate(const Sample& s, const KernelSpec& k, double h, double x, double alpha);

}  // namespace evqr

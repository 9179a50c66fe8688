#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evqr/conditional.hpp"
#include "evqr/kernel.hpp"
#include "evqr/pickands.hpp"

namespace evqr {

/// Upper end of the default bandwidth grid: (X_(n) - X_(1)) / divisor.
enum class HMaxRule { Half, Quarter };

struct SelectionGrid {
  std::vector<double> h_values;  // strictly increasing, positive
  int window_h = 10;             // successive h values per stability window

  void validate() const;
};

/// max_i (X_(i+1) - X_(i)) for a univariate design.
double max_design_gap(const Sample& s);

/// `count` regularly spaced bandwidths from the largest design gap to the range
/// divided by 2 (Half) or 4 (Quarter).
std::vector<double> bandwidth_grid(const Sample& s, std::size_t count, HMaxRule rule = HMaxRule::Half);

/// `count` points between min(h_cv, h_yj - h_cv) and h_yj + 2 h_cv, floored at h_floor.
std::vector<double> refined_bandwidth_grid(double h_cv, double h_yj, double h_floor,
                                           std::size_t count = 50);

/// Leave-one-out criterion sum_i sum_j {1(Y_i >= Y_j) - F_{-i}(Y_j | X_i)}^2 at one h.
struct CvEvaluation {
  double value = 0.0;
  std::size_t used_pairs = 0;
  std::size_t skipped_pairs = 0;  // pairs whose leave-one-out window is empty
};
CvEvaluation cv_criterion(const Sample& s, const KernelSpec& k, double h);

struct CvSelection {
  double h = 0.0;
  std::vector<CvEvaluation> per_h;  // parallel to the grid; value NaN when excluded
};

/// Grid minimiser of the leave-one-out criterion. An h whose pairs are all
/// skipped is excluded; throws SelectionError when every h is excluded.
CvSelection cv_select(const Sample& s, const KernelSpec& k, std::span<const double> h_values,
                      unsigned threads = 1);
double cv_bandwidth(const Sample& s, const KernelSpec& k, const SelectionGrid& grid,
                    unsigned threads = 1);

/// h_cv (beta (1 - beta) / phi(Phi^-1(beta))^2)^(1/5).
double yu_jones_bandwidth(double h_cv, double beta);

struct KSelection {
  int k = 0;
  double score = 0.0;     // minimal window standard deviation
  double estimate = 0.0;  // estimate at the selected k
};

/// Slides a window of `window` successive k values over estimates for
/// k = first_k, first_k + 1, ...; nullopt marks a degenerate k and invalidates
/// every window containing it. Returns the first k of the window with the
/// smallest sample standard deviation (ties -> smaller k).
KSelection select_k_separate(std::span<const std::optional<double>> estimates, int first_k,
                             int window);
KSelection select_k_separate(const std::function<std::optional<double>(int)>& estimate,
                             int k_first, int k_last, int window);

/// Estimates over k = 1..n_star-1 at one bandwidth.
struct SurfaceRow {
  std::size_t n_star = 0;
  std::vector<std::optional<double>> estimates;  // index k - 1
};

struct EstimateSurface {
  std::vector<double> h_values;
  std::vector<SurfaceRow> rows;  // parallel to h_values
};

/// Materialises the (h, k) surface in parallel. estimate(h_index, k) is called for
/// k = 1..n_star(h_index)-1.
EstimateSurface build_surface(std::span<const double> h_values,
                              const std::function<std::size_t(std::size_t)>& n_star_of_h,
                              const std::function<std::optional<double>(std::size_t, int)>& estimate,
                              unsigned threads = 1);

struct HTrace {
  double h = 0.0;
  std::size_t n_star = 0;
  bool usable = false;
  int k = 0;
  double score = 0.0;
  double estimate = 0.0;
  std::string failure;
};

struct SelectionResult {
  double h_selected = 0.0;
  int k_selected = 0;
  double estimate = 0.0;
  double stability_score = 0.0;
  std::vector<HTrace> trace;
};

/// Window over k used at a bandwidth with n_star observations: floor(sqrt(n_star)), at least 2.
int k_window_for(std::size_t n_star);

/// Two-stage stability rule: k_xh per bandwidth by select_k_separate, then the
/// start of the window of `window_h` successive usable bandwidths whose k_xh
/// estimates have the smallest standard deviation.
SelectionResult select_hk_simultaneous(const EstimateSurface& surface, int window_h = 10);

/// Which estimator a selection surface tracks.
enum class SelectionTarget { RPQuantile, RPGamma, GPQuantile, GPGamma };

std::optional<SelectionTarget> parse_selection_target(const std::string& name);
std::string to_string(SelectionTarget target);

/// Estimate of `target` at x with bandwidth h and k in 1..n_star-1 (alpha = k / n_star
/// for the refined Pickands family, threshold Y_(n_star - k) for the GP benchmark).
/// nullopt when the estimator is degenerate for this (h, k).
std::optional<double> estimate_at(SelectionTarget target, const Sample& s, const KernelSpec& kern,
                                  double x, double h, int k, int J, double r,
                                  std::span<const double> weights, double beta);

/// Surface of estimate_at over the h grid.
EstimateSurface target_surface(SelectionTarget target, const Sample& s, const KernelSpec& kern,
                               double x, std::span<const double> h_values, int J, double r,
                               std::span<const double> weights, double beta, unsigned threads = 1);

}  // namespace evqr

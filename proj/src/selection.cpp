#include "evqr/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "evqr/errors.hpp"
#include "evqr/gp_benchmark.hpp"
#include "evqr/parallel.hpp"

namespace evqr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> sorted_design(const Sample& s) {
  if (s.dim() != 1) throw InvalidArgument("bandwidth grids are defined for univariate designs");
  std::vector<double> xs = s.xs();
  std::sort(xs.begin(), xs.end());
  return xs;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return out;
}

// Welford keeps identical inputs at exactly zero spread.
double sample_sd(std::span<const double> values) {
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  return n < 2 ? 0.0 : std::sqrt(std::max(0.0, m2 / static_cast<double>(n - 1)));
}

// Start offset of the minimal-sd window among windows made only of valid entries.
std::optional<std::pair<std::size_t, double>> best_window(std::span<const std::optional<double>> values,
                                                          std::size_t window) {
  std::optional<std::pair<std::size_t, double>> best;
  std::vector<double> buf(window);
  for (std::size_t start = 0; start + window <= values.size(); ++start) {
    bool valid = true;
    for (std::size_t j = 0; j < window && valid; ++j) {
      if (!values[start + j]) {
        valid = false;
      } else {
        buf[j] = *values[start + j];
      }
    }
    if (!valid) continue;
    const double sd = sample_sd(buf);
    if (!best || sd < best->second) best = std::pair{start, sd};
  }
  return best;
}

}  // namespace

void SelectionGrid::validate() const {
  if (h_values.empty()) throw InvalidArgument("bandwidth grid is empty");
  for (std::size_t i = 0; i < h_values.size(); ++i) {
    if (!(h_values[i] > 0.0)) throw InvalidArgument("bandwidths must be positive");
    if (i > 0 && !(h_values[i] > h_values[i - 1])) {
      throw InvalidArgument("bandwidth grid must be strictly increasing");
    }
  }
  if (window_h < 2) throw InvalidArgument("the h window must hold at least two values");
}

double max_design_gap(const Sample& s) {
  const auto xs = sorted_design(s);
  double gap = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) gap = std::max(gap, xs[i] - xs[i - 1]);
  return gap;
}

std::vector<double> bandwidth_grid(const Sample& s, std::size_t count, HMaxRule rule) {
  if (count == 0) throw InvalidArgument("bandwidth grid needs at least one point");
  const auto xs = sorted_design(s);
  const double h_min = max_design_gap(s);
  const double h_max = (xs.back() - xs.front()) / (rule == HMaxRule::Half ? 2.0 : 4.0);
  if (!(h_min > 0.0)) throw InvalidArgument("design has no spread; cannot build a bandwidth grid");
  if (count > 1 && !(h_max > h_min)) {
    throw InvalidArgument(fmt::format(
        "bandwidth grid is empty: largest design gap {} exceeds the upper bound {}", h_min, h_max));
  }
  return linspace(h_min, h_max, count);
}

std::vector<double> refined_bandwidth_grid(double h_cv, double h_yj, double h_floor,
                                           std::size_t count) {
  if (!(h_cv > 0.0) || !(h_yj > 0.0)) throw InvalidArgument("bandwidths must be positive");
  const double lo = std::max(std::min(h_cv, h_yj - h_cv), h_floor);
  const double hi = h_yj + 2.0 * h_cv;
  if (!(lo > 0.0) || !(hi > lo)) {
    throw InvalidArgument(fmt::format("refined bandwidth grid [{}, {}] is empty", lo, hi));
  }
  return linspace(lo, hi, count);
}

CvEvaluation cv_criterion(const Sample& s, const KernelSpec& k, double h) {
  CvEvaluation out;
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i) {
    const LocalWindow window = local_window(s, k, h, s.x(i), i);
    if (!(window.total_weight > 0.0)) {
      out.skipped_pairs += n;
      continue;
    }
    const WeightedStepSurvival survival(s, window);
    const double yi = s.y(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double yj = s.y(j);
      const double diff = (yi >= yj ? 1.0 : 0.0) - survival.survival(yj);
      out.value += diff * diff;
    }
    out.used_pairs += n;
  }
  return out;
}

CvSelection cv_select(const Sample& s, const KernelSpec& k, std::span<const double> h_values,
                      unsigned threads) {
  if (s.size() < 3) throw InvalidArgument("cross-validation needs at least three observations");
  CvSelection out;
  out.per_h.resize(h_values.size());
  parallel_for(h_values.size(), threads,
               [&](std::size_t i) { out.per_h[i] = cv_criterion(s, k, h_values[i]); });
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < h_values.size(); ++i) {
    if (out.per_h[i].used_pairs == 0) {
      out.per_h[i].value = kNaN;
      continue;
    }
    if (!best || out.per_h[i].value < out.per_h[*best].value) best = i;
  }
  if (!best) throw SelectionError("every candidate bandwidth leaves all CV windows empty");
  out.h = h_values[*best];
  return out;
}

double cv_bandwidth(const Sample& s, const KernelSpec& k, const SelectionGrid& grid,
                    unsigned threads) {
  grid.validate();
  return cv_select(s, k, grid.h_values, threads).h;
}

double yu_jones_bandwidth(double h_cv, double beta) {
  if (!(h_cv > 0.0)) throw InvalidArgument(fmt::format("h_cv must be positive, got {}", h_cv));
  if (!(beta > 0.0 && beta < 1.0)) {
    throw DomainError(fmt::format("beta must lie in (0, 1), got {}", beta));
  }
  const boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, beta);
  const double phi = boost::math::pdf(normal, z);
  return h_cv * std::pow(beta * (1.0 - beta) / (phi * phi), 0.2);
}

KSelection select_k_separate(std::span<const std::optional<double>> estimates, int first_k,
                             int window) {
  if (window < 2) throw InvalidArgument(fmt::format("k window must be >= 2, got {}", window));
  const auto best = best_window(estimates, static_cast<std::size_t>(window));
  if (!best) {
    throw SelectionError(fmt::format("no window of {} successive valid k values among {} candidates",
                                     window, estimates.size()));
  }
  KSelection out;
  out.k = first_k + static_cast<int>(best->first);
  out.score = best->second;
  out.estimate = *estimates[best->first];
  return out;
}

KSelection select_k_separate(const std::function<std::optional<double>(int)>& estimate, int k_first,
                             int k_last, int window) {
  if (k_last < k_first) throw InvalidArgument("empty k range");
  std::vector<std::optional<double>> values;
  values.reserve(static_cast<std::size_t>(k_last - k_first + 1));
  for (int k = k_first; k <= k_last; ++k) values.push_back(estimate(k));
  return select_k_separate(values, k_first, window);
}

EstimateSurface build_surface(std::span<const double> h_values,
                              const std::function<std::size_t(std::size_t)>& n_star_of_h,
                              const std::function<std::optional<double>(std::size_t, int)>& estimate,
                              unsigned threads) {
  EstimateSurface surface;
  surface.h_values.assign(h_values.begin(), h_values.end());
  surface.rows.resize(h_values.size());
  parallel_for(h_values.size(), threads, [&](std::size_t i) {
    SurfaceRow& row = surface.rows[i];
    row.n_star = n_star_of_h(i);
    for (int k = 1; k + 1 <= static_cast<int>(row.n_star); ++k) {
      row.estimates.push_back(estimate(i, k));
    }
  });
  return surface;
}

int k_window_for(std::size_t n_star) {
  return std::max(2, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_star)))));
}

SelectionResult select_hk_simultaneous(const EstimateSurface& surface, int window_h) {
  if (window_h < 2) throw InvalidArgument("the h window must hold at least two values");
  if (surface.rows.size() != surface.h_values.size()) {
    throw InvalidArgument("estimate surface rows do not match the bandwidth grid");
  }
  SelectionResult out;
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < surface.rows.size(); ++i) {
    HTrace t;
    t.h = surface.h_values[i];
    t.n_star = surface.rows[i].n_star;
    try {
      const KSelection ks = select_k_separate(surface.rows[i].estimates, 1, k_window_for(t.n_star));
      t.usable = true;
      t.k = ks.k;
      t.score = ks.score;
      t.estimate = ks.estimate;
      usable.push_back(i);
    } catch (const Error& err) {
      t.failure = err.what();
    }
    out.trace.push_back(std::move(t));
  }
  if (usable.size() < static_cast<std::size_t>(window_h)) {
    std::string detail;
    for (const auto& t : out.trace) {
      if (!t.usable) detail += fmt::format("\n  h = {}: {}", t.h, t.failure);
    }
    throw SelectionError(fmt::format("only {} usable bandwidths for a window of {}{}",
                                     usable.size(), window_h, detail));
  }
  std::vector<std::optional<double>> per_h;
  per_h.reserve(usable.size());
  for (std::size_t i : usable) per_h.emplace_back(out.trace[i].estimate);
  const auto best = best_window(per_h, static_cast<std::size_t>(window_h));
  const HTrace& chosen = out.trace[usable[best->first]];
  out.h_selected = chosen.h;
  out.k_selected = chosen.k;
  out.estimate = chosen.estimate;
  out.stability_score = best->second;
  return out;
}

std::optional<SelectionTarget> parse_selection_target(const std::string& name) {
  if (name == "rp-quantile") return SelectionTarget::RPQuantile;
  if (name == "rp-gamma") return SelectionTarget::RPGamma;
  if (name == "gp-quantile") return SelectionTarget::GPQuantile;
  if (name == "gp-gamma") return SelectionTarget::GPGamma;
  return std::nullopt;
}

std::string to_string(SelectionTarget target) {
  switch (target) {
    case SelectionTarget::RPQuantile: return "rp-quantile";
    case SelectionTarget::RPGamma: return "rp-gamma";
    case SelectionTarget::GPQuantile: return "gp-quantile";
    case SelectionTarget::GPGamma: return "gp-gamma";
  }
  return "unknown";
}

namespace {

std::optional<double> rp_target(SelectionTarget target, const WeightedStepSurvival& survival,
                                std::size_t n_star, int k, int J, double r,
                                std::span<const double> weights, double beta) {
  const double alpha = static_cast<double>(k) / static_cast<double>(n_star);
  const RPConfig cfg{alpha, J, r, std::vector<double>(weights.begin(), weights.end())};
  const RPEstimate est = rp_gamma(survival, cfg);
  if (est.degenerate) return std::nullopt;
  if (target == SelectionTarget::RPGamma) return est.gamma_hat;
  if (beta > alpha) return std::nullopt;
  const double q = extrapolate(est, beta);
  return std::isfinite(q) ? std::optional<double>(q) : std::nullopt;
}

std::optional<double> gp_target(SelectionTarget target, const Sample& s, const KernelSpec& kern,
                                double x, double h, int k, double beta) {
  try {
    const ExceedanceSet e = build_exceedances(s, kern, h, x, static_cast<std::size_t>(k));
    if (e.k_x < 2) return std::nullopt;
    const GPFit fit = gp_fit(e);
    if (target == SelectionTarget::GPGamma) return fit.gamma_hat;
    const double q = gp_quantile(fit, e, beta);
    return std::isfinite(q) ? std::optional<double>(q) : std::nullopt;
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

std::optional<double> estimate_at(SelectionTarget target, const Sample& s, const KernelSpec& kern,
                                  double x, double h, int k, int J, double r,
                                  std::span<const double> weights, double beta) {
  const LocalWindow window = local_window(s, kern, h, x);
  if (k < 1 || static_cast<std::size_t>(k) >= window.n_star) return std::nullopt;
  if (target == SelectionTarget::GPQuantile || target == SelectionTarget::GPGamma) {
    return gp_target(target, s, kern, x, h, k, beta);
  }
  if (!(window.total_weight > 0.0)) return std::nullopt;
  return rp_target(target, WeightedStepSurvival(s, window), window.n_star, k, J, r, weights, beta);
}

EstimateSurface target_surface(SelectionTarget target, const Sample& s, const KernelSpec& kern,
                               double x, std::span<const double> h_values, int J, double r,
                               std::span<const double> weights, double beta, unsigned threads) {
  EstimateSurface surface;
  surface.h_values.assign(h_values.begin(), h_values.end());
  surface.rows.resize(h_values.size());
  const bool gp = target == SelectionTarget::GPQuantile || target == SelectionTarget::GPGamma;
  parallel_for(h_values.size(), threads, [&](std::size_t i) {
    const double h = h_values[i];
    const LocalWindow window = local_window(s, kern, h, x);
    SurfaceRow& row = surface.rows[i];
    row.n_star = window.n_star;
    if (row.n_star < 2) return;
    std::optional<WeightedStepSurvival> survival;
    if (!gp && window.total_weight > 0.0) survival.emplace(s, window);
    for (int k = 1; k + 1 <= static_cast<int>(row.n_star); ++k) {
      if (gp) {
        row.estimates.push_back(gp_target(target, s, kern, x, h, k, beta));
      } else if (survival) {
        row.estimates.push_back(rp_target(target, *survival, row.n_star, k, J, r, weights, beta));
      } else {
        row.estimates.emplace_back();
      }
    }
  });
  return surface;
}

}  // namespace evqr

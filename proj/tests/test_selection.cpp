#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "evqr/errors.hpp"
#include "evqr/selection.hpp"
#include "oracles.hpp"

using namespace evqr;

namespace {

std::vector<oracle::Obs> to_obs(const Sample& s) {
  std::vector<oracle::Obs> out;
  for (std::size_t i = 0; i < s.size(); ++i) out.push_back({s.x(i)[0], s.y(i)});
  return out;
}

std::vector<std::optional<double>> opt(std::initializer_list<double> v) {
  return {v.begin(), v.end()};
}

}  // namespace

TEST_CASE("bandwidth grids") {
  const Sample s = Sample::univariate({0.0, 0.1, 0.4, 0.5, 1.0}, {1, 2, 3, 4, 5});
  CHECK(max_design_gap(s) == doctest::Approx(0.5));
  CHECK(bandwidth_grid(s, 1).front() == doctest::Approx(0.5));
  CHECK_THROWS_AS(bandwidth_grid(s, 5), InvalidArgument);
  CHECK_THROWS_AS(bandwidth_grid(s, 0), InvalidArgument);
}

TEST_CASE("bandwidth grid bounds") {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 20; ++i) {
    xs.push_back(i / 20.0);
    ys.push_back(i);
  }
  const Sample s = Sample::univariate(xs, ys);
  const auto half = bandwidth_grid(s, 50, HMaxRule::Half);
  CHECK(half.size() == 50);
  CHECK(half.front() == doctest::Approx(0.05));
  CHECK(half.back() == doctest::Approx(0.5));
  CHECK(bandwidth_grid(s, 10, HMaxRule::Quarter).back() == doctest::Approx(0.25));
  for (std::size_t i = 1; i < half.size(); ++i) CHECK(half[i] > half[i - 1]);
  const auto refined = refined_bandwidth_grid(0.1, 0.15, 0.02);
  CHECK(refined.size() == 50);
  CHECK(refined.front() == doctest::Approx(0.05));
  CHECK(refined.back() == doctest::Approx(0.35));
  CHECK(refined_bandwidth_grid(0.1, 0.12, 0.05).front() == doctest::Approx(0.05));
  CHECK(k_window_for(100) == 10);
  CHECK(k_window_for(3) == 2);
  CHECK(k_window_for(24) == 4);
}

TEST_CASE("CV criterion agrees with the brute-force double sum") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const KernelSpec k = triweight();
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + trial % 28;
    std::vector<double> xs, ys;
    for (int i = 0; i < n; ++i) {
      xs.push_back(unif(gen));
      ys.push_back(std::floor(10 * unif(gen)));
    }
    const Sample s = Sample::univariate(xs, ys);
    for (double h : {0.05, 0.2, 0.7}) {
      const double ref = oracle::cv_criterion(to_obs(s), h);
      CHECK(cv_criterion(s, k, h).value == doctest::Approx(ref).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("CV on a three-point design") {
  const KernelSpec k = triweight();
  const Sample s = Sample::univariate({0.0, 0.5, 1.0}, {1.0, 3.0, 2.0});
  const std::vector<double> grid{0.6, 1.2};
  const auto sel = cv_select(s, k, grid);
  const double c0 = oracle::cv_criterion(to_obs(s), 0.6);
  const double c1 = oracle::cv_criterion(to_obs(s), 1.2);
  CHECK(sel.h == (c0 <= c1 ? 0.6 : 1.2));
  CHECK(sel.per_h[0].value == doctest::Approx(c0));
  // a bandwidth below every gap leaves each leave-one-out window empty
  const auto tiny = cv_criterion(s, k, 0.1);
  CHECK(tiny.used_pairs == 0);
  CHECK(tiny.skipped_pairs == 9);
  CHECK_THROWS_AS(cv_select(s, k, std::vector<double>{0.1, 0.2}), SelectionError);
  CHECK(cv_select(s, k, std::vector<double>{0.1, 0.6}).h == 0.6);
  CHECK(cv_select(s, k, std::vector<double>{0.9}).h == 0.9);
}

TEST_CASE("CV on a doubled dataset") {
  const KernelSpec k = triweight();
  const std::vector<double> xs{0.1, 0.35, 0.5, 0.62, 0.8, 0.95};
  const std::vector<double> ys{1.0, 4.0, 2.0, 5.0, 3.0, 6.0};
  std::vector<double> x2 = xs, y2 = ys;
  x2.insert(x2.end(), xs.begin(), xs.end());
  y2.insert(y2.end(), ys.begin(), ys.end());
  const Sample s = Sample::univariate(xs, ys), d = Sample::univariate(x2, y2);
  // argmin invariance is instance specific: the twin of (X_i, Y_i) stays in its leave-one-out fit
  const std::vector<double> grid{0.45, 0.6, 0.75, 0.85};
  const auto a = cv_select(s, k, grid), b = cv_select(d, k, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(b.per_h[i].value == doctest::Approx(oracle::cv_criterion(to_obs(d), grid[i])).epsilon(1e-10));
    CHECK(b.per_h[i].value != doctest::Approx(a.per_h[i].value));
  }
  CHECK(a.h == b.h);
}

TEST_CASE("Yu-Jones factor") {
  CHECK(yu_jones_bandwidth(1.0, 0.5) == doctest::Approx(std::pow(M_PI / 2, 0.2)).epsilon(1e-12));
  CHECK(yu_jones_bandwidth(1.0, 0.01) == doctest::Approx(1.6936910407).epsilon(1e-9));
  CHECK(yu_jones_bandwidth(2.0, 0.3) == doctest::Approx(2 * yu_jones_bandwidth(1.0, 0.3)));
  const double floor = std::pow(M_PI / 2, 0.2);
  double prev = INFINITY;
  for (int i = 1; i <= 99; ++i) {
    const double b = i / 100.0;
    const double f = yu_jones_bandwidth(1.0, b);
    CHECK(f >= floor * (1 - 1e-12));
    CHECK(std::abs(f - yu_jones_bandwidth(1.0, 1.0 - b)) <= 1e-12 * f);
    if (i <= 50) {
      CHECK(f < prev);
      prev = f;
    }
  }
  CHECK_THROWS_AS(yu_jones_bandwidth(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(yu_jones_bandwidth(0.0, 0.5), InvalidArgument);
}

TEST_CASE("separate k selection examples") {
  auto constant = opt({2, 2, 2, 2, 2, 2});
  auto c = select_k_separate(constant, 1, 3);
  CHECK(c.k == 1);
  CHECK(c.score == 0.0);
  auto e = select_k_separate(opt({5, 5, 5, 9, 1}), 1, 3);
  CHECK(e.k == 1);
  CHECK(e.score == 0.0);
  CHECK(e.estimate == 5.0);
  auto shifted = select_k_separate(opt({9, 1, 5, 5, 5}), 4, 3);
  CHECK(shifted.k == 6);
  auto whole = select_k_separate(opt({1, 4, 2}), 1, 3);
  CHECK(whole.k == 1);
  std::vector<std::optional<double>> gaps{1.0, std::nullopt, 1.0, 1.0, 3.0, 3.5};
  CHECK(select_k_separate(gaps, 1, 2).k == 3);
  CHECK_THROWS_AS(select_k_separate(opt({1, 2}), 1, 3), SelectionError);
  CHECK_THROWS_AS(select_k_separate(opt({1, 2}), 1, 1), InvalidArgument);
  auto fn = select_k_separate([](int k) { return std::optional<double>(k < 5 ? k * 1.0 : 7.0); }, 1, 10, 3);
  CHECK(fn.k == 5);
}

TEST_CASE("property: separate selection is affine invariant") {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> norm;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::optional<double>> v(30), w(30);
    const double a = norm(gen), b = std::exp(norm(gen));
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = norm(gen);
      w[i] = a + b * *v[i];
    }
    const auto s1 = select_k_separate(v, 1, 5), s2 = select_k_separate(w, 1, 5);
    CHECK(s1.k == s2.k);
    CHECK(s2.score == doctest::Approx(b * s1.score).epsilon(1e-10));
  }
}

TEST_CASE("simultaneous selection") {
  EstimateSurface flat;
  for (int i = 0; i < 12; ++i) {
    flat.h_values.push_back(0.1 * (i + 1));
    flat.rows.push_back({20, std::vector<std::optional<double>>(19, 1.5)});
  }
  auto r = select_hk_simultaneous(flat, 10);
  CHECK(r.h_selected == doctest::Approx(0.1));
  CHECK(r.k_selected == 1);
  CHECK(r.stability_score == 0.0);
  CHECK(r.trace.size() == 12);

  // smooth in h with a flat stretch over h indices 8..19
  EstimateSurface plateau;
  for (int i = 0; i < 30; ++i) {
    const double level = i < 8 ? i * 0.3 : (i < 20 ? 2.4 : 2.4 + (i - 19) * 0.5);
    plateau.h_values.push_back(0.01 * (i + 1));
    plateau.rows.push_back({16, std::vector<std::optional<double>>(15, level)});
  }
  r = select_hk_simultaneous(plateau, 10);
  CHECK(r.h_selected >= 0.09 - 1e-12);
  CHECK(r.h_selected <= 0.11 + 1e-12);
  CHECK(r.stability_score == 0.0);

  EstimateSurface nine = flat;
  for (int i = 0; i < 3; ++i) nine.rows[i].estimates.assign(19, std::nullopt);
  try {
    select_hk_simultaneous(nine, 10);
    FAIL("expected a selection error");
  } catch (const SelectionError& e) {
    CHECK(std::string(e.what()).find("only 9 usable") != std::string::npos);
  }
}

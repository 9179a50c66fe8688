#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "evqr/conditional.hpp"
#include "evqr/errors.hpp"
#include "oracles.hpp"

using namespace evqr;

TEST_CASE("density estimate") {
  const KernelSpec k = triweight();
  CHECK(density_estimate(Sample::univariate({0.3}, {1.0}), k, 1.0, 0.3) == doctest::Approx(1.09375));
  CHECK(density_estimate(Sample::univariate({5.0, 6.0}, {1.0, 2.0}), k, 1.0, 0.0) == 0.0);
  const double expected = (1.09375 + 35.0 / 32.0 * std::pow(0.75, 3)) / 2.0;
  CHECK(density_estimate(Sample::univariate({0.0, 0.5}, {1.0, 2.0}), k, 1.0, 0.0) ==
        doctest::Approx(expected).epsilon(1e-14));
  CHECK(expected == doctest::Approx(0.7777).epsilon(1e-4));
}

TEST_CASE("survival estimate") {
  const KernelSpec k = triweight();
  const Sample one = Sample::univariate({0.5}, {5.0});
  CHECK(survival_estimate(one, k, 0.1, 0.5, 4.0) == 1.0);
  CHECK(survival_estimate(one, k, 0.1, 0.5, 5.0) == 0.0);

  const Sample two = Sample::univariate({0.4, 0.6}, {1.0, 3.0});
  CHECK(survival_estimate(two, k, 0.2, 0.5, 2.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(survival_estimate(two, k, 0.05, 0.5, 2.0), EmptyWindowError);
}

TEST_CASE("quantile estimate by generalized inversion") {
  const KernelSpec k = triweight();
  const Sample two = Sample::univariate({0.4, 0.6}, {1.0, 3.0});
  CHECK(quantile_estimate(two, k, 0.2, 0.5, 0.5) == 1.0);
  CHECK(quantile_estimate(two, k, 0.2, 0.5, 0.4) == 3.0);
  CHECK(quantile_estimate(two, k, 0.2, 0.5, 0.999) == 1.0);
  CHECK_THROWS_AS(quantile_estimate(two, k, 0.05, 0.5, 0.5), EmptyWindowError);
  CHECK_THROWS_AS(quantile_estimate(two, k, 0.2, 0.5, 0.0), DomainError);
  CHECK_THROWS_AS(quantile_estimate(two, k, 0.2, 0.5, 1.0), DomainError);
}

TEST_CASE("tied responses merge into one jump") {
  WeightedStepSurvival s({{2.0, 1.0}, {2.0, 1.0}, {1.0, 2.0}});
  CHECK(s.jumps().size() == 2);
  CHECK(s.survival(1.0) == doctest::Approx(0.5));
  CHECK(s.survival(2.0) == 0.0);
  CHECK(s.quantile(0.5) == 1.0);
  CHECK(s.quantile(0.49) == 2.0);
  CHECK(s.saturated(0.49));
  CHECK_FALSE(s.saturated(0.5));
  CHECK_THROWS_AS(WeightedStepSurvival({{1.0, 0.0}}), EmptyWindowError);
}

TEST_CASE("window bookkeeping") {
  const KernelSpec k = triweight();
  // Boundary point at distance exactly h has zero weight but is inside the closed ball.
  const Sample s = Sample::univariate({0.0, 0.5, 1.0, 2.0}, {1, 2, 3, 4});
  const LocalWindow w = local_window(s, k, 0.5, 0.5);
  CHECK(w.n_star == 3);
  CHECK(w.total_weight == doctest::Approx(s.size() * density_estimate(s, k, 0.5, 0.5)).epsilon(1e-15));
  const LocalWindow loo = local_window(s, k, 0.5, std::vector<double>{0.5}, 1);
  CHECK(loo.n_star == 2);
  CHECK(loo.total_weight == 0.0);
}

TEST_CASE("property: matches the naive estimator on random samples") {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> size(1, 30);
  const KernelSpec k = triweight();
  for (int trial = 0; trial < 200; ++trial) {
    const int n = size(gen);
    std::vector<double> xs, ys;
    std::vector<oracle::Obs> obs;
    for (int i = 0; i < n; ++i) {
      xs.push_back(unif(gen));
      ys.push_back(std::floor(unif(gen) * 8));  // coarse values force ties
      obs.push_back({xs.back(), ys.back()});
    }
    const Sample s = Sample::univariate(xs, ys);
    const double x = unif(gen), h = 0.1 + unif(gen);
    if (!(local_window(s, k, h, x).total_weight > 0.0)) continue;
    for (double y = -1.0; y <= 8.0; y += 0.5) {
      CHECK(survival_estimate(s, k, h, x, y) == doctest::Approx(oracle::survival(obs, h, x, y)).epsilon(1e-12));
    }
    for (double a : {0.01, 0.2, 0.5, 0.77, 0.99}) {
      CHECK(quantile_estimate(s, k, h, x, a) == oracle::quantile(obs, h, x, a));
    }
  }
}

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "evqr/errors.hpp"
#include "evqr/evt_core.hpp"
#include "evqr/pickands.hpp"

using namespace evqr;

TEST_CASE("weights") {
  CHECK(rp1_weights(3) == std::vector<double>{1.0});
  CHECK(rp2_weights(3) == std::vector<double>{1.0});
  const auto w4 = rp2_weights(4);
  REQUIRE(w4.size() == 2);
  CHECK(w4[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(w4[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  for (int J = 3; J < 40; ++J) {
    for (const auto& w : {rp1_weights(J), rp2_weights(J)}) {
      double s = 0.0;
      for (double v : w) s += v;
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(rp1_weights(2), InvalidArgument);
  CHECK_THROWS_AS(rp2_weights(1), InvalidArgument);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(RPConfig::rp1(0.0, 3, 0.5).validate(), InvalidArgument);
  CHECK_THROWS_AS(RPConfig::rp1(0.1, 3, 1.0).validate(), InvalidArgument);
  RPConfig bad{0.1, 4, 0.5, {0.5, 0.4}};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  RPConfig short_w{0.1, 4, 0.5, {1.0}};
  CHECK_THROWS_AS(short_w.validate(), InvalidArgument);
}

TEST_CASE("Pareto oracle worked example") {
  auto q = [](double a) { return std::pow(a, -0.5); };
  const RPEstimate est = rp_gamma(q, RPConfig::rp1(0.1, 3, 1.0 / 3.0));
  REQUIRE_FALSE(est.degenerate);
  CHECK(est.gamma_hat == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(est.a_hat == doctest::Approx(1.58114).epsilon(1e-5));
  CHECK(est.anchor_quantile == doctest::Approx(3.16228).epsilon(1e-5));
  CHECK(est.quantile_spacings[0] == doctest::Approx(3.16228 - 5.47723).epsilon(1e-5));
  CHECK(rp_scale(q, RPConfig::rp1(0.1, 3, 1.0 / 3.0), est.gamma_hat) ==
        doctest::Approx(est.a_hat).epsilon(1e-14));
  CHECK(extrapolate(est, 0.01) == doctest::Approx(10.0).epsilon(1e-10));
  CHECK(extrapolate(est, 0.1) == est.anchor_quantile);
  CHECK(extrapolate(3.16228, 0.5, 1.58114, 0.1, 0.01) == doctest::Approx(10.0).epsilon(1e-5));
}

TEST_CASE("exponential oracle") {
  auto q = [](double a) { return -std::log(a); };
  const RPConfig cfg = RPConfig::rp2(0.1, 5, 0.5);
  const RPEstimate est = rp_gamma(q, cfg);
  CHECK(std::abs(est.gamma_hat) < 1e-12);
  CHECK(est.a_hat == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(extrapolate(est, 0.01) == doctest::Approx(-std::log(0.01)).epsilon(1e-10));
  CHECK(rp_scale(q, cfg, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("equally spaced quantiles give gamma zero; collapsed spacings are flagged") {
  auto lin = [](double a) { return -std::log(a) / std::log(3.0); };
  CHECK(std::abs(rp_gamma(lin, RPConfig::rp1(0.3, 4, 1.0 / 3.0)).gamma_hat) < 1e-12);

  auto flat = [](double a) { return a > 0.05 ? 1.0 : 2.0; };
  const RPEstimate d = rp_gamma(flat, RPConfig::rp1(0.3, 3, 0.5));
  CHECK(d.degenerate);
  REQUIRE(d.collapsed_spacing);
  CHECK(*d.collapsed_spacing == 0);
  CHECK_THROWS_AS(extrapolate(d, 0.01), DegenerateSpacingError);

  auto constant = [](double) { return 4.0; };
  CHECK_THROWS_AS(rp_scale(constant, RPConfig::rp1(0.3, 3, 0.5), 0.2), DegenerateSpacingError);
}

TEST_CASE("extrapolation order checks") {
  CHECK_THROWS_AS(extrapolate(1.0, 0.2, 1.0, 0.1, 0.2), DomainError);
  CHECK_THROWS_AS(extrapolate(1.0, 0.2, 1.0, 0.1, 0.0), DomainError);
  // decreasing in beta when a_hat > 0
  double prev = INFINITY;
  for (double b = 0.001; b <= 0.1; b += 0.001) {
    const double v = extrapolate(1.0, -0.3, 0.7, 0.1, b);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("property: Pareto and exponential exactness") {
  for (double g : {0.1, 0.25, 0.5, 1.0, 2.0}) {
    for (double c : {0.3, 1.0, 17.0}) {
      auto q = [&](double a) { return c * std::pow(a, -g); };
      for (int J : {3, 4, 7}) {
        for (const RPConfig& cfg : {RPConfig::rp1(0.2, J, 1.0 / J), RPConfig::rp2(0.05, J, 0.6)}) {
          const RPEstimate est = rp_gamma(q, cfg);
          CHECK(std::abs(est.gamma_hat - g) <= 1e-9 * g);
          CHECK(std::abs(est.a_hat - g * q(cfg.alpha)) <= 1e-9 * g * q(cfg.alpha));
          for (double b : {cfg.alpha / 10, cfg.alpha / 1000}) {
            CHECK(std::abs(extrapolate(est, b) - q(b)) <= 1e-9 * q(b));
          }
        }
      }
    }
  }
  for (double mu : {-3.0, 0.0, 2.0}) {
    for (double s : {0.5, 2.0}) {
      auto q = [&](double a) { return mu - s * std::log(a); };
      const RPConfig cfg = RPConfig::rp1(0.1, 4, 0.25);
      const RPEstimate est = rp_gamma(q, cfg);
      CHECK(std::abs(est.gamma_hat) < 1e-9);
      CHECK(std::abs(extrapolate(est, 1e-4) - q(1e-4)) <= 1e-9 * std::abs(q(1e-4)));
    }
  }
}

namespace {

Sample random_sample(std::mt19937_64& gen, int n) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> xs, ys;
  for (int i = 0; i < n; ++i) {
    xs.push_back(unif(gen));
    ys.push_back(std::pow(unif(gen), -0.4));
  }
  return Sample::univariate(xs, ys);
}

}  // namespace

TEST_CASE("property: RP1 and RP2 coincide at J = 3 on samples") {
  std::mt19937_64 gen(11);
  const KernelSpec k = triweight();
  for (int trial = 0; trial < 100; ++trial) {
    const Sample s = random_sample(gen, 150);
    const RPEstimate a = rp_gamma(s, k, 0.3, 0.5, RPConfig::rp1(0.3, 3, 1.0 / 3.0));
    const RPEstimate b = rp_gamma(s, k, 0.3, 0.5, RPConfig::rp2(0.3, 3, 1.0 / 3.0));
    CHECK(a.degenerate == b.degenerate);
    if (!a.degenerate) {
      CHECK(a.gamma_hat == b.gamma_hat);
      CHECK(a.a_hat == b.a_hat);
      CHECK(extrapolate(a, 0.01) == extrapolate(b, 0.01));
    }
  }
}

TEST_CASE("property: location-scale equivariance") {
  std::mt19937_64 gen(5);
  const KernelSpec k = triweight();
  for (int trial = 0; trial < 50; ++trial) {
    const Sample s = random_sample(gen, 200);
    const double loc = -2.0 + trial * 0.1, scale = 0.5 + trial * 0.05;
    std::vector<double> ys;
    for (double y : s.ys()) ys.push_back(loc + scale * y);
    const Sample t = Sample::univariate(s.xs(), ys);
    const RPConfig cfg = RPConfig::rp2(0.4, 4, 0.5);
    const RPEstimate a = rp_gamma(s, k, 0.25, 0.4, cfg);
    const RPEstimate b = rp_gamma(t, k, 0.25, 0.4, cfg);
    REQUIRE(a.degenerate == b.degenerate);
    if (a.degenerate) continue;
    CHECK(b.gamma_hat == doctest::Approx(a.gamma_hat).epsilon(1e-9).scale(1.0));
    const double qa = extrapolate(a, 0.005);
    CHECK(extrapolate(b, 0.005) == doctest::Approx(loc + scale * qa).epsilon(1e-9));
  }
}

TEST_CASE("sample overloads agree with the step function path") {
  std::mt19937_64 gen(3);
  const KernelSpec k = triweight();
  const Sample s = random_sample(gen, 300);
  const RPConfig cfg = RPConfig::rp1(0.2, 4, 0.5);
  const RPEstimate a = rp_gamma(s, k, 0.2, 0.6, cfg);
  const RPEstimate b = rp_gamma(WeightedStepSurvival(s, local_window(s, k, 0.2, 0.6)), cfg);
  CHECK(a.gamma_hat == b.gamma_hat);
  CHECK(a.quantiles == b.quantiles);
  if (!a.degenerate) CHECK(rp_scale(s, k, 0.2, 0.6, cfg, a.gamma_hat) == doctest::Approx(a.a_hat));
}

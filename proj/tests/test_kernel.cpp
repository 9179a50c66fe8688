#include <doctest.h>

#include <cmath>
#include <vector>

#include "evqr/errors.hpp"
#include "evqr/kernel.hpp"
#include "oracles.hpp"

using namespace evqr;

TEST_CASE("triweight values and constants") {
  const KernelSpec k = triweight();
  CHECK(k.evaluate(0.0) == doctest::Approx(1.09375).epsilon(1e-15));
  CHECK(k.evaluate(1.5) == 0.0);
  CHECK(k.evaluate(-1.0) == 0.0);
  CHECK(k.l2_norm_sq() == doctest::Approx(350.0 / 429.0).epsilon(1e-15));
  CHECK(k.sup_norm() == 35.0 / 32.0);
  CHECK(k.dim() == 1);
  CHECK(k.support_radius() == 1.0);

  const double l2 = oracle::integrate([](double t) { return std::pow(oracle::triweight(t), 2); }, -1, 1);
  CHECK(std::abs(k.l2_norm_sq() - l2) <= 1e-10 * l2);
  CHECK(std::abs(k.l2_norm_sq() - 0.815850815850816) < 1e-12);
}

TEST_CASE("scaled evaluation") {
  const KernelSpec k = triweight();
  CHECK(scaled_eval(k, 1.0, 0.0) == doctest::Approx(1.09375));
  CHECK(scaled_eval(k, 0.5, 0.0) == doctest::Approx(2.1875));
  CHECK(scaled_eval(k, 0.1, 0.2) == 0.0);
  CHECK_THROWS_AS(scaled_eval(k, 0.0, 0.1), InvalidArgument);
  CHECK_THROWS_AS(scaled_eval(k, -1.0, 0.1), InvalidArgument);
}

TEST_CASE("scaled kernel integrates to one and vanishes beyond h") {
  const KernelSpec k = triweight();
  for (double h : {0.01, 0.3, 1.0, 7.5}) {
    const double mass = oracle::integrate([&](double u) { return scaled_eval(k, h, u); }, -h, 0.0) +
                        oracle::integrate([&](double u) { return scaled_eval(k, h, u); }, 0.0, h);
    CHECK(std::abs(mass - 1.0) < 1e-8);
    CHECK(scaled_eval(k, h, h * 1.0000001) == 0.0);
    CHECK(scaled_eval(k, h, -h * 1.5) == 0.0);
  }
}

TEST_CASE("univariate kernels are checked by quadrature") {
  const KernelSpec epan = KernelSpec::univariate("epanechnikov", [](double t) { return 0.75 * (1 - t * t); });
  CHECK(epan.l2_norm_sq() == doctest::Approx(0.6).epsilon(1e-10));
  CHECK(epan.sup_norm() == doctest::Approx(0.75).epsilon(1e-10));
  CHECK(epan.evaluate(2.0) == 0.0);
  CHECK_THROWS_AS(KernelSpec::univariate("bad", [](double) { return 1.0; }), InvalidArgument);
}

TEST_CASE("kernel values are nonnegative") {
  const KernelSpec k = triweight();
  for (int i = -300; i <= 300; ++i) CHECK(k.evaluate(i / 100.0) >= 0.0);
}

TEST_CASE("radial triweight") {
  const KernelSpec k1 = radial_triweight(1);
  CHECK(k1.l2_norm_sq() == triweight().l2_norm_sq());
  const KernelSpec k2 = radial_triweight(2);
  CHECK(k2.dim() == 2);
  // c_2 = Gamma(5) / (6 pi) = 4 / pi; mass in polar coordinates.
  CHECK(k2.sup_norm() == doctest::Approx(4.0 / M_PI).epsilon(1e-14));
  const double mass = oracle::integrate(
      [&](double r) {
        const double u[2] = {r, 0.0};
        return 2 * M_PI * r * k2.evaluate(std::span<const double>(u, 2));
      },
      0.0, 1.0);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  const double l2 = oracle::integrate(
      [&](double r) {
        const double u[2] = {0.0, r};
        const double v = k2.evaluate(std::span<const double>(u, 2));
        return 2 * M_PI * r * v * v;
      },
      0.0, 1.0);
  CHECK(k2.l2_norm_sq() == doctest::Approx(l2).epsilon(1e-12));
  const double out[2] = {0.8, 0.8};
  CHECK(k2.evaluate(std::span<const double>(out, 2)) == 0.0);
}

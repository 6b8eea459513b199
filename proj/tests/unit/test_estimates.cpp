#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "islt/estimates.hpp"
#include "islt/kernels.hpp"
#include "islt/quadrature.hpp"

using namespace islt;

TEST_CASE("continuum mass is one") {
  for (int k = 0; k <= 2; ++k) {
    for (int d = 1; d <= 3; ++d) {
      CHECK(continuum_mass(ModelParams::make(k, d), 0.7) == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("heat-case L2 norm is (4 pi t)^{-d/2}") {
  for (int d = 1; d <= 3; ++d) {
    for (double t : {0.1, 1.0, 5.0}) {
      CHECK(l2_norm_continuum(ModelParams::make(0, d), t) ==
            doctest::Approx(std::pow(4.0 * std::numbers::pi * t, -0.5 * d)).epsilon(1e-10));
    }
  }
}

TEST_CASE("L2 norm equals direct spatial quadrature in d = 1") {
  const ModelParams p = ModelParams::make(1, 1);
  const double t = 0.8;
  const double direct = 2.0 * integrate_adaptive_inf(
                                  [&](double x) {
                                    const double xs[] = {x};
                                    const double k = isltbm_kernel(p, t, xs);
                                    return k * k;
                                  },
                                  0.0, 1e-10);
  CHECK(l2_norm_continuum(p, t) == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("heat-case lattice L2 norm is a Bessel function") {
  // sum_n (e^{-x} I_n(x))^2 = e^{-2x} I_0(2x), x = t / delta^2
  const double delta = 0.1, t = 0.5, x = t / (delta * delta);
  for (int d = 1; d <= 2; ++d) {
    const LatticeL2 r = l2_norm_lattice(ModelParams::make(0, d), delta, t);
    const double one = std::exp(-2.0 * x) * boost::math::cyl_bessel_i(0, 2.0 * x);
    CHECK(r.value == doctest::Approx(std::pow(one, d)).epsilon(1e-10));
    CHECK(r.truncation_ok);
  }
}

TEST_CASE("lattice L2 norm approaches the continuum") {
  const ModelParams p = ModelParams::make(1, 1);
  double prev = 1e9;
  for (double delta : {0.2, 0.1, 0.05}) {
    const double gap = std::abs(l2_norm_lattice(p, delta, 1.0).continuum_ratio - 1.0);
    CHECK(gap < 0.05);
    CHECK(gap < prev);
    prev = gap;
  }
}

TEST_CASE("temporal identity agrees with brute force") {
  for (int k = 1; k <= 2; ++k) {
    const ModelParams p = ModelParams::make(k, 1);
    for (double r : {0.5, 0.9}) {
      CHECK(temporal_difference_integral(p, 1.0, r) ==
            doctest::Approx(temporal_difference_direct(p, 1.0, r)).epsilon(1e-6));
    }
  }
}

TEST_CASE("heat-case spatial difference") {
  // int_0^t 2 (4 pi s)^{-1/2} (1 - e^{-z^2/(4 s)}) ds, with s = u^2
  const ModelParams p = ModelParams::make(0, 1);
  const double t = 1.0, z = 0.1;
  const double ref = integrate_adaptive(
      [&](double u) {
        return u > 0.0 ? 4.0 / std::sqrt(4.0 * std::numbers::pi) * -std::expm1(-z * z / (4.0 * u * u)) : 0.0;
      },
      0.0, std::sqrt(t), 1e-12);
  CHECK(spatial_difference_integral(p, t, z) == doctest::Approx(ref).epsilon(1e-7));
}

TEST_CASE("spatial difference grows with |z|") {
  const ModelParams p = ModelParams::make(1, 2);
  double prev = 0.0;
  for (double z : {0.01, 0.02, 0.04, 0.08}) {
    const double v = spatial_difference_integral(p, 1.0, z);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("d = 4 truncated integral diverges, d = 3 converges") {
  const std::vector<double> eps = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  const DivergenceReport r4 = divergence_check(ModelParams::make(1, 4), 1.0, eps);
  CHECK(r4.strictly_increasing);
  CHECK(r4.growth_ratio > 3.0);
  const DivergenceReport r3 = divergence_check(ModelParams::make(1, 3), 1.0, eps);
  CHECK(std::abs(r3.tail_change) < 0.01);
  // d = 3 limit equals the L2 norm
  CHECK(r3.values.back() == doctest::Approx(l2_norm_continuum(ModelParams::make(1, 3), 1.0)).epsilon(1e-2));
}

TEST_CASE("heat DDE residual") {
  const long x[] = {3};
  const DdeResidual r = dde_residual(ModelParams::make(0, 1), 0.1, 1.0, x);
  CHECK(r.relative() < 1e-6);
}

TEST_CASE("beta = 1/2 DDE residual") {
  const long x[] = {3};
  CHECK(dde_residual(ModelParams::make(1, 1), 0.1, 1.0, x).relative() < 1e-3);
  // the default and the Caputo forms coincide for nu <= 2 off the origin
  const DdeResidual c = dde_residual(ModelParams::make(1, 1), 0.1, 1.0, x, 0.0, DdeForm::kCaputo);
  CHECK(c.relative() < 1e-3);
}

TEST_CASE("DDE forms disagree for beta = 1/4") {
  const long x[] = {3};
  const DdeResidual plain = dde_residual(ModelParams::make(2, 1), 0.1, 1.0, x);
  const DdeResidual caputo = dde_residual(ModelParams::make(2, 1), 0.1, 1.0, x, 0.0, DdeForm::kCaputo);
  CHECK(caputo.relative() < 1e-3);
  CHECK(plain.relative() > 0.1);
}

TEST_CASE("lattice kernel converges to delta^d times the continuum kernel") {
  const ModelParams p = ModelParams::make(1, 1);
  const std::vector<double> x = {0.5};
  const std::vector<double> deltas = {0.25, 0.125, 0.0625};
  const std::vector<double> r = continuum_limit_report(p, 1.0, x, deltas);
  REQUIRE(r.size() == 3);
  CHECK(std::abs(r[2] - 1.0) < 0.012);
  CHECK(std::abs(r[2] - 1.0) < std::abs(r[0] - 1.0));
}

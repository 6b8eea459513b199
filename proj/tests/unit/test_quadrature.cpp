#include <doctest.h>

#include <cmath>
#include <numbers>

#include "islt/chebyshev.hpp"
#include "islt/errors.hpp"
#include "islt/quadrature.hpp"

using namespace islt;

TEST_CASE("Gauss-Legendre 15 integrates degree 29 exactly") {
  const Rule& r = gauss_legendre15();
  REQUIRE(r.size() == 15);
  for (int n = 0; n <= 29; ++n) {
    const double exact = n % 2 ? 0.0 : 2.0 / (n + 1);
    CHECK(r.apply([n](double x) { return std::pow(x, n); }) == doctest::Approx(exact).epsilon(1e-14));
  }
}

TEST_CASE("panels map onto subintervals") {
  Rule r;
  append_panel(r, 0.0, 1.0);
  append_panel(r, 1.0, 3.0);
  CHECK(r.apply([](double x) { return std::exp(-x); }) == doctest::Approx(1.0 - std::exp(-3.0)).epsilon(1e-14));
}

TEST_CASE("graded rule resolves an integrable endpoint singularity") {
  const Rule r = graded_rule(1e-14, 1e-2, 1.0, 2.0, 0.05);
  CHECK(r.apply([](double x) { return 1.0 / std::sqrt(x); }) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("adaptive quadrature") {
  double err = 0.0;
  const double v = integrate_adaptive([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, 1e-12, &err);
  CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(err < 1e-10);
  const double g = integrate_adaptive_inf([](double x) { return std::exp(-x * x); }, 0.0);
  CHECK(g == doctest::Approx(std::sqrt(std::numbers::pi) / 2.0).epsilon(1e-10));
}

TEST_CASE("adaptive quadrature reports failure") {
  auto wild = [](double x) { return std::sin(1.0 / x) / x; };
  CHECK_THROWS_AS(integrate_adaptive(wild, 1e-9, 1.0, 1e-14), QuadratureError);
}

TEST_CASE("piecewise Chebyshev interpolant") {
  auto f = [](double x) { return std::exp(-x) * std::cos(3.0 * x); };
  const PiecewiseChebyshev c = PiecewiseChebyshev::fit(f, 0.5, 16, 1e-12, 100);
  CHECK(c.panels() > 0);
  for (double x = 0.0; x < c.end(); x += 0.173) CHECK(c(x) == doctest::Approx(f(x)).epsilon(1e-12).scale(1.0));
  CHECK(c(c.end() + 1.0) == 0.0);
}

TEST_CASE("Chebyshev fit refuses a profile that does not decay") {
  CHECK_THROWS_AS(PiecewiseChebyshev::fit([](double) { return 1.0; }, 1.0, 8, 1e-12, 10), SizeError);
}

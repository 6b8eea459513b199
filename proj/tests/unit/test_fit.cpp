#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "islt/errors.hpp"
#include "islt/fit.hpp"

using namespace islt;

TEST_CASE("exact power law") {
  std::vector<double> x, y;
  for (int i = 0; i < 8; ++i) {
    x.push_back(std::ldexp(1.0, -i - 1));
    y.push_back(3.0 * std::pow(x.back(), 0.75));
  }
  std::reverse(x.begin(), x.end());
  std::reverse(y.begin(), y.end());
  const ScalingFit f = fit_loglog(x, y);
  CHECK(f.slope == doctest::Approx(0.75).epsilon(1e-13));
  CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(f.half_width < 1e-10);
}

TEST_CASE("noisy power law: half width covers the truth") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> z(0.0, 0.05);
  int covered = 0;
  const int trials = 400;
  for (int k = 0; k < trials; ++k) {
    std::vector<double> x, y;
    for (int i = 0; i < 6; ++i) {
      x.push_back(std::pow(2.0, i));
      y.push_back(std::pow(x.back(), -0.5) * std::exp(z(gen)));
    }
    const ScalingFit f = fit_loglog(x, y);
    if (std::abs(f.slope + 0.5) <= f.half_width) ++covered;
  }
  // 95% intervals: coverage within a few binomial standard errors
  CHECK(covered > trials * 0.90);
  CHECK(covered < trials * 0.99);
}

TEST_CASE("invalid fits") {
  const std::vector<double> two = {1.0, 2.0};
  CHECK_THROWS_AS(fit_loglog(two, two), DomainError);
  const std::vector<double> x = {1.0, 2.0, 2.0};
  const std::vector<double> y = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(fit_loglog(x, y), DomainError);
  const std::vector<double> xs = {1.0, 2.0, 3.0};
  const std::vector<double> neg = {1.0, -2.0, 3.0};
  CHECK_THROWS_AS(fit_loglog(xs, neg), DomainError);
}

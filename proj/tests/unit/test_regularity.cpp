#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "islt/errors.hpp"
#include "islt/kernels.hpp"
#include "islt/regularity.hpp"

using namespace islt;

namespace {

SIEConfig small(std::string a) {
  SIEConfig c = SIEConfig::defaults(1, 1);
  c.lat = Lattice(0.1, 1, 1.0);
  c.steps = 64;
  c.a = Coefficient::parse(a);
  return c;
}

std::vector<FieldSample> run(const SIESolver& s, int n) {
  std::vector<FieldSample> out;
  auto ws = s.workspace();
  for (int r = 0; r < n; ++r) out.push_back(s.solve(static_cast<std::uint64_t>(r), *ws));
  return out;
}

}  // namespace

TEST_CASE("expected exponents") {
  CHECK(expected_slope(ModelParams::make(1, 1), Direction::kTime, 1) == 0.75);
  CHECK(expected_slope(ModelParams::make(2, 1), Direction::kTime, 1) == 0.875);
  CHECK(expected_slope(ModelParams::make(1, 2), Direction::kTime, 1) == 0.5);
  CHECK(expected_slope(ModelParams::make(2, 3), Direction::kTime, 1) == 0.625);
  CHECK(expected_slope(ModelParams::make(0, 1), Direction::kTime, 1) == 0.5);
  CHECK(expected_slope(ModelParams::make(1, 1), Direction::kTime, 2) == 1.5);
  CHECK(expected_slope(ModelParams::make(1, 2), Direction::kSpace, 1) == doctest::Approx(1.8));
  CHECK(expected_slope(ModelParams::make(0, 1), Direction::kSpace, 1) == 1.0);
  CHECK(table_path_exponent(ModelParams::make(0, 1), Direction::kTime) == 0.25);
  CHECK(table_path_exponent(ModelParams::make(0, 1), Direction::kSpace) == 0.5);
  CHECK(table_path_exponent(ModelParams::make(1, 3), Direction::kSpace) == 0.5);
  CHECK(table_path_exponent(ModelParams::make(1, 1), Direction::kSpace) == 1.0);
}

TEST_CASE("default panel") {
  const SIEConfig c = SIEConfig::holder_defaults(1, 1);
  const RegularityPanel p = default_panel(c);
  CHECK(p.base_steps.size() == 4);
  CHECK(p.time_sites.size() == 4);
  CHECK(p.time_lags.front() == 16);
  CHECK(p.time_lags.back() == 256);
  CHECK(p.time_lags.size() >= static_cast<std::size_t>(kMinFitLags));
  for (int l : p.space_lags) {
    CHECK(l % 2 == 0);
    CHECK(l <= c.lat.half_width() / 2);
  }
  CHECK(p.space_lags.size() >= static_cast<std::size_t>(kMinFitLags));

  const RegularityPanel q = default_panel(small("const:1"));
  CHECK(q.time_lags == std::vector<int>{4, 6, 8, 12, 16});
}

TEST_CASE("fits refuse fewer than 200 replicas") {
  const SIESolver s(small("const:1"));
  try {
    holder_report(s, 150);
    FAIL("expected a refusal");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()) == "regularity fits need at least 200 replicas (got 150)");
  }
  const auto few = run(s, 20);
  CHECK_THROWS_AS(holder_report(few), DomainError);
}

TEST_CASE("zero coefficient has zero increments and refuses to fit") {
  SIEConfig c = small("zero");
  c.u0 = InitialCondition::parse("cosine");
  const SIESolver s(c);
  const auto samples = run(s, kMinHolderReplicas);
  const std::vector<int> lags = {4, 8};
  for (const auto& m : increment_moments(samples, Direction::kTime, lags, 1)) CHECK(m.mean == 0.0);
  for (const auto& r : holder_report(samples)) {
    CHECK(r.refused);
    CHECK(r.note == "fit refused: zero increments");
  }
}

TEST_CASE("time increments match the exact Gaussian variance") {
  const SIEConfig c = small("const:1");
  const SIESolver s(c);
  const auto samples = run(s, kMinHolderReplicas);
  const RegularityPanel p = default_panel(c);
  const std::vector<int> lags = {4, 16};
  const auto mom = increment_moments(samples, Direction::kTime, lags, 1);
  const int hw = c.lat.half_width();
  auto K = [&](int steps, long dx) {
    if (steps <= 0) return 0.0;
    const long d[] = {dx};
    return isltrw_kernel(c.params, c.lat, steps * c.dt(), d);
  };
  for (std::size_t li = 0; li < lags.size(); ++li) {
    double exact = 0.0;
    for (int t0 : p.base_steps) {
      for (long x : p.time_sites) {
        const int t1 = t0 + lags[li];
        double acc = 0.0;
        for (int i = 0; i < t1; ++i) {
          for (long y = -hw; y <= hw; ++y) {
            const double k = K(t1 - i, x - y) - K(t0 - i, x - y);
            acc += k * k;
          }
        }
        exact += acc * c.dt() / c.lat.delta();
      }
    }
    exact /= static_cast<double>(p.base_steps.size() * p.time_sites.size());
    CHECK(std::abs(mom[li].mean - exact) < 4.0 * mom[li].se);
    CHECK(mom[li].lag == doctest::Approx(lags[li] * c.dt()));
  }
}

TEST_CASE("stored samples and fresh simulation give the same report") {
  const SIEConfig c = small("sin:1");
  const SIESolver s(c);
  const auto a = holder_report(s, kMinHolderReplicas, 2);
  const auto b = holder_report(run(s, kMinHolderReplicas));
  REQUIRE(a.size() == 4);
  REQUIRE(b.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].direction == b[i].direction);
    CHECK(a[i].q == b[i].q);
    CHECK(a[i].fitted_slope == b[i].fitted_slope);
    CHECK(a[i].pass == b[i].pass);
    CHECK(a[i].path_exponent_fitted == doctest::Approx(a[i].fitted_slope / (2.0 * a[i].q)));
  }
}

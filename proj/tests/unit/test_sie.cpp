#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "islt/errors.hpp"
#include "islt/kernels.hpp"
#include "islt/noise.hpp"
#include "islt/sie.hpp"

using namespace islt;
namespace fs = std::filesystem;

namespace {

SIEConfig tiny(int k, int d, std::string a, std::string u0) {
  SIEConfig c = SIEConfig::defaults(k, d);
  c.lat = Lattice(d == 1 ? 0.1 : 0.2, d, 1.0);
  c.horizon = 0.5;
  c.steps = 12;
  c.a = Coefficient::parse(a);
  c.u0 = InitialCondition::parse(u0);
  c.seed = 5;
  return c;
}

std::vector<long> steps_of(const SIEConfig& c, std::size_t site) {
  std::vector<long> x(static_cast<std::size_t>(c.params.dimension()));
  box_site_steps(c.lat.half_width(), c.params.dimension(), site, x.data());
  return x;
}

// U_j(x) = D_j(x) + sum_{i<j} sum_y K_{(j-i)dt}(x - y) a(U_i(y)) dW_i(y) delta^{-d/2}
std::vector<double> direct_volterra(const SIEConfig& c, const NoiseField& w, const std::vector<double>& det) {
  const std::size_t n = w.sites();
  const int d = c.params.dimension();
  std::vector<double> U = det;
  std::vector<long> diff(static_cast<std::size_t>(d));
  // K depends on the lag and on |x - y| per axis up to permutation
  std::map<std::vector<long>, double> memo;
  auto kernel = [&](int lag) {
    std::vector<long> key(diff.begin(), diff.end());
    for (long& v : key) v = std::labs(v);
    std::sort(key.begin(), key.end());
    key.push_back(lag);
    auto it = memo.find(key);
    if (it == memo.end()) it = memo.emplace(key, isltrw_kernel(c.params, c.lat, lag * c.dt(), diff)).first;
    return it->second;
  };
  for (int j = 1; j <= c.steps; ++j) {
    for (std::size_t x = 0; x < n; ++x) {
      const auto xs = steps_of(c, x);
      double acc = 0.0;
      for (int i = 0; i < j; ++i) {
        for (std::size_t y = 0; y < n; ++y) {
          const auto ys = steps_of(c, y);
          for (int a = 0; a < d; ++a) diff[a] = xs[a] - ys[a];
          acc += kernel(j - i) * c.a(U[i * n + y]) * w.at(i, y);
        }
      }
      U[j * n + x] = det[j * n + x] + acc * std::pow(c.lat.delta(), -0.5 * d);
    }
  }
  return U;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("islt-sie-" + name + "-" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("coefficient and initial condition presets") {
  CHECK(Coefficient::parse("sin:0.5")(1.0) == doctest::Approx(0.5 * std::sin(1.0)));
  CHECK(Coefficient::parse("linear:2")(3.0) == 6.0);
  CHECK(Coefficient::parse("const:1.5")(100.0) == 1.5);
  CHECK(Coefficient::parse("zero").is_zero());
  CHECK(Coefficient::parse(Coefficient::parse("sqrt:0.25").str()).str() == "sqrt:0.25");
  CHECK_THROWS_AS(Coefficient::parse("cubic:1"), DomainError);
  CHECK_THROWS_AS(Coefficient::parse("const:"), DomainError);
  const double x[] = {0.5, -0.5};
  CHECK(InitialCondition::parse("cosine")(x) == doctest::Approx(std::cos(0.5) * std::cos(0.5)));
  CHECK(InitialCondition::parse("gaussian:0.5,1")(x) == doctest::Approx(std::exp(-0.5)));
  CHECK(InitialCondition::parse("const:2")(x) == 2.0);
  CHECK_THROWS_AS(InitialCondition::parse("gaussian:1"), DomainError);
}

TEST_CASE("constant initial data stays constant") {
  const SIEConfig c = tiny(1, 2, "zero", "const:2.5");
  const std::vector<double> D = deterministic_part(c);
  for (double v : D) CHECK(v == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("cosine initial data: heat case decays at the lattice eigenvalue") {
  SIEConfig c = tiny(0, 2, "zero", "cosine");
  const std::vector<double> D = deterministic_part(c);
  const double delta = c.lat.delta();
  const double lambda = 2.0 * (1.0 - std::cos(delta)) / (delta * delta);
  const std::size_t n = static_cast<std::size_t>(c.lat.site_count());
  for (int m : {0, 5, 12}) {
    for (std::size_t s : {std::size_t{0}, n / 2, n - 3}) {
      const auto x = steps_of(c, s);
      const double u0 = std::cos(x[0] * delta) * std::cos(x[1] * delta);
      CHECK(D[m * n + s] == doctest::Approx(std::exp(-lambda * c.time(m)) * u0).epsilon(1e-12).scale(1e-12));
    }
  }
}

TEST_CASE("cosine initial data: beta = 1/2 follows the Laplace transform of Lambda") {
  // E exp(-lambda Lambda_{1/2}(t)) = exp(lambda^2 t) erfc(lambda sqrt(t))
  const SIEConfig c = tiny(1, 1, "zero", "cosine");
  const std::vector<double> D = deterministic_part(c);
  const double delta = c.lat.delta();
  const double lambda = (1.0 - std::cos(delta)) / (delta * delta);
  const std::size_t n = static_cast<std::size_t>(c.lat.site_count());
  for (int m : {1, 6, 12}) {
    const double t = c.time(m);
    const double laplace = std::exp(lambda * lambda * t) * std::erfc(lambda * std::sqrt(t));
    for (std::size_t s : {std::size_t{0}, std::size_t{4}, n / 2}) {
      const auto x = steps_of(c, s);
      CHECK(D[m * n + s] == doctest::Approx(laplace * std::cos(x[0] * delta)).epsilon(1e-8));
    }
  }
}

TEST_CASE("gaussian initial data equals the direct lattice sum") {
  const SIEConfig c = tiny(1, 1, "zero", "gaussian:0.2,0.3");
  const std::vector<double> D = deterministic_part(c);
  const std::size_t n = static_cast<std::size_t>(c.lat.site_count());
  const double delta = c.lat.delta();
  for (int m : {3, 12}) {
    for (long x : {-4L, 0L, 7L}) {
      double ref = 0.0;
      for (long y = -400; y <= 400; ++y) {
        const long diff[] = {x - y};
        const double ys[] = {y * delta};
        ref += isltrw_kernel(c.params, c.lat, c.time(m), diff) * c.u0(ys);
      }
      const long xs[] = {x};
      const std::size_t s = box_site_index(c.lat.half_width(), 1, xs);
      CHECK(D[m * n + s] == doctest::Approx(ref).epsilon(1e-10));
      CHECK(deterministic_part(c, c.time(m), xs) == doctest::Approx(ref).epsilon(1e-10));
    }
  }
}

TEST_CASE("FFT scheme equals the direct Volterra sum") {
  for (int d : {1, 2}) {
    const SIEConfig c = tiny(1, d, "sin:0.5", "const:1");
    const SIESolver solver(c);
    const NoiseField w(c.seed, 3, c.lat, c.steps, c.dt());
    auto ws = solver.workspace();
    const FieldSample f = solver.solve(w, *ws);
    const std::vector<double> ref = direct_volterra(c, w, solver.deterministic());
    REQUIRE(ref.size() == f.U.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(ref[i] - f.U[i]));
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("zero coefficient returns the deterministic part exactly") {
  const SIEConfig c = tiny(2, 1, "zero", "gaussian:0,0.5");
  const SIESolver solver(c);
  const FieldSample f = solver.solve(std::uint64_t{0});
  CHECK(f.U == f.D);
}

TEST_CASE("solutions are reproducible per replica") {
  const SIEConfig c = tiny(1, 1, "const:1", "zero");
  const SIESolver solver(c);
  CHECK(solver.solve(std::uint64_t{4}).U == solver.solve(std::uint64_t{4}).U);
  CHECK(solver.solve(std::uint64_t{4}).U != solver.solve(std::uint64_t{5}).U);
}

TEST_CASE("exact variance equals the brute-force kernel sum") {
  const SIEConfig c = tiny(1, 1, "const:2", "zero");
  const SIESolver solver(c);
  const int hw = c.lat.half_width();
  for (int m : {1, 7, 12}) {
    for (long x : {0L, 6L}) {
      double acc = 0.0;
      for (int lag = 1; lag <= m; ++lag) {
        for (long y = -hw; y <= hw; ++y) {
          const long diff[] = {x - y};
          const double k = isltrw_kernel(c.params, c.lat, lag * c.dt(), diff);
          acc += k * k;
        }
      }
      const double ref = 4.0 * c.dt() / c.lat.delta() * acc;
      const long xs[] = {x};
      CHECK(solver.exact_variance(m, xs) == doctest::Approx(ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("Gaussian variance oracle") {
  SIEConfig c = tiny(1, 1, "const:1", "zero");
  c.steps = 32;
  const SIESolver solver(c);
  const MomentSummary m = simulate_moments(solver, 600, 2);
  const long centre[] = {0};
  const long off[] = {5};
  const VarianceCheck a = variance_check(solver, m, c.steps, centre);
  const VarianceCheck b = variance_check(solver, m, c.steps / 2, off);
  CHECK(std::abs(a.z) < 4.0);
  CHECK(std::abs(b.z) < 4.0);
  CHECK(a.exact > 0.0);
  // Gaussian field: excess kurtosis near zero
  CHECK(std::abs(m.excess_kurtosis(c.steps, solver.sites() / 2)) < 0.5);
}

TEST_CASE("replica reduction does not depend on the thread count") {
  const SIEConfig c = tiny(1, 1, "sin:1", "const:1");
  const SIESolver solver(c);
  const MomentSummary one = simulate_moments(solver, 37, 1);
  const MomentSummary three = simulate_moments(solver, 37, 3);
  for (int m = 0; m <= c.steps; ++m) {
    for (std::size_t s = 0; s < solver.sites(); ++s) {
      CHECK(one.mean(MomentSummary::kR1, m, s) == three.mean(MomentSummary::kR1, m, s));
      CHECK(one.variance(m, s) == three.variance(m, s));
    }
  }
  const auto sum = reduce_replicas(10, 4, 1, [](int r, int, std::vector<double>& out) { out[0] = 0.1 * r; });
  const auto ref = reduce_replicas(10, 1, 1, [](int r, int, std::vector<double>& out) { out[0] = 0.1 * r; });
  CHECK(sum == ref);
}

TEST_CASE("Picard iterates converge to the explicit solution") {
  const SIEConfig c = tiny(1, 1, "sin:0.5", "const:1");
  const SIESolver solver(c);
  const PicardReport r = picard_solve(solver, 20, 8);
  REQUIRE(r.dstar.size() == 8);
  CHECK_FALSE(r.diverged);
  for (std::size_t n = 1; n < r.dstar.size(); ++n) CHECK(r.dstar[n] <= r.dstar[n - 1]);
  CHECK(r.explicit_gap < 1e-12);

  const SIESolver zero(tiny(1, 1, "zero", "const:1"));
  const PicardReport z = picard_solve(zero, 20, 3);
  for (double v : z.dstar) CHECK(v == 0.0);
}

TEST_CASE("overflow is reported with context") {
  const SIEConfig c = tiny(1, 1, "linear:1e200", "const:1e200");
  const SIESolver solver(c);
  CHECK_THROWS_AS(solver.solve(std::uint64_t{0}), NumericalError);
}

TEST_CASE("field samples round trip") {
  const fs::path dir = scratch_dir("fields");
  const SIEConfig c = tiny(1, 2, "const:1", "cosine");
  const SIESolver solver(c);
  const FieldSample f = solver.solve(std::uint64_t{2});
  f.save(dir / "f.bin");
  const FieldSample g = FieldSample::load(dir / "f.bin");
  CHECK(g.U == f.U);
  CHECK(g.D == f.D);
  CHECK(g.replica == 2);
  CHECK(g.config.params == c.params);
  CHECK(g.config.steps == c.steps);
  CHECK(g.config.a.str() == c.a.str());
  f.write_csv(dir / "f.csv");
  std::ifstream in(dir / "f.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,x1,x2,U,D");
  fs::remove_all(dir);
}

TEST_CASE("solver rejects a mismatched kernel table") {
  const SIEConfig c = tiny(1, 1, "const:1", "zero");
  SIEConfig other = c;
  other.steps = 10;
  CHECK_THROWS(SIESolver(c, KernelTable::build(sie_table_spec(other))));
  const SIESolver ok(c, KernelTable::build(sie_table_spec(c)));
  CHECK(ok.solve(std::uint64_t{1}).U == SIESolver(c).solve(std::uint64_t{1}).U);
}

TEST_CASE("moment envelope") {
  std::vector<double> t, v, fast;
  for (int i = 0; i <= 20; ++i) {
    t.push_back(i / 20.0);
    v.push_back(std::exp(t.back()));
    fast.push_back(std::exp(200.0 * t.back()));
  }
  const MomentEnvelope e = moment_envelope(t, v, 1);
  CHECK(e.C == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(e.pass);
  CHECK_FALSE(moment_envelope(t, fast, 1).pass);
}

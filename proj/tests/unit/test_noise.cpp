#include <doctest.h>

#include <cmath>
#include <vector>

#include "islt/errors.hpp"
#include "islt/noise.hpp"

using namespace islt;

TEST_CASE("same seed, same noise") {
  const Lattice lat(0.1, 2, 0.5);
  const NoiseField a(3, 4, lat, 16, 0.01);
  const NoiseField b(3, 4, lat, 16, 0.01);
  const NoiseField c(3, 5, lat, 16, 0.01);
  const NoiseField e(9, 4, lat, 16, 0.01);
  REQUIRE(a.sites() == 121);
  bool differs_replica = false, differs_seed = false;
  for (int m = 0; m < 16; ++m) {
    for (std::size_t s = 0; s < a.sites(); ++s) {
      CHECK(a.at(m, s) == b.at(m, s));
      differs_replica = differs_replica || a.at(m, s) != c.at(m, s);
      differs_seed = differs_seed || a.at(m, s) != e.at(m, s);
    }
  }
  CHECK(differs_replica);
  CHECK(differs_seed);
}

TEST_CASE("nested lattices share streams at common points") {
  const Lattice coarse(0.1, 1, 1.0);
  const Lattice fine(0.05, 1, 1.0);
  const long c[] = {3};
  const long f[] = {6};
  CHECK(site_stream_seed(1, 0, coarse, c) == site_stream_seed(1, 0, fine, f));
  const long g[] = {7};
  CHECK(site_stream_seed(1, 0, coarse, c) != site_stream_seed(1, 0, fine, g));

  const NoiseField nc(1, 0, coarse, 8, 0.02);
  const NoiseField nf(1, 0, fine, 8, 0.02);
  const long cs[] = {3};
  const long fs[] = {6};
  const std::size_t ic = box_site_index(coarse.half_width(), 1, cs);
  const std::size_t jf = box_site_index(fine.half_width(), 1, fs);
  for (int m = 0; m < 8; ++m) CHECK(nc.at(m, ic) == nf.at(m, jf));
}

TEST_CASE("increments have variance dt") {
  const Lattice lat(0.05, 1, 2.0);
  const double dt = 1.0 / 256;
  const NoiseField n(11, 0, lat, 256, dt);
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  const double count = static_cast<double>(n.steps()) * n.sites();
  for (int m = 0; m < n.steps(); ++m) {
    for (std::size_t s = 0; s < n.sites(); ++s) {
      const double v = n.at(m, s);
      s1 += v;
      s2 += v * v;
      s4 += v * v * v * v;
    }
  }
  const double mean = s1 / count, var = s2 / count;
  CHECK(std::abs(mean) < 5.0 * std::sqrt(dt / count));
  const double se = std::sqrt((s4 / count - var * var) / count);
  CHECK(std::abs(var - dt) < 5.0 * se);
}

TEST_CASE("box indexing round trip") {
  const int hw = 3, d = 3;
  long out[3];
  std::size_t count = 0;
  for (std::size_t i = 0; i < 7 * 7 * 7; ++i) {
    box_site_steps(hw, d, i, out);
    CHECK(box_site_index(hw, d, std::span<const long>(out, 3)) == i);
    ++count;
  }
  box_site_steps(hw, d, 0, out);
  CHECK(out[0] == -3);
  CHECK(out[2] == -3);
  box_site_steps(hw, d, 1, out);
  CHECK(out[2] == -2);
  const long outside[] = {4, 0, 0};
  CHECK_THROWS_AS(box_site_index(hw, d, outside), DomainError);
}

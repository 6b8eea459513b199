#include "islt/noise.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>

#include "islt/errors.hpp"
#include "islt/kernel_table.hpp"

namespace islt {

void box_site_steps(int half_width, int d, std::size_t index, long* out) {
  const std::size_t side = static_cast<std::size_t>(2 * half_width + 1);
  for (int i = d - 1; i >= 0; --i) {
    out[i] = static_cast<long>(index % side) - half_width;
    index /= side;
  }
}

std::size_t box_site_index(int half_width, int d, std::span<const long> steps) {
  const std::size_t side = static_cast<std::size_t>(2 * half_width + 1);
  std::size_t idx = 0;
  for (int i = 0; i < d; ++i) {
    if (std::labs(steps[i]) > half_width) throw DomainError("site outside truncation box");
    idx = idx * side + static_cast<std::size_t>(steps[i] + half_width);
  }
  return idx;
}

std::uint64_t site_stream_seed(std::uint64_t seed, std::uint64_t replica, const Lattice& lat,
                               std::span<const long> steps) {
  std::uint64_t h = fnv1a64(&seed, sizeof(seed));
  h = fnv1a64(&replica, sizeof(replica), h);
  const std::int64_t q = lat.reciprocal_denominator();
  for (long n : steps) {
    if (q > 0) {
      std::int64_t num = n;
      std::int64_t den = q;
      const std::int64_t g = std::gcd(std::llabs(num), den);
      num /= g;
      den /= g;
      h = fnv1a64(&num, sizeof(num), h);
      h = fnv1a64(&den, sizeof(den), h);
    } else {
      const double x = static_cast<double>(n) * lat.delta();
      h = fnv1a64(&x, sizeof(x), h);
    }
  }
  return h;
}

NoiseField::NoiseField(std::uint64_t seed, std::uint64_t replica, const Lattice& lat, int steps,
                       double dt)
    : seed_(seed), replica_(replica), steps_(steps), sites_(static_cast<std::size_t>(lat.site_count())), dt_(dt) {
  if (steps < 0 || !(dt > 0.0)) throw DomainError("NoiseField: need steps >= 0 and dt > 0");
  inc_.assign(static_cast<std::size_t>(steps) * sites_, 0.0);
  const int d = lat.dimension();
  const int hw = lat.half_width();
  const double sd = std::sqrt(dt);
  long off[ModelParams::kMaxDimension];
  for (std::size_t s = 0; s < sites_; ++s) {
    box_site_steps(hw, d, s, off);
    std::mt19937_64 rng(site_stream_seed(seed, replica, lat, std::span<const long>(off, d)));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < steps; ++i) inc_[static_cast<std::size_t>(i) * sites_ + s] = sd * normal(rng);
  }
}

}  // namespace islt

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "islt/params.hpp"

namespace islt {

// Seed of the Brownian stream attached to one lattice site. Sites are keyed
// by their coordinates as reduced fractions n/q when delta = 1/q, so nested
// lattices (delta and delta/2, ...) share streams at common points.
std::uint64_t site_stream_seed(std::uint64_t seed, std::uint64_t replica, const Lattice& lat,
                               std::span<const long> steps);

// Brownian increments on the truncation box [-l, l]^d, one N(0, dt) draw per
// site and step. Sites are ordered row-major with offsets -n_l..n_l per axis.
class NoiseField {
 public:
  NoiseField(std::uint64_t seed, std::uint64_t replica, const Lattice& lat, int steps, double dt);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t replica() const noexcept { return replica_; }
  int steps() const noexcept { return steps_; }
  std::size_t sites() const noexcept { return sites_; }
  double dt() const noexcept { return dt_; }
  // Increment over [t_i, t_{i+1}] at a site.
  double at(int step, std::size_t site) const { return inc_[static_cast<std::size_t>(step) * sites_ + site]; }
  const double* step(int i) const { return inc_.data() + static_cast<std::size_t>(i) * sites_; }

 private:
  std::uint64_t seed_;
  std::uint64_t replica_;
  int steps_;
  std::size_t sites_;
  double dt_;
  std::vector<double> inc_;
};

inline NoiseField gen_noise(std::uint64_t seed, std::uint64_t replica, const Lattice& lat,
                            int steps, double dt) {
  return NoiseField(seed, replica, lat, steps, dt);
}

// Offsets (in steps) of box site `index`, row-major.
void box_site_steps(int half_width, int d, std::size_t index, long* out);
std::size_t box_site_index(int half_width, int d, std::span<const long> steps);

}  // namespace islt

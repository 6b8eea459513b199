#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace islt {

// Index beta = 1/2^k of the inverse stable subordinator together with the
// spatial dimension. k = 0 is the plain Brownian case Lambda_1(t) = t.
class ModelParams {
 public:
  static constexpr int kMaxLevel = 3;
  static constexpr int kMaxDimension = 5;

  ModelParams() = default;

  // Throws DomainError unless 0 <= k <= kMaxLevel and 1 <= d <= kMaxDimension.
  static ModelParams make(int k, int d);

  int level() const noexcept { return k_; }
  int nu() const noexcept { return 1 << k_; }
  double beta() const noexcept { return 1.0 / nu(); }
  int dimension() const noexcept { return d_; }
  bool degenerate() const noexcept { return k_ == 0; }

  // d in {1,2,3}: the dimensions in which random-field solutions exist.
  bool sie_dimension() const noexcept { return d_ >= 1 && d_ <= 3; }
  void require_sie_dimension(std::string_view op) const;

  ModelParams with_dimension(int d) const { return make(k_, d); }

  std::string beta_string() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  ModelParams(int k, int d) : k_(k), d_(d) {}
  int k_ = 1;
  int d_ = 1;
};

// Parses "1", "1/2", "1/4", "1/8" or "1/2^k". Decimal input such as "0.5" is
// rejected with DomainError so unsupported indices never slip through.
int parse_beta_level(std::string_view text);

// The lattice delta * Z^d, with a truncation radius l used by the truncated
// SIE (sites delta * Z^d intersected with [-l, l]^d).
class Lattice {
 public:
  Lattice() = default;
  Lattice(double delta, int d, double radius = 1.0);

  double delta() const noexcept { return delta_; }
  int dimension() const noexcept { return d_; }
  double radius() const noexcept { return radius_; }

  // floor(l / delta): number of sites on each side of the origin per axis.
  int half_width() const noexcept;
  int sites_per_axis() const noexcept { return 2 * half_width() + 1; }
  std::int64_t site_count() const noexcept;

  // Converts a coordinate to a step index; throws DomainError when the
  // coordinate is not on the lattice.
  long to_steps(double coordinate) const;

  // If delta = 1/q for an integer q, returns q; otherwise 0.
  std::int64_t reciprocal_denominator() const noexcept;

  friend bool operator==(const Lattice&, const Lattice&) = default;

 private:
  double delta_ = 0.1;
  int d_ = 1;
  double radius_ = 1.0;
};

}  // namespace islt

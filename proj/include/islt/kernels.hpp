#pragma once

#include <span>
#include <vector>

#include "islt/params.hpp"
#include "islt/subordinator.hpp"

namespace islt {

// Gaussian heat kernel e^{-r^2/2s} / (2 pi s)^{d/2}.
double bm_density(int d, double s, std::span<const double> x);
double bm_density_r2(int d, double s, double r2);

// Continuum kernel int_0^inf K^{BM^d}_{s;x} K^{Lambda}_{t;0,s} ds. Equals
// bm_density for beta = 1. Returns +inf at x = 0 when d >= 2 and beta < 1.
double isltbm_kernel(const ModelParams& p, double t, std::span<const double> x);
double isltbm_kernel_r2(const ModelParams& p, double t, double r2);

// One-dimensional walk probabilities at the inner nodes of a time t:
// row(n)[j] = e^{-x_j} I_n(x_j), x_j = s_j / delta^2, for n = 0..max_steps.
class LatticeRows {
 public:
  LatticeRows(const ModelParams& p, double delta, double t, int max_steps);

  int max_steps() const noexcept { return max_steps_; }
  std::size_t nodes() const noexcept { return weights_.size(); }
  const double* row(int n) const { return data_.data() + static_cast<std::size_t>(n) * nodes(); }
  const std::vector<double>& weights() const noexcept { return weights_; }

  // sum_j W_j prod_i row(|a_i|)[j]; identical summation order for every caller.
  double kernel(std::span<const long> steps) const;

 private:
  int max_steps_;
  bool at_zero_ = false;
  std::vector<double> weights_;
  std::vector<double> data_;
};

// Lattice kernel int_0^inf K^{RW}_{s;x} K^{Lambda}_{t;0,s} ds (no factor 2).
// t = 0 gives the indicator of the origin.
double isltrw_kernel(const ModelParams& p, const Lattice& lat, double t,
                     std::span<const long> steps);
double isltrw_kernel(const ModelParams& p, const Lattice& lat, double t,
                     std::span<const double> x);

// Smallest radius R (in steps) with sum_{|n| > R} of the one-dimensional
// marginal of the lattice kernel at time t below `tail`.
int tail_radius(const ModelParams& p, double delta, double t, double tail = 1e-10);

}  // namespace islt

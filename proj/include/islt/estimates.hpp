#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "islt/params.hpp"
#include "islt/quadrature.hpp"

namespace islt {

// int_{R^d} K(t, x) dx by radial adaptive quadrature of the kernel itself.
double continuum_mass(const ModelParams& p, double t);

// int_{R^d} K(t, x)^2 dx, reduced to int (2 pi w)^{-d/2} g_t(w) dw where g_t is
// the density of Lambda(t) + Lambda'(t). d in {1,2,3}.
double l2_norm_continuum(const ModelParams& p, double t);

// I(eps) = int_{w >= eps} (2 pi w)^{-d/2} g_t(w) dw for any d (no dimension gate).
double divergence_integral(const ModelParams& p, double t, double eps);

struct DivergenceReport {
  std::vector<double> eps;
  std::vector<double> values;
  bool strictly_increasing = false;
  double growth_ratio = 0.0;  // I(eps_last) / I(eps_first)
  double tail_change = 0.0;   // (I(eps_last) - I(eps_at_1e-4)) / I(eps_at_1e-4)
};
DivergenceReport divergence_check(const ModelParams& p, double t, std::span<const double> eps);

// Continuum kernel for beta < 1 or lattice kernel with step delta: the
// quadratic form K~(u, v) = int int G(s + s') K^L(u, s) K^L(v, s') ds ds' with
// G(w) = (2 pi w)^{-d/2} (continuum) or [e^{-w/d^2} I_0(w/d^2)]^d (lattice),
// evaluated on one common graded rule in s so differences never cancel.
class TwoTimeKernel {
 public:
  TwoTimeKernel(const ModelParams& p, double max_time, std::optional<double> delta = {});

  double operator()(double u, double v) const;
  // int int G (p(a,.) - p(b,.)) (p(a,.) - p(b,.)) = K~(a,a) + K~(b,b) - 2 K~(a,b).
  double difference(double a, double b) const;
  double max_time() const noexcept { return max_time_; }

 private:
  std::vector<double> weights(double t) const;
  double green(double w) const;
  double form(const std::vector<double>& a, const std::vector<double>& b) const;

  ModelParams params_;
  double max_time_;
  std::optional<double> delta_;
  Rule rule_;
  std::vector<double> g_;  // J x J, row-major
};

// int_0^t int [K_{t-s;x} - K_{r-s;x}]^2 dx ds with K = 0 at negative times,
// via the two-time kernel identity.
double temporal_difference_integral(const TwoTimeKernel& kt, double t, double r);
double temporal_difference_integral(const ModelParams& p, double t, double r);
double temporal_difference_lattice(const ModelParams& p, double delta, double t, double r);

// Brute-force d = 1 evaluation by spatial quadrature of the kernel itself.
double temporal_difference_direct(const ModelParams& p, double t, double r);

// int_0^t int [K_{s;x} - K_{s;x+z}]^2 dx ds with |z| = z.
double spatial_difference_integral(const ModelParams& p, double t, double z);
// Lattice twin, z = z_steps * delta along the first axis.
double spatial_difference_lattice(const ModelParams& p, double delta, double t, long z_steps);

struct LatticeL2 {
  double value = 0.0;           // sum_x K(t, x)^2
  double continuum_ratio = 0.0; // value / (delta^d * l2_norm_continuum)
  double tail_mass = 0.0;       // 1 - row sum inside the radius used
  int radius = 0;
  bool truncation_ok = false;   // tail_mass <= 1e-8
};
LatticeL2 l2_norm_lattice(const ModelParams& p, double delta, double t, int radius = 0);

// Memory terms c_k t^{k beta - 1} / 2^k times Delta^k u0, top term c Delta^nu u.
// kDefault: c_k = E Lambda_1^k, c = 1/(2 nu). kCaputo: c_k = 1/Gamma(k beta), c = 2^-nu.
enum class DdeForm { kDefault, kCaputo };

struct DdeResidual {
  double residual = 0.0;
  double time_derivative = 0.0;
  double memory = 0.0;
  double top = 0.0;
  double scale = 0.0;  // max(|dK/dt|, |top|)
  double relative() const { return scale > 0.0 ? std::abs(residual) / scale : std::abs(residual); }
};

// Residual of the memoryful differential-difference equation at (t, x).
// h = 0 selects t / 200. fd_order is 2 or 4 (central differences).
DdeResidual dde_residual(const ModelParams& p, double delta, double t, std::span<const long> x,
                         double h = 0.0, DdeForm form = DdeForm::kDefault, int fd_order = 4);

// K^{RW}(t, x) / (K^{BM}(t, x) delta^d) for each delta; x must lie on every lattice.
std::vector<double> continuum_limit_report(const ModelParams& p, double t,
                                           std::span<const double> x,
                                           std::span<const double> deltas);

}  // namespace islt

#include "islt/kernels.hpp"

#include <boost/math/constants/constants.hpp>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "islt/bessel.hpp"
#include "islt/errors.hpp"

namespace islt {

double bm_density_r2(int d, double s, double r2) {
  if (!(s > 0.0)) throw DomainError("bm_density: s must be > 0");
  const double two_pi_s = 2.0 * boost::math::constants::pi<double>() * s;
  return std::exp(-r2 / (2.0 * s)) / std::pow(two_pi_s, 0.5 * d);
}

double bm_density(int d, double s, std::span<const double> x) {
  if (static_cast<int>(x.size()) != d) throw DomainError("bm_density: point dimension mismatch");
  double r2 = 0.0;
  for (double xi : x) r2 += xi * xi;
  return bm_density_r2(d, s, r2);
}

double isltbm_kernel_r2(const ModelParams& p, double t, double r2) {
  if (!(t > 0.0)) throw DomainError("isltbm_kernel: t must be > 0");
  const int d = p.dimension();
  if (p.degenerate()) return bm_density_r2(d, t, r2);
  if (r2 == 0.0 && d >= 2) return std::numeric_limits<double>::infinity();
  InnerRule rule = inner_rule(p, t);
  double acc = 0.0;
  for (std::size_t j = 0; j < rule.size(); ++j) acc += rule.w[j] * bm_density_r2(d, rule.s[j], r2);
  return acc;
}

double isltbm_kernel(const ModelParams& p, double t, std::span<const double> x) {
  if (static_cast<int>(x.size()) != p.dimension()) {
    throw DomainError("isltbm_kernel: point dimension mismatch");
  }
  double r2 = 0.0;
  for (double xi : x) r2 += xi * xi;
  return isltbm_kernel_r2(p, t, r2);
}

LatticeRows::LatticeRows(const ModelParams& p, double delta, double t, int max_steps)
    : max_steps_(max_steps) {
  if (t < 0.0) throw DomainError("lattice kernel: t must be >= 0");
  if (max_steps < 0) throw DomainError("lattice kernel: max_steps must be >= 0");
  if (t == 0.0) {
    at_zero_ = true;
    weights_ = {1.0};
    data_.assign(static_cast<std::size_t>(max_steps + 1), 0.0);
    data_[0] = 1.0;
    return;
  }
  InnerRule rule = inner_rule(p, t);
  weights_ = rule.w;
  const std::size_t J = rule.size();
  data_.assign(static_cast<std::size_t>(max_steps + 1) * J, 0.0);
  std::vector<double> buf;
  const double inv_d2 = 1.0 / (delta * delta);
  for (std::size_t j = 0; j < J; ++j) {
    scaled_bessel_row(rule.s[j] * inv_d2, max_steps, buf);
    for (int n = 0; n <= max_steps; ++n) data_[static_cast<std::size_t>(n) * J + j] = buf[n];
  }
}

double LatticeRows::kernel(std::span<const long> steps) const {
  const std::size_t J = nodes();
  const double* rows[ModelParams::kMaxDimension];
  const std::size_t d = steps.size();
  for (std::size_t i = 0; i < d; ++i) {
    long a = std::labs(steps[i]);
    if (a > max_steps_) throw SizeError("lattice kernel: displacement outside computed rows");
    rows[i] = row(static_cast<int>(a));
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    double prod = weights_[j];
    for (std::size_t i = 0; i < d; ++i) prod *= rows[i][j];
    acc += prod;
  }
  return acc;
}

double isltrw_kernel(const ModelParams& p, const Lattice& lat, double t,
                     std::span<const long> steps) {
  if (static_cast<int>(steps.size()) != p.dimension() || lat.dimension() != p.dimension()) {
    throw DomainError("isltrw_kernel: dimension mismatch");
  }
  long amax = 0;
  for (long a : steps) amax = std::max(amax, std::labs(a));
  LatticeRows rows(p, lat.delta(), t, static_cast<int>(amax));
  return rows.kernel(steps);
}

double isltrw_kernel(const ModelParams& p, const Lattice& lat, double t,
                     std::span<const double> x) {
  std::vector<long> steps;
  for (double xi : x) steps.push_back(lat.to_steps(xi));
  return isltrw_kernel(p, lat, t, steps);
}

int tail_radius(const ModelParams& p, double delta, double t, double tail) {
  if (!(t > 0.0) || !(delta > 0.0)) throw DomainError("tail_radius: need t > 0 and delta > 0");
  const double spread = p.degenerate() ? t : std::pow(t, p.beta()) * unit_profile(p.level()).cutoff();
  const int nmax = bessel_start_order(spread / (delta * delta));
  LatticeRows rows(p, delta, t, nmax);
  const auto& w = rows.weights();
  auto marginal = [&](int n) {
    const double* row = rows.row(n);
    double m = 0.0;
    for (std::size_t j = 0; j < rows.nodes(); ++j) m += w[j] * row[j];
    return m;
  };
  double inside = marginal(0);
  int r = 0;
  while (r < nmax && 1.0 - inside > tail) {
    ++r;
    inside += 2.0 * marginal(r);
  }
  return r;
}

}  // namespace islt

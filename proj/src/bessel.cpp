#include "islt/bessel.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/constants/constants.hpp>
#include <cmath>
#include <cstdlib>

#include "islt/errors.hpp"

namespace islt {

int bessel_start_order(double x) {
  return static_cast<int>(std::ceil(40.0 * std::sqrt(x) + 60.0));
}

void scaled_bessel_row(double x, int nmax, std::vector<double>& out) {
  if (x < 0.0 || !std::isfinite(x)) throw DomainError("scaled_bessel_row: x must be finite and >= 0");
  if (nmax < 0) throw DomainError("scaled_bessel_row: nmax must be >= 0");
  out.assign(static_cast<std::size_t>(nmax) + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return;
  }
  const int start = bessel_start_order(x);
  std::vector<double> v(static_cast<std::size_t>(start) + 2, 0.0);
  v[start + 1] = 0.0;
  v[start] = 1.0;
  const double two_over_x = 2.0 / x;
  for (int n = start; n >= 1; --n) {
    v[n - 1] = v[n + 1] + two_over_x * n * v[n];
    if (v[n - 1] > 1e250) {
      for (int m = n - 1; m <= start; ++m) v[m] *= 1e-250;
    }
  }
  double norm = 0.0;
  for (int n = start; n >= 1; --n) norm += v[n];
  norm = v[0] + 2.0 * norm;
  const int top = std::min(nmax, start);
  for (int n = 0; n <= top; ++n) out[n] = v[n] / norm;
}

double scaled_bessel(double x, long n) {
  n = std::labs(n);
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  if (n > bessel_start_order(x)) return 0.0;
  std::vector<double> row;
  scaled_bessel_row(x, static_cast<int>(n), row);
  return row[n];
}

double scaled_bessel_fast(double x, long n) {
  n = std::labs(n);
  if (x < 0.0) throw DomainError("scaled_bessel_fast: x must be >= 0");
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  if (x <= 600.0) {
    return std::exp(-x) * boost::math::cyl_bessel_i(static_cast<double>(n), x);
  }
  const double mu = 4.0 * static_cast<double>(n) * static_cast<double>(n);
  if (mu < 0.05 * x) {
    double term = 1.0;
    double acc = 1.0;
    for (int k = 1; k < 40; ++k) {
      const double odd = 2.0 * k - 1.0;
      term *= -(mu - odd * odd) / (8.0 * k * x);
      acc += term;
      if (std::abs(term) < 1e-17 * std::abs(acc)) break;
    }
    return acc / std::sqrt(2.0 * boost::math::constants::pi<double>() * x);
  }
  return scaled_bessel(x, n);
}

double rw_density_1d(double delta, double t, long n) {
  if (t < 0.0) throw DomainError("rw_density: t must be >= 0");
  if (!(delta > 0.0)) throw DomainError("rw_density: delta must be > 0");
  return scaled_bessel(t / (delta * delta), n);
}

double rw_density_steps(const Lattice& lat, double t, std::span<const long> steps) {
  if (static_cast<int>(steps.size()) != lat.dimension()) {
    throw DomainError("rw_density: point dimension does not match lattice");
  }
  double p = 1.0;
  for (long n : steps) p *= rw_density_1d(lat.delta(), t, n);
  return p;
}

double rw_density(const Lattice& lat, double t, std::span<const double> x) {
  std::vector<long> steps;
  for (double xi : x) steps.push_back(lat.to_steps(xi));
  return rw_density_steps(lat, t, steps);
}

}  // namespace islt

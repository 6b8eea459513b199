#pragma once

#include <span>
#include <vector>

#include "islt/params.hpp"

namespace islt {

// Number of orders carried by the backward recurrence at argument x; every
// e^{-x} I_n(x) with n above it is treated as zero.
int bessel_start_order(double x);

// out[n] = e^{-x} I_n(x) for n = 0..nmax (x >= 0). Computed by Miller's
// backward recurrence normalised with e^{-x}(I_0 + 2 sum I_n) = 1, so the
// result for a given n does not depend on nmax.
void scaled_bessel_row(double x, int nmax, std::vector<double>& out);
double scaled_bessel(double x, long n);

// Single value e^{-x} I_n(x) without a full recurrence: Boost's I_n for
// moderate x, the large-argument expansion when x >> n^2, Miller otherwise.
double scaled_bessel_fast(double x, long n);

// One-dimensional continuous-time symmetric walk on delta Z with jump rate
// 1/delta^2: P(X_t = n delta) = e^{-t/delta^2} I_n(t/delta^2).
double rw_density_1d(double delta, double t, long n);

// Product over coordinates; x is given as integer step counts.
double rw_density_steps(const Lattice& lat, double t, std::span<const long> steps);

// Same with real coordinates; throws DomainError off the lattice.
double rw_density(const Lattice& lat, double t, std::span<const double> x);

}  // namespace islt

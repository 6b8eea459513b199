#pragma once

#include <vector>

#include "islt/chebyshev.hpp"
#include "islt/params.hpp"
#include "islt/quadrature.hpp"

namespace islt {

// (1/sqrt(pi t)) exp(-s^2 / 4t): density of |B(t)| for a BM with variance 2t.
double half_stable_density(double t, double s);

// Density of Lambda_beta(1) (k >= 1) and of the sum of two independent copies.
// Everything at other times follows from self-similarity.
class UnitProfile {
 public:
  explicit UnitProfile(int k);

  int level() const noexcept { return k_; }
  double density(double y) const;
  double sum_density(double w) const { return sum_(w); }
  // Beyond this point the unit density is below 1e-25.
  double cutoff() const noexcept { return cutoff_; }
  // Composite rule on [0, cutoff] with weights w_j * density(y_j).
  const Rule& inner() const noexcept { return inner_; }

 private:
  int k_;
  double cutoff_ = 0.0;
  PiecewiseChebyshev density_;
  PiecewiseChebyshev sum_;
  Rule inner_;
};

// Built once per level and shared (thread-safe lazy initialisation).
const UnitProfile& unit_profile(int k);

// Inner-time nodes s_j = t^beta y_j and weights W_j for the law of Lambda_beta(t).
// For k = 0 this is the single node s = t.
struct InnerRule {
  std::vector<double> s;
  std::vector<double> w;
  std::size_t size() const noexcept { return s.size(); }
};

InnerRule inner_rule(const ModelParams& p, double t);

// Density of Lambda_beta(t) at s. Requires level() >= 1: for k = 0 the
// variable is the point mass s = t and callers take the degenerate path.
class SubordinatorDensity {
 public:
  explicit SubordinatorDensity(const ModelParams& p);

  double operator()(double t, double s) const;
  double unit(double y) const { return profile_->density(y); }
  // Density of Lambda(t) + Lambda'(t) for two independent copies.
  double sum(double t, double w) const;
  double cutoff(double t) const;
  const ModelParams& params() const noexcept { return params_; }

 private:
  ModelParams params_;
  const UnitProfile* profile_;
};

double isl_density(const ModelParams& p, double t, double s);

// One composition step evaluated directly by adaptive quadrature:
// int_0^inf K^{k-1}(t, u) K^{1/2}(u, s) du. Used to cross-check the profile.
double composed_density(const ModelParams& p, double t, double s, double tol = 1e-11);

// E_{beta,kappa} = E[Lambda_beta(1)^kappa] / kappa!, kappa = 0..nu-1, by quadrature.
std::vector<double> moments(const ModelParams& p);

}  // namespace islt

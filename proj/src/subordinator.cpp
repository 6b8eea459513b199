#include "islt/subordinator.hpp"

#include <array>
#include <boost/math/constants/constants.hpp>
#include <cmath>
#include <memory>
#include <mutex>

#include "islt/errors.hpp"

namespace islt {

namespace {

constexpr double kTailFloor = 1e-25;
constexpr double kPanelWidth = 0.5;
constexpr int kDegree = 16;
constexpr int kMaxPanels = 600;
constexpr double kProfileTol = 1e-13;
// Profile values are O(1) near the origin; errors below this are irrelevant.
constexpr double kAbsFloor = 1e-20;

double unit_half_stable(double y) {
  return std::exp(-0.25 * y * y) / std::sqrt(boost::math::constants::pi<double>());
}

}  // namespace

double half_stable_density(double t, double s) {
  if (!(t > 0.0)) throw DomainError("half_stable_density: t must be > 0");
  if (s < 0.0) throw DomainError("half_stable_density: s must be >= 0");
  return std::exp(-s * s / (4.0 * t)) / std::sqrt(boost::math::constants::pi<double>() * t);
}

UnitProfile::UnitProfile(int k) : k_(k) {
  if (k < 1 || k > ModelParams::kMaxLevel) throw DomainError("UnitProfile: k out of range");
  const double two_over_sqrt_pi = 2.0 / std::sqrt(boost::math::constants::pi<double>());
  if (k == 1) {
    cutoff_ = 2.0 * std::sqrt(std::log(1.0 / (kTailFloor * std::sqrt(boost::math::constants::pi<double>()))));
  } else {
    const UnitProfile& prev = unit_profile(k - 1);
    const double vmax = std::sqrt(prev.cutoff());
    // f_k(x) = (2/sqrt(pi)) int_0^inf f_{k-1}(v^2) exp(-x^2 / 4v^2) dv  (u = v^2)
    auto fk = [&](double x) {
      auto integrand = [&](double v) {
        if (v <= 0.0) return x == 0.0 ? prev.density(0.0) : 0.0;
        return prev.density(v * v) * std::exp(-x * x / (4.0 * v * v));
      };
      return two_over_sqrt_pi * integrate_adaptive(integrand, 0.0, vmax, kProfileTol, nullptr, kAbsFloor);
    };
    density_ = PiecewiseChebyshev::fit(fk, kPanelWidth, kDegree, kTailFloor, kMaxPanels);
    cutoff_ = density_.end();
  }
  auto gk = [&](double w) {
    if (w <= 0.0) return 0.0;
    auto integrand = [&](double y) { return density(y) * density(w - y); };
    return 2.0 * integrate_adaptive(integrand, 0.0, 0.5 * w, kProfileTol, nullptr, kAbsFloor);
  };
  sum_ = PiecewiseChebyshev::fit(gk, kPanelWidth, kDegree, kTailFloor, 2 * kMaxPanels);

  inner_ = graded_rule(std::ldexp(1.0, -50), 1.0, cutoff_, 2.0, 1.0);
  for (std::size_t j = 0; j < inner_.size(); ++j) inner_.w[j] *= density(inner_.x[j]);
}

double UnitProfile::density(double y) const {
  if (y < 0.0 || y >= cutoff_) return 0.0;
  return k_ == 1 ? unit_half_stable(y) : density_(y);
}

const UnitProfile& unit_profile(int k) {
  static std::array<std::once_flag, ModelParams::kMaxLevel + 1> flags;
  static std::array<std::unique_ptr<UnitProfile>, ModelParams::kMaxLevel + 1> profiles;
  if (k < 1 || k > ModelParams::kMaxLevel) throw DomainError("unit_profile: k out of range");
  std::call_once(flags[k], [k] { profiles[k] = std::make_unique<UnitProfile>(k); });
  return *profiles[k];
}

InnerRule inner_rule(const ModelParams& p, double t) {
  if (!(t > 0.0)) throw DomainError("inner_rule: t must be > 0");
  InnerRule r;
  if (p.degenerate()) {
    r.s = {t};
    r.w = {1.0};
    return r;
  }
  const Rule& unit = unit_profile(p.level()).inner();
  const double scale = std::pow(t, p.beta());
  r.s.resize(unit.size());
  for (std::size_t j = 0; j < unit.size(); ++j) r.s[j] = scale * unit.x[j];
  r.w = unit.w;
  return r;
}

SubordinatorDensity::SubordinatorDensity(const ModelParams& p) : params_(p), profile_(nullptr) {
  if (p.degenerate()) {
    throw DomainError("beta = 1 has the degenerate law Lambda(t) = t; no density");
  }
  profile_ = &unit_profile(p.level());
}

double SubordinatorDensity::operator()(double t, double s) const {
  if (!(t > 0.0)) throw DomainError("isl_density: t must be > 0");
  if (s < 0.0) throw DomainError("isl_density: s must be >= 0");
  const double scale = std::pow(t, params_.beta());
  return profile_->density(s / scale) / scale;
}

double SubordinatorDensity::sum(double t, double w) const {
  if (!(t > 0.0)) throw DomainError("sum density: t must be > 0");
  const double scale = std::pow(t, params_.beta());
  return profile_->sum_density(w / scale) / scale;
}

double SubordinatorDensity::cutoff(double t) const {
  return std::pow(t, params_.beta()) * profile_->cutoff();
}

double isl_density(const ModelParams& p, double t, double s) {
  return SubordinatorDensity(p)(t, s);
}

double composed_density(const ModelParams& p, double t, double s, double tol) {
  if (p.degenerate()) throw DomainError("composed_density: k must be >= 1");
  if (!(t > 0.0)) throw DomainError("composed_density: t must be > 0");
  if (p.level() == 1) return half_stable_density(t, s);
  ModelParams prev = ModelParams::make(p.level() - 1, p.dimension());
  SubordinatorDensity inner(prev);
  const double two_over_sqrt_pi = 2.0 / std::sqrt(boost::math::constants::pi<double>());
  auto integrand = [&](double v) {
    if (v <= 0.0) return s == 0.0 ? inner(t, 0.0) : 0.0;
    return inner(t, v * v) * std::exp(-s * s / (4.0 * v * v));
  };
  return two_over_sqrt_pi *
         integrate_adaptive(integrand, 0.0, std::sqrt(inner.cutoff(t)), tol);
}

std::vector<double> moments(const ModelParams& p) {
  const int nu = p.nu();
  std::vector<double> e(nu, 0.0);
  e[0] = 1.0;
  if (p.degenerate()) return e;
  const UnitProfile& prof = unit_profile(p.level());
  double factorial = 1.0;
  for (int kappa = 1; kappa < nu; ++kappa) {
    factorial *= kappa;
    auto integrand = [&](double y) { return std::pow(y, kappa) * prof.density(y); };
    double acc = 0.0;
    for (double a = 0.0; a < prof.cutoff(); a += 1.0) {
      acc += integrate_adaptive(integrand, a, std::min(a + 1.0, prof.cutoff()), 1e-13, nullptr, 1e-20);
    }
    e[kappa] = acc / factorial;
  }
  return e;
}

}  // namespace islt

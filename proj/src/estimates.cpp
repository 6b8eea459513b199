#include "islt/estimates.hpp"

#include <algorithm>
#include <array>
#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <memory>
#include <mutex>

#include "islt/bessel.hpp"
#include "islt/errors.hpp"
#include "islt/kernels.hpp"
#include "islt/subordinator.hpp"

namespace islt {

namespace {

constexpr double kPi = boost::math::constants::pi<double>();

// Rule on [0, 2 X_k] with weights w_j g(y_j), g the unit sum density.
const Rule& unit_sum_rule(int k) {
  static std::array<std::once_flag, ModelParams::kMaxLevel + 1> flags;
  static std::array<std::unique_ptr<Rule>, ModelParams::kMaxLevel + 1> rules;
  std::call_once(flags[k], [k] {
    const UnitProfile& prof = unit_profile(k);
    auto r = std::make_unique<Rule>(graded_rule(std::ldexp(1.0, -60), 1.0, 2.0 * prof.cutoff(), 2.0, 1.0));
    for (std::size_t j = 0; j < r->size(); ++j) r->w[j] *= prof.sum_density(r->x[j]);
    rules[k] = std::move(r);
  });
  return *rules[k];
}

double gaussian_green(int d, double w) { return std::pow(2.0 * kPi * w, -0.5 * d); }

double lattice_green(int d, double delta, double w, long n = 0) {
  const double x = w / (delta * delta);
  double origin = scaled_bessel_fast(x, 0);
  double v = n == 0 ? origin : scaled_bessel_fast(x, n);
  for (int i = 1; i < d; ++i) v *= origin;
  return v;
}

// Outer rule for int_0^r J(b) db where J has an integrable power singularity at
// b = 0 on the scale h: b = h z^4 on [0, min(h, r)], geometric panels above.
struct OuterRule {
  std::vector<double> b;
  std::vector<double> w;
};

OuterRule singular_outer_rule(double h, double r) {
  OuterRule out;
  const double top = std::min(h, r);
  Rule z;
  for (double a : {0.0, 0.125, 0.25, 0.5}) append_panel(z, a, a == 0.0 ? 0.125 : 2.0 * a);
  const double zmax = std::pow(top / h, 0.25);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zi = z.x[i] * zmax;
    out.b.push_back(h * std::pow(zi, 4));
    out.w.push_back(z.w[i] * zmax * 4.0 * h * zi * zi * zi);
  }
  double a = top;
  while (a < r * (1.0 - 1e-12)) {
    const double b = std::min(2.0 * a, r);
    Rule panel;
    append_panel(panel, a, b);
    for (std::size_t i = 0; i < panel.size(); ++i) {
      out.b.push_back(panel.x[i]);
      out.w.push_back(panel.w[i]);
    }
    a = b;
  }
  return out;
}

void require_time_pair(double t, double r) {
  if (!(r > 0.0) || !(t > r)) throw DomainError("temporal difference requires 0 < r < t");
}

}  // namespace

double continuum_mass(const ModelParams& p, double t) {
  if (!(t > 0.0)) throw DomainError("continuum_mass: t must be > 0");
  const int d = p.dimension();
  const double sphere = 2.0 * std::pow(kPi, 0.5 * d) / boost::math::tgamma(0.5 * d);
  auto integrand = [&](double r) {
    if (r <= 0.0) return d == 1 ? isltbm_kernel_r2(p, t, 0.0) : 0.0;
    return std::pow(r, d - 1) * isltbm_kernel_r2(p, t, r * r);
  };
  const double spread =
      std::sqrt(p.degenerate() ? t : std::pow(t, p.beta()) * unit_profile(p.level()).cutoff());
  double acc = integrate_adaptive(integrand, 0.0, 0.25 * spread, 1e-11);
  for (double a = 0.25 * spread;; a *= 2.0) {
    double piece = integrate_adaptive(integrand, a, 2.0 * a, 1e-11);
    acc += piece;
    if (piece < 1e-17 * acc && a > spread) break;
  }
  return sphere * acc;
}

double l2_norm_continuum(const ModelParams& p, double t) {
  p.require_sie_dimension("l2_norm_continuum");
  if (!(t > 0.0)) throw DomainError("l2_norm_continuum: t must be > 0");
  const int d = p.dimension();
  if (p.degenerate()) return gaussian_green(d, 2.0 * t);
  const Rule& r = unit_sum_rule(p.level());
  double acc = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) acc += r.w[j] * gaussian_green(d, r.x[j]);
  return std::pow(t, -0.5 * d * p.beta()) * acc;
}

double divergence_integral(const ModelParams& p, double t, double eps) {
  if (!(t > 0.0) || !(eps > 0.0)) throw DomainError("divergence_integral: t and eps must be > 0");
  const int d = p.dimension();
  if (p.degenerate()) return 2.0 * t >= eps ? gaussian_green(d, 2.0 * t) : 0.0;
  const UnitProfile& prof = unit_profile(p.level());
  const double y0 = eps / std::pow(t, p.beta());
  const double hi = 2.0 * prof.cutoff();
  if (y0 >= hi) return 0.0;
  Rule r = graded_rule(y0, 1.0, hi, 2.0, 1.0, false);
  double acc = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    acc += r.w[j] * prof.sum_density(r.x[j]) * gaussian_green(d, r.x[j]);
  }
  return std::pow(t, -0.5 * d * p.beta()) * acc;
}

DivergenceReport divergence_check(const ModelParams& p, double t, std::span<const double> eps) {
  if (eps.size() < 2) throw DomainError("divergence_check: need at least two floors");
  DivergenceReport rep;
  rep.eps.assign(eps.begin(), eps.end());
  for (double e : eps) rep.values.push_back(divergence_integral(p, t, e));
  rep.strictly_increasing = true;
  for (std::size_t i = 1; i < rep.values.size(); ++i) {
    if (!(eps[i] < eps[i - 1]) || !(rep.values[i] > rep.values[i - 1])) rep.strictly_increasing = false;
  }
  rep.growth_ratio = rep.values.back() / rep.values.front();
  std::size_t ref = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (std::abs(std::log(eps[i] / 1e-4)) < std::abs(std::log(eps[ref] / 1e-4))) ref = i;
  }
  rep.tail_change = (rep.values.back() - rep.values[ref]) / rep.values[ref];
  return rep;
}

TwoTimeKernel::TwoTimeKernel(const ModelParams& p, double max_time, std::optional<double> delta)
    : params_(p), max_time_(max_time), delta_(delta) {
  if (!(max_time > 0.0)) throw DomainError("TwoTimeKernel: max_time must be > 0");
  if (delta && !(*delta > 0.0)) throw DomainError("TwoTimeKernel: delta must be > 0");
  if (p.degenerate()) return;
  const double smax = std::pow(max_time, p.beta()) * unit_profile(p.level()).cutoff();
  rule_ = graded_rule(std::ldexp(1.0, -50), std::min(1.0, smax), smax, 2.0, 0.5);
  const std::size_t J = rule_.size();
  g_.assign(J * J, 0.0);
  for (std::size_t i = 0; i < J; ++i) {
    for (std::size_t j = i; j < J; ++j) {
      const double v = green(rule_.x[i] + rule_.x[j]);
      g_[i * J + j] = v;
      g_[j * J + i] = v;
    }
  }
}

double TwoTimeKernel::green(double w) const {
  const int d = params_.dimension();
  return delta_ ? lattice_green(d, *delta_, w) : gaussian_green(d, w);
}

std::vector<double> TwoTimeKernel::weights(double t) const {
  SubordinatorDensity dens(params_);
  std::vector<double> out(rule_.size());
  for (std::size_t j = 0; j < rule_.size(); ++j) out[j] = rule_.w[j] * dens(t, rule_.x[j]);
  return out;
}

double TwoTimeKernel::form(const std::vector<double>& a, const std::vector<double>& b) const {
  const std::size_t J = rule_.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < J; ++i) {
    if (a[i] == 0.0) continue;
    const double* row = g_.data() + i * J;
    double inner = 0.0;
    for (std::size_t j = 0; j < J; ++j) inner += row[j] * b[j];
    acc += a[i] * inner;
  }
  return acc;
}

double TwoTimeKernel::operator()(double u, double v) const {
  if (!(u > 0.0) || !(v > 0.0)) throw DomainError("two-time kernel: times must be > 0");
  if (u > max_time_ * (1 + 1e-12) || v > max_time_ * (1 + 1e-12)) {
    throw SizeError("two-time kernel: time beyond max_time");
  }
  if (params_.degenerate()) return green(u + v);
  return form(weights(u), weights(v));
}

double TwoTimeKernel::difference(double a, double b) const {
  if (params_.degenerate()) return green(2.0 * a) + green(2.0 * b) - 2.0 * green(a + b);
  std::vector<double> wa = weights(a);
  std::vector<double> wb = weights(b);
  for (std::size_t j = 0; j < wa.size(); ++j) wa[j] -= wb[j];
  return form(wa, wa);
}

double temporal_difference_integral(const TwoTimeKernel& kt, double t, double r) {
  require_time_pair(t, r);
  const double h = t - r;
  // int_0^h K~(a, a) da: the window where only the later kernel is alive.
  OuterRule head = singular_outer_rule(h, h);
  double acc = 0.0;
  for (std::size_t i = 0; i < head.b.size(); ++i) acc += head.w[i] * kt(head.b[i], head.b[i]);
  OuterRule body = singular_outer_rule(h, r);
  for (std::size_t i = 0; i < body.b.size(); ++i) {
    acc += body.w[i] * kt.difference(body.b[i] + h, body.b[i]);
  }
  return acc;
}

double temporal_difference_integral(const ModelParams& p, double t, double r) {
  p.require_sie_dimension("temporal_difference_integral");
  return temporal_difference_integral(TwoTimeKernel(p, t), t, r);
}

double temporal_difference_lattice(const ModelParams& p, double delta, double t, double r) {
  p.require_sie_dimension("temporal_difference_lattice");
  return temporal_difference_integral(TwoTimeKernel(p, t, delta), t, r);
}

double temporal_difference_direct(const ModelParams& p, double t, double r) {
  if (p.dimension() != 1) throw DomainError("temporal_difference_direct: d = 1 only");
  require_time_pair(t, r);
  const double h = t - r;
  const double spread = p.degenerate() ? t : std::pow(t, p.beta()) * unit_profile(p.level()).cutoff();
  const double xmax = std::sqrt(60.0 * spread);
  Rule xr = graded_rule(std::ldexp(1.0, -40), 1.0, std::max(xmax, 2.0), 2.0, 0.25);
  auto profile = [&](double a) {
    std::vector<double> k(xr.size());
    for (std::size_t i = 0; i < xr.size(); ++i) k[i] = isltbm_kernel_r2(p, a, xr.x[i] * xr.x[i]);
    return k;
  };
  double acc = 0.0;
  OuterRule head = singular_outer_rule(h, h);
  for (std::size_t i = 0; i < head.b.size(); ++i) {
    auto k = profile(head.b[i]);
    double s = 0.0;
    for (std::size_t j = 0; j < xr.size(); ++j) s += xr.w[j] * k[j] * k[j];
    acc += head.w[i] * 2.0 * s;
  }
  OuterRule body = singular_outer_rule(h, r);
  for (std::size_t i = 0; i < body.b.size(); ++i) {
    auto ka = profile(body.b[i] + h);
    auto kb = profile(body.b[i]);
    double s = 0.0;
    for (std::size_t j = 0; j < xr.size(); ++j) {
      const double diff = ka[j] - kb[j];
      s += xr.w[j] * diff * diff;
    }
    acc += body.w[i] * 2.0 * s;
  }
  return acc;
}

namespace {

// 2 int_0^t [ int g_s(w) (G(w; 0) - G(w; z)) dw ] ds for a Green function pair.
template <class Inner>
double spatial_outer(double t, Inner&& inner) {
  Rule sr = graded_rule(t * std::ldexp(1.0, -60), t, t, 2.0, t);
  double acc = 0.0;
  for (std::size_t i = 0; i < sr.size(); ++i) acc += sr.w[i] * inner(sr.x[i]);
  return 2.0 * acc;
}

}  // namespace

double spatial_difference_integral(const ModelParams& p, double t, double z) {
  p.require_sie_dimension("spatial_difference_integral");
  if (!(t > 0.0)) throw DomainError("spatial_difference_integral: t must be > 0");
  z = std::abs(z);
  if (z == 0.0) return 0.0;
  const int d = p.dimension();
  const double z2 = z * z;
  if (p.degenerate()) {
    return spatial_outer(t, [&](double s) {
      const double w = 2.0 * s;
      return gaussian_green(d, w) * -std::expm1(-z2 / (2.0 * w));
    });
  }
  const Rule& r = unit_sum_rule(p.level());
  const double beta = p.beta();
  return spatial_outer(t, [&](double s) {
    const double scale = std::pow(s, beta);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      const double w = scale * r.x[j];
      acc += r.w[j] * gaussian_green(d, w) * -std::expm1(-z2 / (2.0 * w));
    }
    return acc;
  });
}

double spatial_difference_lattice(const ModelParams& p, double delta, double t, long z_steps) {
  p.require_sie_dimension("spatial_difference_lattice");
  if (!(t > 0.0) || !(delta > 0.0)) throw DomainError("spatial_difference_lattice: bad arguments");
  z_steps = std::labs(z_steps);
  if (z_steps == 0) return 0.0;
  const int d = p.dimension();
  auto pair = [&](double w) {
    return lattice_green(d, delta, w) - lattice_green(d, delta, w, z_steps);
  };
  if (p.degenerate()) return spatial_outer(t, [&](double s) { return pair(2.0 * s); });
  const Rule& r = unit_sum_rule(p.level());
  const double beta = p.beta();
  return spatial_outer(t, [&](double s) {
    const double scale = std::pow(s, beta);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) acc += r.w[j] * pair(scale * r.x[j]);
    return acc;
  });
}

LatticeL2 l2_norm_lattice(const ModelParams& p, double delta, double t, int radius) {
  p.require_sie_dimension("l2_norm_lattice");
  if (!(t > 0.0) || !(delta > 0.0)) throw DomainError("l2_norm_lattice: bad arguments");
  const int d = p.dimension();
  const double spread = p.degenerate() ? t : std::pow(t, p.beta()) * unit_profile(p.level()).cutoff();
  const int nmax = bessel_start_order(spread / (delta * delta));
  LatticeRows rows(p, delta, t, nmax);
  const std::size_t J = rows.nodes();
  const auto& w = rows.weights();
  if (radius <= 0) {
    // Smallest box whose one-dimensional marginal tail is below 1e-10.
    std::vector<double> marg(nmax + 1, 0.0);
    for (int n = 0; n <= nmax; ++n) {
      const double* row = rows.row(n);
      for (std::size_t j = 0; j < J; ++j) marg[n] += w[j] * row[j];
    }
    double inside = marg[0];
    radius = 0;
    while (radius < nmax && 1.0 - inside > 1e-10) {
      ++radius;
      inside += 2.0 * marg[radius];
    }
  }
  radius = std::min(radius, nmax);
  // Box sums: M_{ij} = sum_{|n| <= R} q_i(n) q_j(n), mass_j = sum_{|n| <= R} q_j(n).
  std::vector<double> mass(J, 0.0);
  std::vector<double> m(J * J, 0.0);
  for (int n = 0; n <= radius; ++n) {
    const double mult = n == 0 ? 1.0 : 2.0;
    const double* row = rows.row(n);
    for (std::size_t i = 0; i < J; ++i) {
      mass[i] += mult * row[i];
      const double ri = mult * row[i];
      if (ri == 0.0) continue;
      double* mi = m.data() + i * J;
      for (std::size_t j = 0; j < J; ++j) mi[j] += ri * row[j];
    }
  }
  LatticeL2 out;
  out.radius = radius;
  double sum_sq = 0.0;
  double row_sum = 0.0;
  for (std::size_t i = 0; i < J; ++i) {
    row_sum += w[i] * std::pow(mass[i], d);
    double inner = 0.0;
    for (std::size_t j = 0; j < J; ++j) inner += w[j] * std::pow(m[i * J + j], d);
    sum_sq += w[i] * inner;
  }
  out.value = sum_sq;
  out.tail_mass = std::max(0.0, 1.0 - row_sum);
  out.truncation_ok = out.tail_mass <= 1e-8;
  out.continuum_ratio = sum_sq / (std::pow(delta, d) * l2_norm_continuum(p, t));
  return out;
}

namespace {

// Values on the box of half-width `rad` around `centre` (steps), row-major.
struct Box {
  int d;
  int rad;
  int side;
  std::vector<double> v;
  Box(int d_, int rad_) : d(d_), rad(rad_), side(2 * rad_ + 1) {
    std::size_t n = 1;
    for (int i = 0; i < d; ++i) n *= static_cast<std::size_t>(side);
    v.assign(n, 0.0);
  }
  std::size_t size() const { return v.size(); }
  void offsets(std::size_t idx, int* off) const {
    for (int i = d - 1; i >= 0; --i) {
      off[i] = static_cast<int>(idx % side) - rad;
      idx /= side;
    }
  }
  std::size_t index(const int* off) const {
    std::size_t idx = 0;
    for (int i = 0; i < d; ++i) idx = idx * side + static_cast<std::size_t>(off[i] + rad);
    return idx;
  }
};

// Discrete Laplacian applied `power` times; returns the value at the centre.
double laplacian_power_at_centre(Box box, int power, double delta) {
  const double inv = 1.0 / (delta * delta);
  int off[ModelParams::kMaxDimension];
  for (int k = 0; k < power; ++k) {
    std::vector<double> next(box.size(), 0.0);
    const int valid = box.rad - k - 1;
    for (std::size_t idx = 0; idx < box.size(); ++idx) {
      box.offsets(idx, off);
      bool inside = true;
      for (int i = 0; i < box.d; ++i) inside = inside && std::abs(off[i]) <= valid;
      if (!inside) continue;
      double acc = -2.0 * box.d * box.v[idx];
      for (int i = 0; i < box.d; ++i) {
        off[i] += 1;
        acc += box.v[box.index(off)];
        off[i] -= 2;
        acc += box.v[box.index(off)];
        off[i] += 1;
      }
      next[idx] = acc * inv;
    }
    box.v.swap(next);
  }
  std::vector<int> zero(box.d, 0);
  return box.v[box.index(zero.data())];
}

}  // namespace

DdeResidual dde_residual(const ModelParams& p, double delta, double t, std::span<const long> x,
                         double h, DdeForm form, int fd_order) {
  const int d = p.dimension();
  if (static_cast<int>(x.size()) != d) throw DomainError("dde_residual: point dimension mismatch");
  if (!(t > 0.0)) throw DomainError("dde_residual: t must be > 0");
  if (fd_order != 2 && fd_order != 4) throw DomainError("dde_residual: fd_order must be 2 or 4");
  if (h <= 0.0) h = t / 200.0;
  const int reach = fd_order / 2;
  if (!(t - reach * h > 0.0)) throw SizeError("dde_residual: time stencil reaches t <= 0");
  const int nu = p.nu();
  long amax = 0;
  for (long xi : x) amax = std::max(amax, std::labs(xi));
  const int max_steps = static_cast<int>(amax) + nu;

  auto kernel_at = [&](double time) {
    LatticeRows rows(p, delta, time, max_steps);
    return rows;
  };
  std::vector<long> pt(d);
  auto point_value = [&](const LatticeRows& rows) {
    for (int i = 0; i < d; ++i) pt[i] = x[i];
    return rows.kernel(pt);
  };

  DdeResidual out;
  if (fd_order == 2) {
    out.time_derivative =
        (point_value(kernel_at(t + h)) - point_value(kernel_at(t - h))) / (2.0 * h);
  } else {
    out.time_derivative = (-point_value(kernel_at(t + 2 * h)) + 8.0 * point_value(kernel_at(t + h)) -
                           8.0 * point_value(kernel_at(t - h)) + point_value(kernel_at(t - 2 * h))) /
                          (12.0 * h);
  }

  LatticeRows now = kernel_at(t);
  Box kbox(d, nu);
  Box ibox(d, nu);
  int off[ModelParams::kMaxDimension];
  for (std::size_t idx = 0; idx < kbox.size(); ++idx) {
    kbox.offsets(idx, off);
    bool origin = true;
    for (int i = 0; i < d; ++i) {
      pt[i] = x[i] + off[i];
      origin = origin && pt[i] == 0;
    }
    kbox.v[idx] = now.kernel(pt);
    ibox.v[idx] = origin ? 1.0 : 0.0;
  }
  const double lap_top = laplacian_power_at_centre(kbox, nu, delta);
  const double beta = p.beta();
  out.top = form == DdeForm::kDefault ? lap_top / (2.0 * nu) : lap_top / std::ldexp(1.0, nu);
  std::vector<double> e = moments(p);
  double factorial = 1.0;
  for (int kappa = 1; kappa < nu; ++kappa) {
    factorial *= kappa;
    const double lap = laplacian_power_at_centre(ibox, kappa, delta);
    if (lap == 0.0) continue;
    double coef = 0.0;
    if (form == DdeForm::kDefault) {
      coef = e[kappa] / (std::ldexp(1.0, kappa) * std::pow(t, 1.0 - kappa * beta));
    } else {
      coef = std::pow(t, kappa * beta - 1.0) /
             (std::ldexp(1.0, kappa) * boost::math::tgamma(kappa * beta));
    }
    out.memory += coef * lap;
  }
  out.residual = out.time_derivative - out.memory - out.top;
  out.scale = std::max(std::abs(out.time_derivative), std::abs(out.top));
  return out;
}

std::vector<double> continuum_limit_report(const ModelParams& p, double t,
                                           std::span<const double> x,
                                           std::span<const double> deltas) {
  const int d = p.dimension();
  if (static_cast<int>(x.size()) != d) throw DomainError("continuum_limit_report: dimension mismatch");
  std::vector<double> ratios;
  const double cont = isltbm_kernel(p, t, x);
  for (double delta : deltas) {
    Lattice lat(delta, d, 1.0);
    ratios.push_back(isltrw_kernel(p, lat, t, x) / (cont * std::pow(delta, d)));
  }
  return ratios;
}

}  // namespace islt

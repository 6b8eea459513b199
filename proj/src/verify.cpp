#include "islt/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "islt/errors.hpp"
#include "islt/fit.hpp"
#include "islt/kernel_table.hpp"
#include "islt/kernels.hpp"
#include "islt/sie.hpp"

namespace islt {

namespace {

std::string label(std::string_view what, const ModelParams& p) {
  std::ostringstream o;
  o << what << " beta=" << p.beta_string() << " d=" << p.dimension();
  return o.str();
}

void apply_fit(Verdict& v) {
  const ScalingFit f = fit_loglog(v.x, v.y);
  v.fitted = f.slope;
  v.half_width = f.half_width;
}

}  // namespace

Verdict verify_kernel_normalization(const ModelParams& p, double delta, std::vector<double> times,
                                    const VerifyOptions& opt) {
  Verdict v;
  v.name = label("kernel normalization", p);
  v.params = p;
  v.x_name = "t";
  v.y_name = "row_sum";
  v.expected = 1.0;
  v.tolerance = 1e-6;
  std::sort(times.begin(), times.end());
  int radius = 0;
  for (double t : times) radius = std::max(radius, tail_radius(p, delta, t));
  KernelTableSpec spec;
  spec.flavor = Flavor::kLattice;
  spec.params = p;
  spec.delta = delta;
  spec.radius = radius;
  spec.times = times;
  const KernelTable table = opt.cache_dir ? KernelTable::load_or_build(spec, *opt.cache_dir) : KernelTable::build(spec);
  bool ok = true;
  double worst = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double s = table.row_sum(i);
    v.x.push_back(times[i]);
    v.y.push_back(s);
    if (std::abs(s - 1.0) > std::abs(worst - 1.0) || i == 0) worst = s;
    ok = ok && std::abs(s - 1.0) <= 1e-6;
  }
  v.fitted = worst;
  v.details.emplace_back("radius_steps", radius);
  v.details.emplace_back("delta", delta);
  for (double t : times) {
    const double m = continuum_mass(p, t);
    v.details.emplace_back("continuum_mass_t" + std::to_string(t), m);
    ok = ok && std::abs(m - 1.0) <= 1e-5;
  }
  v.pass = ok;
  return v;
}

Verdict verify_l2(const ModelParams& p, double tolerance) {
  p.require_sie_dimension("verify l2");
  Verdict v;
  v.name = label("l2", p);
  v.params = p;
  v.x_name = "t";
  v.y_name = "l2";
  for (int e = -4; e <= 4; ++e) {
    const double t = std::ldexp(1.0, e);
    v.x.push_back(t);
    v.y.push_back(l2_norm_continuum(p, t));
  }
  apply_fit(v);
  v.expected = -static_cast<double>(p.dimension()) / (2.0 * p.nu());
  v.tolerance = tolerance;
  v.pass = std::abs(v.fitted - v.expected) <= tolerance;
  return v;
}

Verdict verify_temporal(const ModelParams& p, bool cross_check, double tolerance) {
  p.require_sie_dimension("verify temporal");
  Verdict v;
  v.name = label("temporal", p);
  v.params = p;
  v.x_name = "h";
  v.y_name = "temporal_difference";
  const double t = 1.0;
  const TwoTimeKernel kt(p, t);
  for (int e = -8; e <= -2; ++e) {
    const double h = std::ldexp(1.0, e);
    v.x.push_back(h);
    v.y.push_back(temporal_difference_integral(kt, t, t - h));
  }
  apply_fit(v);
  const double nu = p.nu();
  v.expected = (2.0 * nu - p.dimension()) / (2.0 * nu);
  v.tolerance = tolerance;
  v.pass = std::abs(v.fitted - v.expected) <= tolerance;
  if (cross_check && p.dimension() == 1) {
    const double identity = temporal_difference_integral(kt, t, 0.75);
    const double direct = temporal_difference_direct(p, t, 0.75);
    const double rel = std::abs(identity / direct - 1.0);
    v.details.emplace_back("identity_r0.75", identity);
    v.details.emplace_back("direct_r0.75", direct);
    v.details.emplace_back("cross_check_rel", rel);
    v.pass = v.pass && rel <= 0.01;
  }
  return v;
}

Verdict verify_spatial(const ModelParams& p, double tolerance) {
  p.require_sie_dimension("verify spatial");
  Verdict v;
  v.name = label("spatial", p);
  v.params = p;
  v.x_name = "z";
  v.y_name = "spatial_difference";
  for (int e = -7; e <= -2; ++e) {
    const double z = std::ldexp(1.0, e);
    v.x.push_back(z);
    v.y.push_back(spatial_difference_integral(p, 1.0, z));
  }
  apply_fit(v);
  v.expected = expected_slope(p, Direction::kSpace, 1);
  v.tolerance = tolerance;
  v.pass = std::abs(v.fitted - v.expected) <= tolerance;
  return v;
}

Verdict verify_spatial_invariance(int d, double tolerance) {
  const Verdict a = verify_spatial(ModelParams::make(1, d));
  const Verdict b = verify_spatial(ModelParams::make(2, d));
  Verdict v;
  v.name = "spatial beta-invariance d=" + std::to_string(d);
  v.params = a.params;
  v.x_name = "k";
  v.y_name = "slope";
  v.x = {1.0, 2.0};
  v.y = {a.fitted, b.fitted};
  v.expected = 0.0;
  v.fitted = std::abs(a.fitted - b.fitted);
  v.tolerance = tolerance;
  v.pass = v.fitted <= tolerance;
  return v;
}

Verdict verify_dde(const ModelParams& p, DdeForm form, double delta) {
  Verdict v;
  v.name = label(form == DdeForm::kDefault ? "dde" : "dde caputo", p);
  v.params = p;
  v.x_name = "h";
  v.y_name = "residual";
  const double t = 1.0;
  std::vector<long> x(static_cast<std::size_t>(p.dimension()), 0);
  x[0] = 3;
  const DdeResidual r = dde_residual(p, delta, t, x, 0.0, form, 4);
  const double limit = p.degenerate() ? 1e-6 : 1e-3;
  v.details.emplace_back("relative_residual", r.relative());
  v.details.emplace_back("residual_limit", limit);
  v.details.emplace_back("time_derivative", r.time_derivative);
  v.details.emplace_back("memory", r.memory);
  v.details.emplace_back("top", r.top);
  for (double h : {t / 25.0, t / 50.0, t / 100.0}) {
    v.x.push_back(h);
    v.y.push_back(std::abs(dde_residual(p, delta, t, x, h, form, 2).residual));
  }
  std::reverse(v.x.begin(), v.x.end());
  std::reverse(v.y.begin(), v.y.end());
  apply_fit(v);
  v.expected = 2.0;
  v.tolerance = 0.1;
  v.pass = r.relative() <= limit && std::abs(v.fitted - 2.0) <= v.tolerance;
  return v;
}

Verdict verify_limit(const ModelParams& p, double tolerance) {
  Verdict v;
  v.name = label("limit", p);
  v.params = p;
  v.x_name = "delta";
  v.y_name = "ratio";
  std::vector<double> x(static_cast<std::size_t>(p.dimension()), 0.0);
  x[0] = 0.5;
  const std::vector<double> deltas = {0.0625, 0.125, 0.25};
  v.x = deltas;
  v.y = continuum_limit_report(p, 1.0, x, deltas);
  v.expected = 1.0;
  v.fitted = v.y.front();
  v.tolerance = tolerance;
  v.pass = std::abs(v.fitted - 1.0) <= tolerance;
  return v;
}

Verdict verify_divergence(int k) {
  const ModelParams p4 = ModelParams::make(k, 4);
  const std::vector<double> eps = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  const DivergenceReport r4 = divergence_check(p4, 1.0, eps);
  const DivergenceReport r3 = divergence_check(ModelParams::make(k, 3), 1.0, eps);
  Verdict v;
  v.name = label("divergence", p4);
  v.params = p4;
  v.x_name = "eps";
  v.y_name = "truncated_l2";
  v.x = eps;
  v.y = r4.values;
  v.expected = 3.0;
  v.fitted = r4.growth_ratio;
  v.details.emplace_back("strictly_increasing", r4.strictly_increasing ? 1.0 : 0.0);
  v.details.emplace_back("growth_ratio", r4.growth_ratio);
  v.details.emplace_back("d3_tail_change", r3.tail_change);
  for (std::size_t i = 0; i < eps.size(); ++i) v.details.emplace_back("d3_I_" + std::to_string(i), r3.values[i]);
  v.pass = r4.strictly_increasing && r4.growth_ratio > 3.0 && std::abs(r3.tail_change) < 0.01;
  v.note = v.pass ? "unbounded growth detected" : "growth not detected";
  return v;
}

std::vector<Verdict> verify_sie(int replicas, int picard_replicas, const VerifyOptions& opt) {
  std::vector<Verdict> out;
  {
    SIEConfig c = SIEConfig::defaults(1, 1);
    c.a = Coefficient::parse("zero");
    c.u0 = InitialCondition::parse("gaussian:0,0.5");
    const SIESolver s(c, opt.cache_dir);
    const FieldSample f = s.solve(std::uint64_t{0});
    double worst = 0.0;
    for (std::size_t i = 0; i < f.U.size(); ++i) worst = std::max(worst, std::abs(f.U[i] - f.D[i]));
    Verdict v;
    v.name = "sie zero-noise reduction";
    v.params = c.params;
    v.fitted = worst;
    v.pass = worst == 0.0;
    out.push_back(std::move(v));
  }
  SIEConfig c = SIEConfig::defaults(1, 1);
  const SIESolver s(c, opt.cache_dir);
  const MomentSummary m = simulate_moments(s, replicas, opt.threads);
  {
    const int hw = c.lat.half_width();
    const std::vector<long> centre = {0};
    const std::vector<long> off = {hw / 4};
    const VarianceCheck a = variance_check(s, m, c.steps, centre);
    const VarianceCheck b = variance_check(s, m, c.steps / 2, off);
    Verdict v;
    v.name = "sie gaussian variance";
    v.params = c.params;
    v.x_name = "point";
    v.y_name = "z";
    v.x = {0.0, 1.0};
    v.y = {a.z, b.z};
    v.expected = a.exact;
    v.fitted = a.empirical;
    v.half_width = a.se;
    v.tolerance = 3.0;
    v.details = {{"exact_T_x0", a.exact}, {"empirical_T_x0", a.empirical}, {"se_T_x0", a.se}, {"z_T_x0", a.z},
                 {"exact_half_T_x", b.exact}, {"empirical_half_T_x", b.empirical}, {"se_half_T_x", b.se}, {"z_half_T_x", b.z},
                 {"skewness_T_x0", m.skewness(c.steps, s.sites() / 2)},
                 {"excess_kurtosis_T_x0", m.excess_kurtosis(c.steps, s.sites() / 2)}};
    v.pass = a.pass && b.pass;
    out.push_back(std::move(v));
  }
  {
    std::vector<double> ts;
    for (int k = 0; k <= c.steps; ++k) ts.push_back(c.time(k));
    Verdict v;
    v.name = "sie moment envelope";
    v.params = c.params;
    v.x_name = "q";
    v.y_name = "C";
    v.pass = true;
    for (int q = 1; q <= 3; ++q) {
      const MomentEnvelope e = moment_envelope(ts, m.sup_moment(q), q);
      v.x.push_back(q);
      v.y.push_back(e.C);
      v.details.emplace_back("max_sup_moment_q" + std::to_string(q), e.max_value);
      v.pass = v.pass && e.pass;
    }
    v.fitted = *std::max_element(v.y.begin(), v.y.end());
    v.expected = 50.0;
    out.push_back(std::move(v));
  }
  {
    SIEConfig pc = SIEConfig::defaults(1, 1);
    pc.horizon = 0.5;
    pc.steps = 128;
    pc.a = Coefficient::parse("sin:0.5");
    pc.u0 = InitialCondition::parse("const:1");
    const SIESolver ps(pc, opt.cache_dir);
    const PicardReport r = picard_solve(ps, picard_replicas, 8, opt.threads);
    Verdict v;
    v.name = "sie picard contraction";
    v.params = pc.params;
    v.x_name = "n";
    v.y_name = "dstar";
    for (std::size_t n = 0; n < r.dstar.size(); ++n) {
      v.x.push_back(static_cast<double>(n));
      v.y.push_back(r.dstar[n]);
    }
    double worst = 0.0;
    for (std::size_t n = 3; n < r.ratios.size(); ++n) worst = std::max(worst, r.ratios[n]);
    v.fitted = worst;
    v.expected = 0.9;
    v.details = {{"explicit_gap", r.explicit_gap}, {"explicit_gap_se", r.explicit_gap_se},
                 {"diverged", r.diverged ? 1.0 : 0.0}};
    v.pass = !r.diverged && worst < 0.9 && r.explicit_gap <= 3.0 * r.explicit_gap_se;
    out.push_back(std::move(v));
  }
  return out;
}

namespace {

const HolderReport& find_report(const std::vector<HolderReport>& reps, Direction dir, int q) {
  for (const auto& r : reps) {
    if (r.direction == dir && r.q == q) return r;
  }
  throw NumericalError("missing regularity report");
}

void fill_moments(Verdict& v, const HolderReport& r) {
  v.x_name = "lag";
  v.y_name = "moment";
  for (const auto& m : r.moments) {
    v.x.push_back(m.lag);
    v.y.push_back(m.mean);
  }
}

}  // namespace

Verdict verify_holder_time(int k, int d, int replicas, double tolerance, const VerifyOptions& opt) {
  const SIEConfig c = SIEConfig::holder_defaults(k, d);
  const SIESolver s(c, opt.cache_dir);
  const auto reps = holder_report(s, replicas, opt.threads, tolerance);
  const HolderReport& r = find_report(reps, Direction::kTime, 1);
  Verdict v;
  v.name = label("holder time", c.params);
  v.params = c.params;
  fill_moments(v, r);
  v.expected = r.expected_slope;
  v.fitted = r.fitted_slope;
  v.half_width = r.half_width;
  v.tolerance = tolerance;
  v.details = {{"steps", static_cast<double>(c.steps)}, {"replicas", static_cast<double>(replicas)}};
  v.pass = !r.refused && std::abs(r.fitted_slope - r.expected_slope) <= tolerance;
  v.note = r.note;
  return v;
}

Verdict verify_holder_space_invariance(int d, int replicas, double tolerance, const VerifyOptions& opt) {
  Verdict v;
  v.name = "holder space beta-invariance d=" + std::to_string(d);
  v.x_name = "k";
  v.y_name = "slope";
  v.tolerance = tolerance;
  bool refused = false;
  for (int k : {1, 2}) {
    const SIEConfig c = SIEConfig::defaults(k, d);
    const SIESolver s(c, opt.cache_dir);
    const auto reps = holder_report(s, replicas, opt.threads);
    const HolderReport& r = find_report(reps, Direction::kSpace, 1);
    refused = refused || r.refused;
    v.params = c.params;
    v.x.push_back(k);
    v.y.push_back(r.fitted_slope);
    v.details.emplace_back("half_width_k" + std::to_string(k), r.half_width);
  }
  v.fitted = std::abs(v.y[0] - v.y[1]);
  v.pass = !refused && v.fitted <= tolerance;
  if (refused) v.note = "fit refused: too few usable space lags";
  return v;
}

}  // namespace islt

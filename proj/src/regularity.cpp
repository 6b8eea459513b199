#include "islt/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "islt/errors.hpp"
#include "islt/noise.hpp"

namespace islt {

std::string_view to_string(Direction d) {
  return d == Direction::kTime ? "time" : "space";
}

namespace {

std::vector<int> choose_lags(int first, int cap) {
  std::vector<int> dyadic;
  for (int l = first; l <= cap; l *= 2) dyadic.push_back(l);
  if (static_cast<int>(dyadic.size()) >= kMinFitLags) return dyadic;
  std::vector<int> half;
  for (int l = first, i = 0; l <= cap; ++i) {
    half.push_back(l);
    l = i % 2 == 0 ? l * 3 / 2 : l * 4 / 3;
  }
  if (static_cast<int>(half.size()) >= kMinFitLags) return half;
  std::vector<int> even;
  for (int l = first + first % 2; l <= cap; l += 2) even.push_back(l);
  return even;
}

std::size_t stat_offset(const RegularityPanel& panel, Direction dir, std::size_t lag_index, int q) {
  const std::size_t base = dir == Direction::kTime ? 0 : panel.time_lags.size();
  return ((base + lag_index) * 2 + static_cast<std::size_t>(q - 1)) * 2;
}

void check_panel(const SIEConfig& cfg, const RegularityPanel& panel) {
  const int hw = cfg.lat.half_width();
  const int top = panel.base_steps.empty() ? 0 : *std::max_element(panel.base_steps.begin(), panel.base_steps.end());
  for (int l : panel.time_lags) {
    if (l < 1 || top + l > cfg.steps) throw DomainError("time lag not resolvable on the grid");
  }
  for (int l : panel.space_lags) {
    if (l < 2 || l % 2 != 0) throw DomainError("space lags must be even step counts");
    for (long c : panel.space_centres) {
      if (std::labs(c) + l / 2 > hw) throw DomainError("space lag leaves the truncation box");
    }
  }
}

}  // namespace

RegularityPanel default_panel(const SIEConfig& cfg) {
  const int M = cfg.steps;
  const int hw = cfg.lat.half_width();
  RegularityPanel p;
  for (int j = 0; j < 4; ++j) p.base_steps.push_back(M / 2 + j * M / 16);
  const long g = std::max(1, hw / 8);
  for (long j : {-2L, -1L, 0L, 1L}) {
    const long o = j * g;
    if (std::labs(o) <= hw) p.time_sites.push_back(o);
  }
  for (long c : {-2L, -1L, 0L, 1L}) {
    if (std::labs(c) <= hw) p.space_centres.push_back(c);
  }
  p.time_lags = choose_lags(std::max(4, M / 64), M / 4);
  // a quarter of the box width, widened to the half-width for small boxes
  const int space_cap = std::min(hw, 2 * (hw - 2));
  p.space_lags = choose_lags(4, std::min(space_cap, hw / 2));
  if (static_cast<int>(p.space_lags.size()) < kMinFitLags) p.space_lags = choose_lags(4, space_cap);
  return p;
}

std::size_t panel_stat_length(const RegularityPanel& panel) {
  return (panel.time_lags.size() + panel.space_lags.size()) * 4;
}

void panel_statistics(const FieldSample& f, const RegularityPanel& panel, double* out) {
  const int d = f.config.params.dimension();
  const int hw = f.config.lat.half_width();
  std::vector<long> x(static_cast<std::size_t>(d), 0);
  auto site = [&](long axis0) {
    x[0] = axis0;
    return box_site_index(hw, d, x);
  };
  auto emit = [&](Direction dir, std::size_t li, const std::vector<double>& inc) {
    for (int q = 1; q <= 2; ++q) {
      double acc = 0.0;
      for (double v : inc) acc += q == 1 ? v * v : v * v * v * v;
      const double X = acc / static_cast<double>(inc.size());
      const std::size_t o = stat_offset(panel, dir, li, q);
      out[o] = X;
      out[o + 1] = X * X;
    }
  };
  std::vector<double> inc;
  for (std::size_t li = 0; li < panel.time_lags.size(); ++li) {
    inc.clear();
    for (int t0 : panel.base_steps) {
      for (long s : panel.time_sites) {
        const std::size_t k = site(s);
        inc.push_back(f.random_part(t0 + panel.time_lags[li], k) - f.random_part(t0, k));
      }
    }
    emit(Direction::kTime, li, inc);
  }
  for (std::size_t li = 0; li < panel.space_lags.size(); ++li) {
    inc.clear();
    const long h = panel.space_lags[li] / 2;
    for (int t0 : panel.base_steps) {
      for (long c : panel.space_centres) {
        inc.push_back(f.random_part(t0, site(c + h)) - f.random_part(t0, site(c - h)));
      }
    }
    emit(Direction::kSpace, li, inc);
  }
}

double expected_slope(const ModelParams& p, Direction dir, int q) {
  const double nu = p.nu();
  const int d = p.dimension();
  if (dir == Direction::kTime) return (2.0 * nu - d) * q / (2.0 * nu);
  static constexpr double kAlpha[] = {1.0, 0.9, 0.45};
  p.require_sie_dimension("expected_slope");
  const double alpha = p.degenerate() ? 0.5 : kAlpha[d - 1];
  return 2.0 * q * alpha;
}

double table_path_exponent(const ModelParams& p, Direction dir) {
  const double nu = p.nu();
  const int d = p.dimension();
  if (dir == Direction::kTime) return (2.0 * nu - d) / (4.0 * nu);
  if (p.degenerate()) return 0.5;
  return std::min((4.0 - d) / 2.0, 1.0);
}

namespace {

std::vector<IncrementMoment> moments_from_sums(const SIEConfig& cfg, const RegularityPanel& panel,
                                               std::span<const double> sums, int replicas, Direction dir, int q) {
  std::vector<IncrementMoment> out;
  const auto& lags = panel.lags(dir);
  const double unit = dir == Direction::kTime ? cfg.dt() : cfg.lat.delta();
  const double R = replicas;
  for (std::size_t li = 0; li < lags.size(); ++li) {
    const std::size_t o = stat_offset(panel, dir, li, q);
    IncrementMoment m;
    m.lag = lags[li] * unit;
    m.mean = sums[o] / R;
    m.se = replicas > 1 ? std::sqrt(std::max(0.0, sums[o + 1] / R - m.mean * m.mean) / (R - 1.0)) : 0.0;
    out.push_back(m);
  }
  return out;
}

std::vector<double> sum_samples(std::span<const FieldSample> samples, const RegularityPanel& panel) {
  const std::size_t len = panel_stat_length(panel);
  return reduce_replicas(static_cast<int>(samples.size()), 1, len,
                         [&](int r, int, std::vector<double>& out) { panel_statistics(samples[r], panel, out.data()); });
}

void require_replicas(int replicas) {
  if (replicas < kMinHolderReplicas) {
    std::ostringstream msg;
    msg << "regularity fits need at least " << kMinHolderReplicas << " replicas (got " << replicas << ")";
    throw DomainError(msg.str());
  }
}

}  // namespace

std::vector<IncrementMoment> increment_moments(std::span<const FieldSample> samples, Direction dir,
                                               std::span<const int> lags, int q) {
  require_replicas(static_cast<int>(samples.size()));
  if (q < 1 || q > 2) throw DomainError("increment_moments: q must be 1 or 2");
  const SIEConfig& cfg = samples[0].config;
  RegularityPanel panel = default_panel(cfg);
  (dir == Direction::kTime ? panel.time_lags : panel.space_lags).assign(lags.begin(), lags.end());
  (dir == Direction::kTime ? panel.space_lags : panel.time_lags).clear();
  check_panel(cfg, panel);
  const std::vector<double> sums = sum_samples(samples, panel);
  return moments_from_sums(cfg, panel, sums, static_cast<int>(samples.size()), dir, q);
}

std::vector<HolderReport> holder_reports(const SIEConfig& cfg, const RegularityPanel& panel,
                                         std::span<const double> sums, int replicas, double tolerance) {
  std::vector<HolderReport> reports;
  for (Direction dir : {Direction::kTime, Direction::kSpace}) {
    for (int q = 1; q <= 2; ++q) {
      HolderReport r;
      r.params = cfg.params;
      r.direction = dir;
      r.q = q;
      r.tolerance = tolerance;
      r.expected_slope = expected_slope(cfg.params, dir, q);
      r.path_exponent_table = table_path_exponent(cfg.params, dir);
      r.moments = moments_from_sums(cfg, panel, sums, replicas, dir, q);
      if (static_cast<int>(r.moments.size()) < kMinFitLags) {
        r.refused = true;
        std::ostringstream msg;
        msg << "fit refused: " << r.moments.size() << " usable lags, need " << kMinFitLags;
        r.note = msg.str();
        reports.push_back(std::move(r));
        continue;
      }
      std::vector<double> lags, values;
      for (const auto& m : r.moments) {
        lags.push_back(m.lag);
        values.push_back(m.mean);
      }
      if (*std::min_element(values.begin(), values.end()) <= 0.0) {
        r.refused = true;
        r.note = "fit refused: zero increments";
        reports.push_back(std::move(r));
        continue;
      }
      const ScalingFit fit = fit_loglog(lags, values);
      r.fitted_slope = fit.slope;
      r.half_width = fit.half_width;
      r.path_exponent_fitted = fit.slope / (2.0 * q);
      r.pass = fit.slope >= r.expected_slope - tolerance;
      if (std::abs(fit.slope - r.expected_slope) <= tolerance) {
        r.note = "observed: slope matches the bound within tolerance";
      } else if (r.pass) {
        r.note = "slope above the bound";
      } else {
        r.note = "slope below the bound";
      }
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

std::vector<HolderReport> holder_report(const SIESolver& solver, int replicas, int threads, double tolerance) {
  require_replicas(replicas);
  const SIEConfig& cfg = solver.config();
  const RegularityPanel panel = default_panel(cfg);
  check_panel(cfg, panel);
  std::vector<std::shared_ptr<SIESolver::Workspace>> ws;
  for (int w = 0; w < std::max(1, std::min(threads, replicas)); ++w) ws.push_back(solver.workspace());
  const std::vector<double> sums =
      reduce_replicas(replicas, threads, panel_stat_length(panel), [&](int r, int w, std::vector<double>& out) {
        panel_statistics(solver.solve(static_cast<std::uint64_t>(r), *ws[w]), panel, out.data());
      });
  return holder_reports(cfg, panel, sums, replicas, tolerance);
}

std::vector<HolderReport> holder_report(std::span<const FieldSample> samples, double tolerance) {
  require_replicas(static_cast<int>(samples.size()));
  const SIEConfig& cfg = samples[0].config;
  const RegularityPanel panel = default_panel(cfg);
  check_panel(cfg, panel);
  return holder_reports(cfg, panel, sum_samples(samples, panel), static_cast<int>(samples.size()), tolerance);
}

}  // namespace islt

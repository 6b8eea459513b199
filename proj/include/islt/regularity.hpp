#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "islt/fit.hpp"
#include "islt/params.hpp"
#include "islt/sie.hpp"

namespace islt {

enum class Direction { kTime, kSpace };

std::string_view to_string(Direction d);

inline constexpr int kMinHolderReplicas = 200;
inline constexpr int kMinFitLags = 4;

// Base points and lags of the increment statistics. Time increments are
// R(t0 + l dt, x) - R(t0, x) at the time sites; space increments are
// R(t0, c + (l/2) e1) - R(t0, c - (l/2) e1) at the space centres. Lags are
// in grid steps (space lags even).
struct RegularityPanel {
  std::vector<int> base_steps;
  std::vector<long> time_sites;
  std::vector<long> space_centres;
  std::vector<int> time_lags;
  std::vector<int> space_lags;

  const std::vector<int>& lags(Direction d) const { return d == Direction::kTime ? time_lags : space_lags; }
};

// 4 base times x 4 sites near the origin. Time lags run from max(4, M/64)
// to M/4 steps, space lags from 4 to n_l/2 steps (n_l when that leaves fewer
// than 4). Lags are dyadic; when that leaves fewer than 4, factors 3/2 and
// 4/3 alternate, and failing that every even lag is used.
RegularityPanel default_panel(const SIEConfig& cfg);

// Statistics of one replica: for each direction, lag and q in {1,2}, the
// panel average X of |dR|^{2q} followed by X^2.
std::size_t panel_stat_length(const RegularityPanel& panel);
void panel_statistics(const FieldSample& f, const RegularityPanel& panel, double* out);

struct IncrementMoment {
  // physical lag (time units or space units)
  double lag = 0.0;
  double mean = 0.0;
  double se = 0.0;
};

// Monte Carlo averages of |dR|^{2q} over the panel. Throws DomainError with
// fewer than kMinHolderReplicas samples.
std::vector<IncrementMoment> increment_moments(std::span<const FieldSample> samples, Direction dir,
                                               std::span<const int> lags, int q);

// Moment slope bounds: time (2 nu - d) q / (2 nu); space 2 q alpha_d with
// alpha = 1, 0.9, 0.45 for d = 1, 2, 3 and alpha = 1/2 in the heat case.
double expected_slope(const ModelParams& p, Direction dir, int q);
// Path exponents of the regularity table: time (2 nu - d) / (4 nu); space
// min((4 - d)/2, 1), or 1/2 in the heat case.
double table_path_exponent(const ModelParams& p, Direction dir);

struct HolderReport {
  ModelParams params;
  Direction direction = Direction::kTime;
  int q = 1;
  double fitted_slope = 0.0;
  double expected_slope = 0.0;
  double half_width = 0.0;
  double tolerance = 0.07;
  bool pass = false;
  bool refused = false;
  std::string note;
  double path_exponent_table = 0.0;
  double path_exponent_fitted = 0.0;
  std::vector<IncrementMoment> moments;
};

// Reports for (time, space) x (q = 1, 2) from summed panel statistics.
std::vector<HolderReport> holder_reports(const SIEConfig& cfg, const RegularityPanel& panel,
                                         std::span<const double> sums, int replicas, double tolerance = 0.07);

// Runs `replicas` simulations and fits.
std::vector<HolderReport> holder_report(const SIESolver& solver, int replicas, int threads = 1,
                                        double tolerance = 0.07);
std::vector<HolderReport> holder_report(std::span<const FieldSample> samples, double tolerance = 0.07);

}  // namespace islt

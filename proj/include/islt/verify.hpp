#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "islt/estimates.hpp"
#include "islt/params.hpp"
#include "islt/regularity.hpp"

namespace islt {

// Outcome of one estimate or simulation check: a (lag, value) series, the
// fitted and expected quantity, and named scalar details.
struct Verdict {
  std::string name;
  ModelParams params;
  std::string x_name = "lag";
  std::string y_name = "value";
  std::vector<double> x;
  std::vector<double> y;
  double expected = 0.0;
  double fitted = 0.0;
  double half_width = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::vector<std::pair<std::string, double>> details;
  std::string note;
};

struct VerifyOptions {
  int threads = 1;
  std::optional<std::filesystem::path> cache_dir;
};

// Lattice kernel-table row sums within 1e-6 of 1 and continuum mass within
// 1e-5 of 1 at the given times; the table radius covers a 1e-10 tail.
Verdict verify_kernel_normalization(const ModelParams& p, double delta = 0.2,
                                    std::vector<double> times = {0.5, 1.0},
                                    const VerifyOptions& opt = {});

// Slope of log int K^2 against log t over t = 2^-4..2^4, target -d/(2 nu).
Verdict verify_l2(const ModelParams& p, double tolerance = 0.02);

// Slope of the temporal difference in h = t - r over 2^-8..2^-2 at t = 1,
// target (2 nu - d)/(2 nu). With cross_check and d = 1, also compares the
// identity against brute-force spatial quadrature at r = 0.75 (1%).
Verdict verify_temporal(const ModelParams& p, bool cross_check = false, double tolerance = 0.03);

// Slope of the spatial difference in |z| over 2^-7..2^-2 at t = 1, target
// 2 alpha_d.
Verdict verify_spatial(const ModelParams& p, double tolerance = 0.05);
// Spatial slopes at beta = 1/2 and 1/4 in dimension d agree within tolerance.
Verdict verify_spatial_invariance(int d, double tolerance = 0.05);

// DDE residual at x = 3 steps (delta = 0.1, t = 1) below 1e-3 relative
// (1e-6 when beta = 1), and O(h^2) decay of the second-order residual under
// halving h = t/25, t/50, t/100.
Verdict verify_dde(const ModelParams& p, DdeForm form = DdeForm::kDefault, double delta = 0.1);

// Lattice/continuum kernel ratio at t = 1, x = 0.5 for delta = 1/4, 1/8,
// 1/16; the finest within 1.2% of 1.
Verdict verify_limit(const ModelParams& p, double tolerance = 0.012);

// d = 4: I(eps) strictly increasing over eps = 1e-1..1e-6 with
// I(1e-6)/I(1e-1) > 3; d = 3 control: tail change below 1%.
Verdict verify_divergence(int k);

// a = 0 reduction, Gaussian variance oracle (R replicas), Picard
// contraction and moment envelopes for the d = 1 reference configuration.
std::vector<Verdict> verify_sie(int replicas = 2000, int picard_replicas = 500,
                                const VerifyOptions& opt = {});

// Time-direction q = 1 slopes within +-tolerance of (2 nu - d)/(2 nu) for
// the given (k, d) on the regularity grid.
Verdict verify_holder_time(int k, int d, int replicas = 500, double tolerance = 0.07,
                           const VerifyOptions& opt = {});
// Space-direction q = 1 slopes at beta = 1/2 and 1/4 agree within tolerance
// (both on the desk-default grid).
Verdict verify_holder_space_invariance(int d, int replicas = 500, double tolerance = 0.1,
                                       const VerifyOptions& opt = {});

}  // namespace islt

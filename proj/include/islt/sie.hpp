#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "islt/kernel_table.hpp"
#include "islt/noise.hpp"
#include "islt/params.hpp"

namespace islt {

// Diffusion coefficient presets. All satisfy a(u)^2 <= C (1 + u^2).
struct Coefficient {
  enum class Kind { kZero, kConst, kLinear, kSine, kSqrt };
  Kind kind = Kind::kConst;
  double c = 1.0;

  // "zero", "const:c", "linear:c", "sin:c", "sqrt:c"
  static Coefficient parse(std::string_view text);
  std::string str() const;
  double operator()(double u) const;
  bool is_zero() const noexcept { return kind == Kind::kZero || c == 0.0; }
  bool is_constant() const noexcept { return kind == Kind::kConst; }
};

// Initial functions. gaussian: exp(-|x - center 1|^2 / (2 width^2)).
// cosine: prod_i cos(x_i).
struct InitialCondition {
  enum class Kind { kZero, kConst, kGaussian, kCosine };
  Kind kind = Kind::kZero;
  double c = 0.0;
  double center = 0.0;
  double width = 0.5;

  // "zero", "const:c", "gaussian:center,width", "cosine"
  static InitialCondition parse(std::string_view text);
  std::string str() const;
  double operator()(std::span<const double> x) const;
};

struct SIEConfig {
  ModelParams params;
  Lattice lat;
  double horizon = 1.0;
  int steps = 256;
  Coefficient a;
  InitialCondition u0;
  std::uint64_t seed = 1;
  int replicas = 1;

  double dt() const noexcept { return horizon / steps; }
  double time(int m) const noexcept { return horizon * m / steps; }
  void validate() const;

  // Desk-scale defaults: d=1: delta 0.05, l 2, M 256; d=2: 0.1, 1, 128;
  // d=3: 0.2, 1, 96. T = 1, a = const:1, u0 = zero.
  static SIEConfig defaults(int k, int d);
  // Finer time grid for regularity fits: M = 1024 for d = 1, 2; d = 3 keeps 96.
  static SIEConfig holder_defaults(int k, int d);
};

// One replica: U and the deterministic part on (M+1) times x box sites,
// row-major in time.
struct FieldSample {
  SIEConfig config;
  std::uint64_t replica = 0;
  std::vector<double> U;
  std::vector<double> D;

  std::size_t sites() const noexcept;
  double u(int m, std::size_t site) const { return U[static_cast<std::size_t>(m) * sites() + site]; }
  double det(int m, std::size_t site) const { return D[static_cast<std::size_t>(m) * sites() + site]; }
  double random_part(int m, std::size_t site) const { return u(m, site) - det(m, site); }

  void write_csv(const std::filesystem::path& path) const;
  void save(const std::filesystem::path& path) const;
  static FieldSample load(const std::filesystem::path& path);
};

// sum_y K_{t; x, y} u0(y) over the whole lattice, for every step m and box
// site; layout as FieldSample::D.
std::vector<double> deterministic_part(const SIEConfig& cfg);
double deterministic_part(const SIEConfig& cfg, double t, std::span<const long> x_steps);

// Kernel table spec for the lags m dt, m = 1..M, radius 2 n_l.
KernelTableSpec sie_table_spec(const SIEConfig& cfg);

// Left-point stochastic Volterra scheme on the truncation box. The
// convolution over sites is done per step by FFT on a zero-padded grid.
class SIESolver {
 public:
  class Workspace;

  explicit SIESolver(const SIEConfig& cfg, std::optional<std::filesystem::path> cache_dir = {});
  SIESolver(const SIEConfig& cfg, KernelTable table);
  ~SIESolver();
  SIESolver(const SIESolver&) = delete;
  SIESolver& operator=(const SIESolver&) = delete;

  const SIEConfig& config() const noexcept { return cfg_; }
  const KernelTable& table() const noexcept { return table_; }
  bool cache_hit() const noexcept { return cache_hit_; }
  std::size_t sites() const noexcept { return sites_; }
  int fft_size() const noexcept { return P_; }
  const std::vector<double>& deterministic() const noexcept { return det_; }

  std::shared_ptr<Workspace> workspace() const;

  FieldSample solve(std::uint64_t replica, Workspace& ws) const;
  FieldSample solve(const NoiseField& noise, Workspace& ws) const;
  FieldSample solve(std::uint64_t replica) const;

  // Full discretized convolution sum_{i<m} K_{t_m - t_i} * xi_i / delta^{d/2}
  // of a source xi given on M steps x box sites; result on (M+1) x sites.
  std::vector<double> convolve(std::span<const double> xi, Workspace& ws) const;

  // c^2 dt / delta^d sum_{i<m} sum_y K^2_{t_m - t_i; x, y} for a constant c.
  double exact_variance(int m, std::span<const long> x_steps) const;

 private:
  SIEConfig cfg_;
  KernelTable table_;
  bool cache_hit_ = false;
  int hw_ = 0;
  std::size_t sites_ = 0;
  int P_ = 0;
  std::size_t real_size_ = 0;
  std::size_t spec_size_ = 0;
  std::vector<double> khat_;
  std::vector<double> det_;
  void* forward_ = nullptr;
  void* backward_ = nullptr;

  void init();
  void scatter(const double* box, double* grid) const;
  void gather(const double* grid, double* box, const double* base) const;
};

// Sums per-replica statistic vectors over replicas 0..R-1 with a pairwise
// tree fixed by replica index, so the result does not depend on `threads`.
std::vector<double> reduce_replicas(int replicas, int threads, std::size_t length,
                                    const std::function<void(int replica, int worker, std::vector<double>& out)>& stat);

// Replica averages at every (step, box site).
class MomentSummary {
 public:
  enum Stat { kR1, kR2, kR3, kR4, kU2, kU4, kU6, kStatCount };

  MomentSummary(int steps, std::size_t sites, int replicas, std::vector<double> sums);

  int steps() const noexcept { return steps_; }
  std::size_t sites() const noexcept { return sites_; }
  int replicas() const noexcept { return replicas_; }

  double mean(Stat s, int m, std::size_t site) const;
  double variance(int m, std::size_t site) const;
  double variance_se(int m, std::size_t site) const;
  double skewness(int m, std::size_t site) const;
  double excess_kurtosis(int m, std::size_t site) const;
  // sup over sites of mean |U|^{2q}, q in {1,2,3}, per step.
  std::vector<double> sup_moment(int q) const;

 private:
  int steps_;
  std::size_t sites_;
  int replicas_;
  std::vector<double> sums_;
  double sum(Stat s, int m, std::size_t site) const {
    return sums_[(static_cast<std::size_t>(s) * (steps_ + 1) + m) * sites_ + site];
  }
};

MomentSummary simulate_moments(const SIESolver& solver, int replicas, int threads = 1);

struct VarianceCheck {
  int step = 0;
  std::vector<long> site;
  double exact = 0.0;
  double empirical = 0.0;
  double se = 0.0;
  double z = 0.0;
  bool pass = false;
};

VarianceCheck variance_check(const SIESolver& solver, const MomentSummary& m, int step,
                             std::span<const long> x_steps);

// Smallest C >= 0 with values[i] <= C exp(C t_i) for all i.
struct MomentEnvelope {
  int q = 1;
  double C = 0.0;
  double max_value = 0.0;
  bool pass = false;
};

MomentEnvelope moment_envelope(std::span<const double> times, std::span<const double> values, int q,
                               double c_max = 50.0);

struct PicardReport {
  // D*_{n,2}(T) = sup_x mean |U^(n+1) - U^(n)|^2 at the final time.
  std::vector<double> dstar;
  std::vector<double> ratios;
  bool diverged = false;
  int divergence_at = -1;
  // sup_x mean |U^(N) - U_explicit|^2 at T and its standard error.
  double explicit_gap = 0.0;
  double explicit_gap_se = 0.0;
};

PicardReport picard_solve(const SIESolver& solver, int replicas, int iterations, int threads = 1);

}  // namespace islt

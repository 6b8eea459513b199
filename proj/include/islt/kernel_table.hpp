#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "islt/params.hpp"

namespace islt {

enum class Flavor : std::uint8_t { kContinuum = 0, kLattice = 1 };

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);

struct KernelTableSpec {
  Flavor flavor = Flavor::kLattice;
  ModelParams params;
  // Lattice: step size. Continuum: radial spacing.
  double delta = 0.1;
  // Lattice: largest |x_i| / delta stored. Continuum: number of radial spacings.
  int radius = 10;
  std::vector<double> times;
  std::string tolerance_tag = "graded-gl15";
  std::size_t memory_budget = std::size_t{2} << 30;

  std::uint64_t content_hash() const;
};

// Dense cache of kernel values over a time grid and a displacement set.
// Lattice tables store one value per canonical displacement
// a_1 >= a_2 >= ... >= a_d >= 0 (|x_i| / delta sorted); every other
// displacement is recovered by sign and permutation symmetry.
class KernelTable {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  static KernelTable build(const KernelTableSpec& spec);

  // Loads from cache_dir/kt-<hash>.bin when present, otherwise builds and
  // writes it. `hit` reports which happened.
  static KernelTable load_or_build(const KernelTableSpec& spec,
                                   const std::filesystem::path& cache_dir, bool* hit = nullptr);

  const KernelTableSpec& spec() const noexcept { return spec_; }
  std::uint64_t hash() const noexcept { return spec_.content_hash(); }
  std::size_t time_count() const noexcept { return spec_.times.size(); }
  std::size_t entries_per_time() const noexcept { return count_; }
  const std::vector<double>& values() const noexcept { return values_; }

  // Lattice: displacement in steps. Throws SizeError outside the table.
  double at(std::size_t time_index, std::span<const long> steps) const;
  // Continuum: value at radius index i (|x| = i * spacing).
  double at_radius(std::size_t time_index, int i) const;

  // Lattice: sum over all stored displacements (with multiplicities).
  double row_sum(std::size_t time_index) const;
  // Lattice: sum of squares over all stored displacements.
  double row_sum_squares(std::size_t time_index) const;

  // Canonical displacement of a flat index, and its symmetry multiplicity.
  std::vector<int> canonical(std::size_t index) const;
  static std::size_t canonical_index(std::span<const int> sorted_desc);
  static double multiplicity(std::span<const int> canonical);
  static std::size_t canonical_count(int radius, int d);

  void save(const std::filesystem::path& path) const;
  static KernelTable load(const std::filesystem::path& path);
  void write_csv(const std::filesystem::path& path) const;

 private:
  KernelTableSpec spec_;
  std::size_t count_ = 0;
  std::vector<double> values_;
  std::vector<std::vector<int>> reps_;
  void index_reps();
};

}  // namespace islt

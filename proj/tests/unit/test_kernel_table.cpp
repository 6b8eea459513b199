#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "islt/errors.hpp"
#include "islt/kernel_table.hpp"
#include "islt/kernels.hpp"

using namespace islt;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("islt-test-" + name + "-" + std::to_string(std::random_device{}()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

KernelTableSpec lattice_spec(int k, int d) {
  KernelTableSpec s;
  s.flavor = Flavor::kLattice;
  s.params = ModelParams::make(k, d);
  s.delta = 0.2;
  s.radius = 12;
  s.times = {0.25, 1.0};
  return s;
}

}  // namespace

TEST_CASE("table entries equal direct kernel evaluation") {
  const KernelTableSpec spec = lattice_spec(1, 2);
  const KernelTable t = KernelTable::build(spec);
  const Lattice lat(spec.delta, 2, 1.0);
  for (std::size_t ti = 0; ti < spec.times.size(); ++ti) {
    const LatticeRows rows(spec.params, spec.delta, spec.times[ti], spec.radius);
    for (long a : {0L, 3L, -7L, 12L}) {
      for (long b : {0L, -1L, 5L}) {
        const long s[] = {a, b};
        // entries are stored under the sorted-descending |steps| representative
        long c[] = {std::max(std::labs(a), std::labs(b)), std::min(std::labs(a), std::labs(b))};
        CHECK(t.at(ti, s) == rows.kernel(c));
        // direct calls size the Bessel recursion by the displacement, so only the last bits may move
        CHECK(t.at(ti, s) == doctest::Approx(isltrw_kernel(spec.params, lat, spec.times[ti], s)).epsilon(1e-13));
      }
    }
  }
  const long out[] = {13, 0};
  CHECK_THROWS_AS(t.at(0, out), SizeError);
}

TEST_CASE("canonical indexing covers the box") {
  for (int d = 1; d <= 3; ++d) {
    const int R = 6;
    double total = 0.0;
    KernelTableSpec spec = lattice_spec(1, d);
    spec.radius = R;
    spec.times = {0.5};
    const KernelTable t = KernelTable::build(spec);
    CHECK(t.entries_per_time() == KernelTable::canonical_count(R, d));
    for (std::size_t i = 0; i < t.entries_per_time(); ++i) {
      const auto c = t.canonical(i);
      CHECK(KernelTable::canonical_index(c) == i);
      total += KernelTable::multiplicity(c);
    }
    CHECK(total == std::pow(2 * R + 1, d));
  }
}

TEST_CASE("row sums approach one with a wide radius") {
  KernelTableSpec spec = lattice_spec(2, 1);
  spec.radius = tail_radius(spec.params, spec.delta, 1.0);
  const KernelTable t = KernelTable::build(spec);
  CHECK(std::abs(t.row_sum(1) - 1.0) < 1e-9);
  CHECK(t.row_sum_squares(1) > 0.0);
}

TEST_CASE("content hash separates specs") {
  const KernelTableSpec a = lattice_spec(1, 1);
  KernelTableSpec b = a;
  CHECK(a.content_hash() == b.content_hash());
  b.delta = 0.1;
  CHECK(a.content_hash() != b.content_hash());
  b = a;
  b.times.push_back(2.0);
  CHECK(a.content_hash() != b.content_hash());
  b = a;
  b.params = ModelParams::make(2, 1);
  CHECK(a.content_hash() != b.content_hash());
  b = a;
  b.tolerance_tag = "other";
  CHECK(a.content_hash() != b.content_hash());
}

TEST_CASE("cache round trip") {
  const fs::path dir = scratch_dir("cache");
  const KernelTableSpec spec = lattice_spec(1, 2);
  bool hit = true;
  const KernelTable first = KernelTable::load_or_build(spec, dir, &hit);
  CHECK_FALSE(hit);
  const KernelTable second = KernelTable::load_or_build(spec, dir, &hit);
  CHECK(hit);
  CHECK(first.values() == second.values());
  CHECK(first.hash() == second.hash());
  fs::remove_all(dir);
}

TEST_CASE("corrupt cache files are rejected") {
  const fs::path dir = scratch_dir("corrupt");
  const KernelTable t = KernelTable::build(lattice_spec(1, 1));
  const fs::path f = dir / "t.bin";
  t.save(f);
  CHECK(KernelTable::load(f).values() == t.values());
  fs::resize_file(f, fs::file_size(f) / 2);
  CHECK_THROWS(KernelTable::load(f));
  fs::remove_all(dir);
}

TEST_CASE("csv export") {
  const fs::path dir = scratch_dir("csv");
  KernelTableSpec spec = lattice_spec(1, 2);
  spec.radius = 2;
  spec.times = {1.0};
  const KernelTable t = KernelTable::build(spec);
  t.write_csv(dir / "k.csv");
  std::ifstream in(dir / "k.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,x1,x2,value");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == static_cast<int>(KernelTable::canonical_count(2, 2)));
  fs::remove_all(dir);
}

TEST_CASE("continuum tables") {
  KernelTableSpec spec;
  spec.flavor = Flavor::kContinuum;
  spec.params = ModelParams::make(1, 1);
  spec.delta = 0.05;
  spec.radius = 20;
  spec.times = {1.0};
  const KernelTable t = KernelTable::build(spec);
  const double r = 7 * spec.delta;
  CHECK(t.at_radius(0, 7) == isltbm_kernel_r2(spec.params, 1.0, r * r));
  const double x[] = {0.35};
  CHECK(t.at_radius(0, 7) == doctest::Approx(isltbm_kernel(spec.params, 1.0, x)).epsilon(1e-13));
}

TEST_CASE("oversized tables raise a size error") {
  KernelTableSpec spec = lattice_spec(1, 3);
  spec.radius = 2000;
  spec.memory_budget = std::size_t{1} << 20;
  CHECK_THROWS_AS(KernelTable::build(spec), SizeError);
}

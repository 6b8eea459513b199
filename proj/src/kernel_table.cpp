#include "islt/kernel_table.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "islt/errors.hpp"
#include "islt/kernels.hpp"

namespace islt {

namespace {

constexpr char kMagic[8] = {'I', 'S', 'L', 'T', 'K', 'T', '0', '1'};

std::uint64_t binom(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

class ByteSink {
 public:
  template <class T>
  void put(const T& v) {
    const char* p = reinterpret_cast<const char*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    bytes.insert(bytes.end(), c, c + n);
  }
  std::vector<char> bytes;
};

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw SizeError("kernel cache: truncated file");
  return v;
}

void enumerate(int d, int i, int upper, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (i == d) {
    out.push_back(cur);
    return;
  }
  for (int a = 0; a <= upper; ++a) {
    cur[i] = a;
    enumerate(d, i + 1, a, cur, out);
  }
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t KernelTableSpec::content_hash() const {
  ByteSink s;
  s.put(KernelTable::kFormatVersion);
  s.put(static_cast<std::uint8_t>(flavor));
  s.put(static_cast<std::int32_t>(params.level()));
  s.put(static_cast<std::int32_t>(params.dimension()));
  s.put(delta);
  s.put(static_cast<std::int32_t>(radius));
  s.put(static_cast<std::uint64_t>(times.size()));
  s.put_bytes(times.data(), times.size() * sizeof(double));
  s.put_bytes(tolerance_tag.data(), tolerance_tag.size());
  return fnv1a64(s.bytes.data(), s.bytes.size());
}

std::size_t KernelTable::canonical_count(int radius, int d) {
  return static_cast<std::size_t>(binom(static_cast<std::uint64_t>(radius + d), d));
}

std::size_t KernelTable::canonical_index(std::span<const int> a) {
  const std::size_t d = a.size();
  std::uint64_t idx = 0;
  for (std::size_t i = 0; i < d; ++i) {
    idx += binom(static_cast<std::uint64_t>(a[i]) + d - 1 - i, d - i);
  }
  return static_cast<std::size_t>(idx);
}

double KernelTable::multiplicity(std::span<const int> a) {
  double m = 1.0;
  for (std::size_t i = 1; i <= a.size(); ++i) m *= static_cast<double>(i);
  std::size_t i = 0;
  while (i < a.size()) {
    std::size_t j = i;
    while (j < a.size() && a[j] == a[i]) ++j;
    for (std::size_t r = 2; r <= j - i; ++r) m /= static_cast<double>(r);
    if (a[i] != 0) m *= static_cast<double>(1u << (j - i));
    i = j;
  }
  return m;
}

void KernelTable::index_reps() {
  reps_.clear();
  if (spec_.flavor != Flavor::kLattice) return;
  const int d = spec_.params.dimension();
  std::vector<std::vector<int>> all;
  std::vector<int> cur(d, 0);
  enumerate(d, 0, spec_.radius, cur, all);
  reps_.assign(all.size(), {});
  for (auto& rep : all) reps_[canonical_index(rep)] = rep;
}

std::vector<int> KernelTable::canonical(std::size_t index) const {
  if (index >= reps_.size()) throw SizeError("kernel table: canonical index out of range");
  return reps_[index];
}

KernelTable KernelTable::build(const KernelTableSpec& spec) {
  if (spec.times.empty()) throw DomainError("kernel table: empty time grid");
  for (std::size_t i = 0; i < spec.times.size(); ++i) {
    double t = spec.times[i];
    bool ok = spec.flavor == Flavor::kLattice ? t >= 0.0 : t > 0.0;
    if (!ok || (i > 0 && !(t > spec.times[i - 1]))) {
      throw DomainError("kernel table: times must be strictly increasing and positive");
    }
  }
  if (spec.radius < 0) throw DomainError("kernel table: radius must be >= 0");
  if (!(spec.delta > 0.0)) throw DomainError("kernel table: delta must be > 0");
  KernelTable table;
  table.spec_ = spec;
  const int d = spec.params.dimension();
  table.count_ = spec.flavor == Flavor::kLattice ? canonical_count(spec.radius, d)
                                                 : static_cast<std::size_t>(spec.radius) + 1;
  const double bytes = static_cast<double>(table.count_) * spec.times.size() * sizeof(double);
  if (bytes > static_cast<double>(spec.memory_budget)) {
    std::ostringstream msg;
    msg << "kernel table needs " << bytes << " bytes (" << spec.times.size() << " times x "
        << table.count_ << " displacements, d = " << d << ", radius = " << spec.radius
        << "), budget " << spec.memory_budget;
    throw SizeError(msg.str());
  }
  table.index_reps();
  table.values_.assign(table.count_ * spec.times.size(), 0.0);
  for (std::size_t ti = 0; ti < spec.times.size(); ++ti) {
    double* out = table.values_.data() + ti * table.count_;
    const double t = spec.times[ti];
    if (spec.flavor == Flavor::kLattice) {
      LatticeRows rows(spec.params, spec.delta, t, spec.radius);
      std::vector<long> steps(d);
      for (std::size_t i = 0; i < table.count_; ++i) {
        for (int c = 0; c < d; ++c) steps[c] = table.reps_[i][c];
        out[i] = rows.kernel(steps);
      }
    } else {
      for (std::size_t i = 0; i < table.count_; ++i) {
        double r = static_cast<double>(i) * spec.delta;
        out[i] = isltbm_kernel_r2(spec.params, t, r * r);
      }
    }
  }
  return table;
}

double KernelTable::at(std::size_t time_index, std::span<const long> steps) const {
  if (spec_.flavor != Flavor::kLattice) throw DomainError("kernel table: not a lattice table");
  if (time_index >= time_count()) throw SizeError("kernel table: time index out of range");
  const int d = spec_.params.dimension();
  if (static_cast<int>(steps.size()) != d) throw DomainError("kernel table: dimension mismatch");
  int a[ModelParams::kMaxDimension];
  for (int i = 0; i < d; ++i) {
    long v = std::labs(steps[i]);
    if (v > spec_.radius) throw SizeError("kernel table: displacement outside table radius");
    a[i] = static_cast<int>(v);
  }
  std::sort(a, a + d, std::greater<int>());
  return values_[time_index * count_ + canonical_index(std::span<const int>(a, d))];
}

double KernelTable::at_radius(std::size_t time_index, int i) const {
  if (spec_.flavor != Flavor::kContinuum) throw DomainError("kernel table: not a continuum table");
  if (time_index >= time_count() || i < 0 || i > spec_.radius) {
    throw SizeError("kernel table: lookup outside table");
  }
  return values_[time_index * count_ + static_cast<std::size_t>(i)];
}

double KernelTable::row_sum(std::size_t time_index) const {
  if (spec_.flavor != Flavor::kLattice) throw DomainError("kernel table: row sums need a lattice table");
  const double* v = values_.data() + time_index * count_;
  double acc = 0.0;
  for (std::size_t i = 0; i < count_; ++i) acc += multiplicity(reps_[i]) * v[i];
  return acc;
}

double KernelTable::row_sum_squares(std::size_t time_index) const {
  if (spec_.flavor != Flavor::kLattice) throw DomainError("kernel table: row sums need a lattice table");
  const double* v = values_.data() + time_index * count_;
  double acc = 0.0;
  for (std::size_t i = 0; i < count_; ++i) acc += multiplicity(reps_[i]) * v[i] * v[i];
  return acc;
}

void KernelTable::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw SizeError("kernel cache: cannot write " + tmp.string());
    ByteSink s;
    s.put_bytes(kMagic, sizeof(kMagic));
    s.put(kFormatVersion);
    s.put(hash());
    s.put(static_cast<std::uint8_t>(spec_.flavor));
    s.put(static_cast<std::int32_t>(spec_.params.level()));
    s.put(static_cast<std::int32_t>(spec_.params.dimension()));
    s.put(spec_.delta);
    s.put(static_cast<std::int32_t>(spec_.radius));
    s.put(static_cast<std::uint64_t>(spec_.times.size()));
    s.put_bytes(spec_.times.data(), spec_.times.size() * sizeof(double));
    s.put(static_cast<std::uint32_t>(spec_.tolerance_tag.size()));
    s.put_bytes(spec_.tolerance_tag.data(), spec_.tolerance_tag.size());
    s.put(static_cast<std::uint64_t>(count_));
    out.write(s.bytes.data(), static_cast<std::streamsize>(s.bytes.size()));
    out.write(reinterpret_cast<const char*>(values_.data()),
              static_cast<std::streamsize>(values_.size() * sizeof(double)));
  }
  std::filesystem::rename(tmp, path);
}

KernelTable KernelTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SizeError("kernel cache: cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw SizeError("kernel cache: bad magic in " + path.string());
  }
  if (get<std::uint32_t>(in) != kFormatVersion) throw SizeError("kernel cache: version mismatch");
  const auto stored_hash = get<std::uint64_t>(in);
  KernelTable table;
  KernelTableSpec& spec = table.spec_;
  spec.flavor = static_cast<Flavor>(get<std::uint8_t>(in));
  const int k = get<std::int32_t>(in);
  const int d = get<std::int32_t>(in);
  spec.params = ModelParams::make(k, d);
  spec.delta = get<double>(in);
  spec.radius = get<std::int32_t>(in);
  spec.times.resize(get<std::uint64_t>(in));
  in.read(reinterpret_cast<char*>(spec.times.data()),
          static_cast<std::streamsize>(spec.times.size() * sizeof(double)));
  spec.tolerance_tag.resize(get<std::uint32_t>(in));
  in.read(spec.tolerance_tag.data(), static_cast<std::streamsize>(spec.tolerance_tag.size()));
  table.count_ = get<std::uint64_t>(in);
  table.values_.resize(table.count_ * spec.times.size());
  in.read(reinterpret_cast<char*>(table.values_.data()),
          static_cast<std::streamsize>(table.values_.size() * sizeof(double)));
  if (!in) throw SizeError("kernel cache: truncated file " + path.string());
  if (spec.content_hash() != stored_hash) throw SizeError("kernel cache: content hash mismatch");
  table.index_reps();
  return table;
}

KernelTable KernelTable::load_or_build(const KernelTableSpec& spec,
                                       const std::filesystem::path& cache_dir, bool* hit) {
  std::ostringstream name;
  name << "kt-" << std::hex << std::setw(16) << std::setfill('0') << spec.content_hash() << ".bin";
  const std::filesystem::path path = cache_dir / name.str();
  if (std::filesystem::exists(path)) {
    try {
      KernelTable t = load(path);
      if (t.spec_.times == spec.times) {
        t.spec_.memory_budget = spec.memory_budget;
        if (hit) *hit = true;
        return t;
      }
    } catch (const SizeError&) {
      // stale or corrupt cache entry: rebuild below
    }
  }
  KernelTable t = build(spec);
  t.save(path);
  if (hit) *hit = false;
  return t;
}

void KernelTable::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw SizeError("cannot write " + path.string());
  const int d = spec_.params.dimension();
  out << "t";
  for (int i = 1; i <= d; ++i) out << ",x" << i;
  out << ",value\n";
  out << std::setprecision(17);
  for (std::size_t ti = 0; ti < time_count(); ++ti) {
    for (std::size_t i = 0; i < count_; ++i) {
      out << spec_.times[ti];
      for (int c = 0; c < d; ++c) {
        double coord = 0.0;
        if (spec_.flavor == Flavor::kLattice) {
          coord = reps_[i][c] * spec_.delta;
        } else if (c == 0) {
          coord = static_cast<double>(i) * spec_.delta;
        }
        out << ',' << coord;
      }
      out << ',' << values_[ti * count_ + i] << '\n';
    }
  }
}

}  // namespace islt

#include "islt/sie.hpp"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "islt/errors.hpp"
#include "islt/kernels.hpp"

namespace islt {

namespace {

double parse_number(std::string_view s, std::string_view what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw DomainError("cannot parse " + std::string(what) + " value '" + std::string(s) + "'");
  }
  return v;
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

// u0 outside this many widths is below 1e-18.
constexpr double kGaussianSupport = 9.1;

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

bool fft_friendly(int n) {
  for (int f : {2, 3, 5}) {
    while (n % f == 0) n /= f;
  }
  return n == 1;
}

}  // namespace

// ---- presets ---------------------------------------------------------------

Coefficient Coefficient::parse(std::string_view text) {
  Coefficient a;
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  if (name == "zero") {
    if (colon != std::string_view::npos) throw DomainError("a preset 'zero' takes no value");
    a.kind = Kind::kZero;
    a.c = 0.0;
    return a;
  }
  if (colon == std::string_view::npos) throw DomainError("a preset needs a value: " + std::string(text));
  a.c = parse_number(text.substr(colon + 1), "a");
  if (name == "const") {
    a.kind = Kind::kConst;
  } else if (name == "linear") {
    a.kind = Kind::kLinear;
  } else if (name == "sin") {
    a.kind = Kind::kSine;
  } else if (name == "sqrt") {
    a.kind = Kind::kSqrt;
  } else {
    throw DomainError("unknown a preset '" + std::string(name) + "' (zero, const, linear, sin, sqrt)");
  }
  return a;
}

std::string Coefficient::str() const {
  switch (kind) {
    case Kind::kZero: return "zero";
    case Kind::kConst: return "const:" + fmt(c);
    case Kind::kLinear: return "linear:" + fmt(c);
    case Kind::kSine: return "sin:" + fmt(c);
    case Kind::kSqrt: return "sqrt:" + fmt(c);
  }
  return "zero";
}

double Coefficient::operator()(double u) const {
  switch (kind) {
    case Kind::kZero: return 0.0;
    case Kind::kConst: return c;
    case Kind::kLinear: return c * u;
    case Kind::kSine: return c * std::sin(u);
    case Kind::kSqrt: return c * std::sqrt(1.0 + u * u);
  }
  return 0.0;
}

InitialCondition InitialCondition::parse(std::string_view text) {
  InitialCondition u;
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string_view rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  if (name == "zero" || name == "cosine") {
    if (colon != std::string_view::npos) throw DomainError("u0 preset '" + std::string(name) + "' takes no value");
    u.kind = name == "zero" ? Kind::kZero : Kind::kCosine;
  } else if (name == "const") {
    u.kind = Kind::kConst;
    u.c = parse_number(rest, "u0");
  } else if (name == "gaussian") {
    const auto comma = rest.find(',');
    if (comma == std::string_view::npos) throw DomainError("u0 gaussian needs center,width");
    u.kind = Kind::kGaussian;
    u.center = parse_number(rest.substr(0, comma), "u0 center");
    u.width = parse_number(rest.substr(comma + 1), "u0 width");
    if (!(u.width > 0.0)) throw DomainError("u0 gaussian width must be > 0");
  } else {
    throw DomainError("unknown u0 preset '" + std::string(name) + "' (zero, const, gaussian, cosine)");
  }
  return u;
}

std::string InitialCondition::str() const {
  switch (kind) {
    case Kind::kZero: return "zero";
    case Kind::kConst: return "const:" + fmt(c);
    case Kind::kGaussian: return "gaussian:" + fmt(center) + "," + fmt(width);
    case Kind::kCosine: return "cosine";
  }
  return "zero";
}

double InitialCondition::operator()(std::span<const double> x) const {
  switch (kind) {
    case Kind::kZero: return 0.0;
    case Kind::kConst: return c;
    case Kind::kGaussian: {
      double r2 = 0.0;
      for (double xi : x) r2 += (xi - center) * (xi - center);
      return std::exp(-r2 / (2.0 * width * width));
    }
    case Kind::kCosine: {
      double v = 1.0;
      for (double xi : x) v *= std::cos(xi);
      return v;
    }
  }
  return 0.0;
}

void SIEConfig::validate() const {
  params.require_sie_dimension("simulate");
  if (lat.dimension() != params.dimension()) throw DomainError("lattice and model dimensions differ");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("horizon T must be > 0");
  if (steps < 1) throw DomainError("steps M must be >= 1");
  if (replicas < 1) throw DomainError("replicas must be >= 1");
}

SIEConfig SIEConfig::defaults(int k, int d) {
  SIEConfig c;
  c.params = ModelParams::make(k, d);
  c.params.require_sie_dimension("simulate");
  switch (d) {
    case 1: c.lat = Lattice(0.05, 1, 2.0); c.steps = 256; break;
    case 2: c.lat = Lattice(0.1, 2, 1.0); c.steps = 128; break;
    default: c.lat = Lattice(0.2, 3, 1.0); c.steps = 96; break;
  }
  c.horizon = 1.0;
  c.a = Coefficient::parse("const:1");
  c.u0 = InitialCondition{};
  return c;
}

SIEConfig SIEConfig::holder_defaults(int k, int d) {
  SIEConfig c = defaults(k, d);
  if (d <= 2) c.steps = 1024;
  return c;
}

// ---- field samples ---------------------------------------------------------

std::size_t FieldSample::sites() const noexcept {
  return static_cast<std::size_t>(config.lat.site_count());
}

void FieldSample::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw SizeError("cannot write " + path.string());
  const int d = config.lat.dimension();
  const int hw = config.lat.half_width();
  out << "t";
  for (int i = 0; i < d; ++i) out << ",x" << (i + 1);
  out << ",U,D\n";
  out.precision(17);
  long off[ModelParams::kMaxDimension];
  for (int m = 0; m <= config.steps; ++m) {
    for (std::size_t s = 0; s < sites(); ++s) {
      box_site_steps(hw, d, s, off);
      out << config.time(m);
      for (int i = 0; i < d; ++i) out << ',' << off[i] * config.lat.delta();
      out << ',' << u(m, s) << ',' << det(m, s) << '\n';
    }
  }
}

namespace {

constexpr char kFieldMagic[8] = {'I', 'S', 'L', 'T', 'F', 'S', '0', '1'};

template <class T>
void put(std::ostream& o, const T& v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& i) {
  T v{};
  i.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!i) throw SizeError("truncated field file");
  return v;
}

}  // namespace

void FieldSample::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SizeError("cannot write " + path.string());
  out.write(kFieldMagic, sizeof(kFieldMagic));
  put<std::int32_t>(out, config.params.level());
  put<std::int32_t>(out, config.params.dimension());
  put(out, config.lat.delta());
  put(out, config.lat.radius());
  put(out, config.horizon);
  put<std::int32_t>(out, config.steps);
  put<std::int32_t>(out, static_cast<std::int32_t>(config.a.kind));
  put(out, config.a.c);
  put<std::int32_t>(out, static_cast<std::int32_t>(config.u0.kind));
  put(out, config.u0.c);
  put(out, config.u0.center);
  put(out, config.u0.width);
  put(out, config.seed);
  put(out, replica);
  out.write(reinterpret_cast<const char*>(U.data()), static_cast<std::streamsize>(U.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(D.data()), static_cast<std::streamsize>(D.size() * sizeof(double)));
}

FieldSample FieldSample::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SizeError("cannot read " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kFieldMagic, sizeof(magic)) != 0) throw SizeError("not a field file: " + path.string());
  FieldSample f;
  const int k = get<std::int32_t>(in);
  const int d = get<std::int32_t>(in);
  f.config.params = ModelParams::make(k, d);
  const double delta = get<double>(in);
  const double radius = get<double>(in);
  f.config.lat = Lattice(delta, d, radius);
  f.config.horizon = get<double>(in);
  f.config.steps = get<std::int32_t>(in);
  f.config.a.kind = static_cast<Coefficient::Kind>(get<std::int32_t>(in));
  f.config.a.c = get<double>(in);
  f.config.u0.kind = static_cast<InitialCondition::Kind>(get<std::int32_t>(in));
  f.config.u0.c = get<double>(in);
  f.config.u0.center = get<double>(in);
  f.config.u0.width = get<double>(in);
  f.config.seed = get<std::uint64_t>(in);
  f.replica = get<std::uint64_t>(in);
  const std::size_t n = static_cast<std::size_t>(f.config.steps + 1) * f.sites();
  f.U.resize(n);
  f.D.resize(n);
  in.read(reinterpret_cast<char*>(f.U.data()), static_cast<std::streamsize>(n * sizeof(double)));
  in.read(reinterpret_cast<char*>(f.D.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw SizeError("truncated field file: " + path.string());
  return f;
}

// ---- deterministic part ----------------------------------------------------

namespace {

// Per-node weights W_j and per-axis factors g_j(x) at the requested step
// offsets; D(x) = sum_j W_j prod_i g_j(x_i).
struct AxisFactors {
  std::vector<double> weights;
  // factors[a * J + j] for axis offset index a.
  std::vector<double> factors;
};

AxisFactors gaussian_axis_factors(const SIEConfig& cfg, double t, std::span<const long> offsets) {
  const double delta = cfg.lat.delta();
  const double c = cfg.u0.center;
  const double w = cfg.u0.width;
  long lo = offsets.empty() ? 0 : offsets[0];
  long hi = lo;
  for (long o : offsets) {
    lo = std::min(lo, o);
    hi = std::max(hi, o);
  }
  const long support = static_cast<long>(std::ceil(kGaussianSupport * w / delta)) + 1;
  const long cs = std::lround(c / delta);
  const long reach = std::max(std::labs(cs - lo), std::labs(cs - hi)) + support;
  AxisFactors out;
  const auto g = [&](long n) {
    const double y = n * delta - c;
    return std::exp(-y * y / (2.0 * w * w));
  };
  if (t == 0.0) {
    out.weights = {1.0};
    for (long o : offsets) out.factors.push_back(g(o));
    return out;
  }
  LatticeRows rows(cfg.params, delta, t, static_cast<int>(reach));
  out.weights = rows.weights();
  const std::size_t J = rows.nodes();
  out.factors.assign(offsets.size() * J, 0.0);
  for (std::size_t a = 0; a < offsets.size(); ++a) {
    const long x = offsets[a];
    double* f = out.factors.data() + a * J;
    // sum over jumps n with |x + n - cs| <= support
    for (long y = cs - support; y <= cs + support; ++y) {
      const double gy = g(y);
      const double* row = rows.row(static_cast<int>(std::labs(y - x)));
      for (std::size_t j = 0; j < J; ++j) f[j] += row[j] * gy;
    }
  }
  return out;
}

double weight_sum(const SIEConfig& cfg, double t) {
  if (cfg.params.degenerate()) return 1.0;
  const InnerRule r = inner_rule(cfg.params, t);
  double s = 0.0;
  for (double w : r.w) s += w;
  return s;
}

double cosine_decay(const SIEConfig& cfg, double t) {
  const double delta = cfg.lat.delta();
  const double rate = cfg.params.dimension() * (1.0 - std::cos(delta)) / (delta * delta);
  const InnerRule r = inner_rule(cfg.params, t);
  double s = 0.0;
  for (std::size_t j = 0; j < r.s.size(); ++j) s += r.w[j] * std::exp(-rate * r.s[j]);
  return s;
}

}  // namespace

double deterministic_part(const SIEConfig& cfg, double t, std::span<const long> x_steps) {
  if (t < 0.0) throw DomainError("deterministic_part: t must be >= 0");
  const int d = cfg.params.dimension();
  if (static_cast<int>(x_steps.size()) != d) throw DomainError("deterministic_part: wrong point dimension");
  double x[ModelParams::kMaxDimension];
  for (int i = 0; i < d; ++i) x[i] = x_steps[i] * cfg.lat.delta();
  if (t == 0.0) return cfg.u0(std::span<const double>(x, d));
  switch (cfg.u0.kind) {
    case InitialCondition::Kind::kZero: return 0.0;
    case InitialCondition::Kind::kConst: return cfg.u0.c * weight_sum(cfg, t);
    case InitialCondition::Kind::kCosine: return cfg.u0(std::span<const double>(x, d)) * cosine_decay(cfg, t);
    case InitialCondition::Kind::kGaussian: break;
  }
  double acc = 0.0;
  std::vector<AxisFactors> axes;
  for (int i = 0; i < d; ++i) axes.push_back(gaussian_axis_factors(cfg, t, x_steps.subspan(i, 1)));
  const std::size_t J = axes[0].weights.size();
  for (std::size_t j = 0; j < J; ++j) {
    double prod = axes[0].weights[j];
    for (int i = 0; i < d; ++i) prod *= axes[i].factors[j];
    acc += prod;
  }
  return acc;
}

std::vector<double> deterministic_part(const SIEConfig& cfg) {
  cfg.validate();
  const int d = cfg.params.dimension();
  const int hw = cfg.lat.half_width();
  const std::size_t sites = static_cast<std::size_t>(cfg.lat.site_count());
  std::vector<double> out(static_cast<std::size_t>(cfg.steps + 1) * sites, 0.0);
  long off[ModelParams::kMaxDimension];
  double x[ModelParams::kMaxDimension];
  for (std::size_t s = 0; s < sites; ++s) {
    box_site_steps(hw, d, s, off);
    for (int i = 0; i < d; ++i) x[i] = off[i] * cfg.lat.delta();
    out[s] = cfg.u0(std::span<const double>(x, d));
  }
  if (cfg.u0.kind == InitialCondition::Kind::kZero) return out;
  std::vector<long> offsets(static_cast<std::size_t>(2 * hw + 1));
  for (int a = -hw; a <= hw; ++a) offsets[a + hw] = a;
  for (int m = 1; m <= cfg.steps; ++m) {
    const double t = cfg.time(m);
    double* row = out.data() + static_cast<std::size_t>(m) * sites;
    if (cfg.u0.kind == InitialCondition::Kind::kConst) {
      std::fill(row, row + sites, cfg.u0.c * weight_sum(cfg, t));
    } else if (cfg.u0.kind == InitialCondition::Kind::kCosine) {
      const double decay = cosine_decay(cfg, t);
      for (std::size_t s = 0; s < sites; ++s) row[s] = out[s] * decay;
    } else {
      const AxisFactors f = gaussian_axis_factors(cfg, t, offsets);
      const std::size_t J = f.weights.size();
      for (std::size_t s = 0; s < sites; ++s) {
        box_site_steps(hw, d, s, off);
        double acc = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
          double prod = f.weights[j];
          for (int i = 0; i < d; ++i) prod *= f.factors[static_cast<std::size_t>(off[i] + hw) * J + j];
          acc += prod;
        }
        row[s] = acc;
      }
    }
  }
  return out;
}

KernelTableSpec sie_table_spec(const SIEConfig& cfg) {
  cfg.validate();
  KernelTableSpec spec;
  spec.flavor = Flavor::kLattice;
  spec.params = cfg.params;
  spec.delta = cfg.lat.delta();
  spec.radius = 2 * cfg.lat.half_width();
  spec.times.resize(static_cast<std::size_t>(cfg.steps));
  for (int m = 1; m <= cfg.steps; ++m) spec.times[m - 1] = cfg.time(m);
  return spec;
}

// ---- solver ----------------------------------------------------------------

class SIESolver::Workspace {
 public:
  Workspace(std::size_t real_size, std::size_t spec_size, int steps, std::size_t sites)
      : grid(fftw_alloc_real(real_size)),
        spec(fftw_alloc_complex(spec_size)),
        pending(static_cast<std::size_t>(steps + 1) * spec_size),
        box(sites) {
    if (!grid || !spec) throw SizeError("FFT workspace allocation failed");
  }
  ~Workspace() {
    fftw_free(grid);
    fftw_free(spec);
  }
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  double* grid;
  fftw_complex* spec;
  std::vector<std::complex<double>> pending;
  std::vector<double> box;
};

SIESolver::SIESolver(const SIEConfig& cfg, std::optional<std::filesystem::path> cache_dir) : cfg_(cfg) {
  const KernelTableSpec spec = sie_table_spec(cfg);
  if (cache_dir) {
    std::filesystem::create_directories(*cache_dir);
    table_ = KernelTable::load_or_build(spec, *cache_dir, &cache_hit_);
  } else {
    table_ = KernelTable::build(spec);
  }
  init();
}

SIESolver::SIESolver(const SIEConfig& cfg, KernelTable table) : cfg_(cfg), table_(std::move(table)) {
  if (table_.hash() != sie_table_spec(cfg).content_hash()) {
    throw SizeError("kernel table does not match the SIE grid");
  }
  init();
}

SIESolver::~SIESolver() {
  std::lock_guard lock(fftw_planner_mutex());
  if (forward_) fftw_destroy_plan(static_cast<fftw_plan>(forward_));
  if (backward_) fftw_destroy_plan(static_cast<fftw_plan>(backward_));
}

void SIESolver::init() {
  cfg_.validate();
  const int d = cfg_.params.dimension();
  hw_ = cfg_.lat.half_width();
  sites_ = static_cast<std::size_t>(cfg_.lat.site_count());
  P_ = 4 * hw_ + 1;
  while (!fft_friendly(P_)) ++P_;
  real_size_ = 1;
  for (int i = 0; i < d; ++i) real_size_ *= static_cast<std::size_t>(P_);
  spec_size_ = real_size_ / P_ * (P_ / 2 + 1);

  det_ = deterministic_part(cfg_);

  int n[ModelParams::kMaxDimension];
  for (int i = 0; i < d; ++i) n[i] = P_;
  Workspace ws(real_size_, spec_size_, 0, sites_);
  {
    std::lock_guard lock(fftw_planner_mutex());
    // FFTW_ESTIMATE keeps the plan, and hence the rounding, identical across runs.
    forward_ = fftw_plan_dft_r2c(d, n, ws.grid, ws.spec, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r(d, n, ws.spec, ws.grid, FFTW_ESTIMATE);
  }
  if (!forward_ || !backward_) throw NumericalError("FFTW planning failed");

  // Kernel spectra: K_m placed at offsets o mod P, |o_i| <= 2 n_l.
  const int R = 2 * hw_;
  const int side = 2 * R + 1;
  std::size_t offsets = 1;
  for (int i = 0; i < d; ++i) offsets *= static_cast<std::size_t>(side);
  const double scale = std::pow(cfg_.lat.delta(), -0.5 * d) / static_cast<double>(real_size_);
  khat_.assign(static_cast<std::size_t>(cfg_.steps + 1) * spec_size_, 0.0);
  long o[ModelParams::kMaxDimension];
  for (int m = 1; m <= cfg_.steps; ++m) {
    std::fill(ws.grid, ws.grid + real_size_, 0.0);
    for (std::size_t k = 0; k < offsets; ++k) {
      box_site_steps(R, d, k, o);
      std::size_t idx = 0;
      for (int i = 0; i < d; ++i) idx = idx * P_ + static_cast<std::size_t>((o[i] + P_) % P_);
      ws.grid[idx] = table_.at(static_cast<std::size_t>(m - 1), std::span<const long>(o, d));
    }
    fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_), ws.grid, ws.spec);
    double* kh = khat_.data() + static_cast<std::size_t>(m) * spec_size_;
    // symmetric kernel: the spectrum is real
    for (std::size_t c = 0; c < spec_size_; ++c) kh[c] = ws.spec[c][0] * scale;
  }
}

std::shared_ptr<SIESolver::Workspace> SIESolver::workspace() const {
  return std::make_shared<Workspace>(real_size_, spec_size_, cfg_.steps, sites_);
}

void SIESolver::scatter(const double* box, double* grid) const {
  const int d = cfg_.params.dimension();
  std::fill(grid, grid + real_size_, 0.0);
  const std::size_t L1 = static_cast<std::size_t>(2 * hw_ + 1);
  for (std::size_t s = 0; s < sites_; ++s) {
    std::size_t rem = s;
    std::size_t idx = 0;
    std::size_t stride = 1;
    for (int i = 0; i < d; ++i) {
      idx += (rem % L1) * stride;
      rem /= L1;
      stride *= static_cast<std::size_t>(P_);
    }
    grid[idx] = box[s];
  }
}

void SIESolver::gather(const double* grid, double* box, const double* base) const {
  const int d = cfg_.params.dimension();
  const std::size_t L1 = static_cast<std::size_t>(2 * hw_ + 1);
  for (std::size_t s = 0; s < sites_; ++s) {
    std::size_t rem = s;
    std::size_t idx = 0;
    std::size_t stride = 1;
    for (int i = 0; i < d; ++i) {
      idx += (rem % L1) * stride;
      rem /= L1;
      stride *= static_cast<std::size_t>(P_);
    }
    box[s] = (base ? base[s] : 0.0) + grid[idx];
  }
}

namespace {

void accumulate(std::complex<double>* pending, const double* khat, const fftw_complex* spec, std::size_t n) {
  for (std::size_t c = 0; c < n; ++c) pending[c] += khat[c] * std::complex<double>(spec[c][0], spec[c][1]);
}

}  // namespace

FieldSample SIESolver::solve(const NoiseField& noise, Workspace& ws) const {
  const int M = cfg_.steps;
  if (noise.steps() != M || noise.sites() != sites_) throw SizeError("noise field does not match the SIE grid");
  FieldSample f;
  f.config = cfg_;
  f.replica = noise.replica();
  f.U = det_;
  f.D = det_;
  if (cfg_.a.is_zero()) return f;
  std::fill(ws.pending.begin(), ws.pending.end(), std::complex<double>{});
  for (int i = 0; i < M; ++i) {
    const double* u = f.U.data() + static_cast<std::size_t>(i) * sites_;
    const double* dw = noise.step(i);
    for (std::size_t s = 0; s < sites_; ++s) ws.box[s] = cfg_.a(u[s]) * dw[s];
    scatter(ws.box.data(), ws.grid);
    fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_), ws.grid, ws.spec);
    for (int m = 1; i + m <= M; ++m) {
      accumulate(ws.pending.data() + static_cast<std::size_t>(i + m) * spec_size_,
                 khat_.data() + static_cast<std::size_t>(m) * spec_size_, ws.spec, spec_size_);
    }
    auto* next = reinterpret_cast<fftw_complex*>(ws.pending.data() + static_cast<std::size_t>(i + 1) * spec_size_);
    fftw_execute_dft_c2r(static_cast<fftw_plan>(backward_), next, ws.grid);
    double* out = f.U.data() + static_cast<std::size_t>(i + 1) * sites_;
    gather(ws.grid, out, f.D.data() + static_cast<std::size_t>(i + 1) * sites_);
    for (std::size_t s = 0; s < sites_; ++s) {
      if (!std::isfinite(out[s])) {
        std::ostringstream msg;
        msg << "non-finite field value at step " << (i + 1) << ", replica " << noise.replica() << ", site " << s;
        throw NumericalError(msg.str());
      }
    }
  }
  return f;
}

FieldSample SIESolver::solve(std::uint64_t replica, Workspace& ws) const {
  return solve(gen_noise(cfg_.seed, replica, cfg_.lat, cfg_.steps, cfg_.dt()), ws);
}

FieldSample SIESolver::solve(std::uint64_t replica) const {
  auto ws = workspace();
  return solve(replica, *ws);
}

std::vector<double> SIESolver::convolve(std::span<const double> xi, Workspace& ws) const {
  const int M = cfg_.steps;
  if (xi.size() != static_cast<std::size_t>(M) * sites_) throw SizeError("convolve: source has the wrong shape");
  std::vector<double> out(static_cast<std::size_t>(M + 1) * sites_, 0.0);
  std::fill(ws.pending.begin(), ws.pending.end(), std::complex<double>{});
  for (int i = 0; i < M; ++i) {
    scatter(xi.data() + static_cast<std::size_t>(i) * sites_, ws.grid);
    fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_), ws.grid, ws.spec);
    for (int m = 1; i + m <= M; ++m) {
      accumulate(ws.pending.data() + static_cast<std::size_t>(i + m) * spec_size_,
                 khat_.data() + static_cast<std::size_t>(m) * spec_size_, ws.spec, spec_size_);
    }
    auto* next = reinterpret_cast<fftw_complex*>(ws.pending.data() + static_cast<std::size_t>(i + 1) * spec_size_);
    fftw_execute_dft_c2r(static_cast<fftw_plan>(backward_), next, ws.grid);
    gather(ws.grid, out.data() + static_cast<std::size_t>(i + 1) * sites_, nullptr);
  }
  return out;
}

double SIESolver::exact_variance(int m, std::span<const long> x_steps) const {
  if (!cfg_.a.is_constant() && !cfg_.a.is_zero()) throw DomainError("exact_variance needs a constant coefficient");
  if (m < 0 || m > cfg_.steps) throw DomainError("exact_variance: step out of range");
  const int d = cfg_.params.dimension();
  const double c = cfg_.a(0.0);
  long y[ModelParams::kMaxDimension];
  long diff[ModelParams::kMaxDimension];
  double acc = 0.0;
  for (int lag = 1; lag <= m; ++lag) {
    double row = 0.0;
    for (std::size_t s = 0; s < sites_; ++s) {
      box_site_steps(hw_, d, s, y);
      for (int i = 0; i < d; ++i) diff[i] = x_steps[i] - y[i];
      const double k = table_.at(static_cast<std::size_t>(lag - 1), std::span<const long>(diff, d));
      row += k * k;
    }
    acc += row;
  }
  return c * c * cfg_.dt() * std::pow(cfg_.lat.delta(), -d) * acc;
}

// ---- replica reduction -----------------------------------------------------

std::vector<double> reduce_replicas(int replicas, int threads, std::size_t length,
                                    const std::function<void(int, int, std::vector<double>&)>& stat) {
  if (replicas < 1) throw DomainError("reduce_replicas: need at least one replica");
  threads = std::max(1, std::min(threads, replicas));
  std::vector<std::vector<double>> bufs(static_cast<std::size_t>(threads), std::vector<double>(length));
  struct Node {
    int level;
    std::vector<double> sum;
  };
  std::vector<Node> stack;
  auto push = [&](const std::vector<double>& v) {
    stack.push_back({0, v});
    while (stack.size() >= 2 && stack[stack.size() - 1].level == stack[stack.size() - 2].level) {
      Node top = std::move(stack.back());
      stack.pop_back();
      for (std::size_t i = 0; i < length; ++i) stack.back().sum[i] += top.sum[i];
      ++stack.back().level;
    }
  };
  for (int base = 0; base < replicas; base += threads) {
    const int n = std::min(threads, replicas - base);
    auto run = [&](int w) {
      std::fill(bufs[w].begin(), bufs[w].end(), 0.0);
      stat(base + w, w, bufs[w]);
    };
    if (n == 1) {
      run(0);
    } else {
      std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
      std::vector<std::thread> pool;
      for (int w = 0; w < n; ++w) {
        pool.emplace_back([&, w] {
          try {
            run(w);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& t : pool) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    for (int w = 0; w < n; ++w) push(bufs[w]);
  }
  std::vector<double> total = std::move(stack.back().sum);
  for (std::size_t k = stack.size() - 1; k-- > 0;) {
    for (std::size_t i = 0; i < length; ++i) total[i] = stack[k].sum[i] + total[i];
  }
  return total;
}

// ---- moments ---------------------------------------------------------------

MomentSummary::MomentSummary(int steps, std::size_t sites, int replicas, std::vector<double> sums)
    : steps_(steps), sites_(sites), replicas_(replicas), sums_(std::move(sums)) {
  if (sums_.size() != static_cast<std::size_t>(kStatCount) * (steps + 1) * sites) {
    throw SizeError("moment summary has the wrong length");
  }
}

double MomentSummary::mean(Stat s, int m, std::size_t site) const {
  return sum(s, m, site) / replicas_;
}

double MomentSummary::variance(int m, std::size_t site) const {
  const double n = replicas_;
  const double m1 = mean(kR1, m, site);
  const double v = mean(kR2, m, site) - m1 * m1;
  return n > 1 ? std::max(0.0, v) * n / (n - 1.0) : 0.0;
}

namespace {

struct Central {
  double m2, m3, m4;
};

Central central_moments(double m1, double r2, double r3, double r4) {
  Central c;
  c.m2 = std::max(0.0, r2 - m1 * m1);
  c.m3 = r3 - 3.0 * m1 * r2 + 2.0 * m1 * m1 * m1;
  c.m4 = r4 - 4.0 * m1 * r3 + 6.0 * m1 * m1 * r2 - 3.0 * m1 * m1 * m1 * m1;
  return c;
}

}  // namespace

double MomentSummary::variance_se(int m, std::size_t site) const {
  const Central c = central_moments(mean(kR1, m, site), mean(kR2, m, site), mean(kR3, m, site), mean(kR4, m, site));
  return std::sqrt(std::max(0.0, c.m4 - c.m2 * c.m2) / replicas_);
}

double MomentSummary::skewness(int m, std::size_t site) const {
  const Central c = central_moments(mean(kR1, m, site), mean(kR2, m, site), mean(kR3, m, site), mean(kR4, m, site));
  return c.m2 > 0.0 ? c.m3 / std::pow(c.m2, 1.5) : 0.0;
}

double MomentSummary::excess_kurtosis(int m, std::size_t site) const {
  const Central c = central_moments(mean(kR1, m, site), mean(kR2, m, site), mean(kR3, m, site), mean(kR4, m, site));
  return c.m2 > 0.0 ? c.m4 / (c.m2 * c.m2) - 3.0 : 0.0;
}

std::vector<double> MomentSummary::sup_moment(int q) const {
  if (q < 1 || q > 3) throw DomainError("sup_moment: q must be 1, 2 or 3");
  const Stat s = q == 1 ? kU2 : (q == 2 ? kU4 : kU6);
  std::vector<double> out(static_cast<std::size_t>(steps_ + 1), 0.0);
  for (int m = 0; m <= steps_; ++m) {
    for (std::size_t x = 0; x < sites_; ++x) out[m] = std::max(out[m], mean(s, m, x));
  }
  return out;
}

MomentSummary simulate_moments(const SIESolver& solver, int replicas, int threads) {
  const int M = solver.config().steps;
  const std::size_t sites = solver.sites();
  const std::size_t block = static_cast<std::size_t>(M + 1) * sites;
  std::vector<std::shared_ptr<SIESolver::Workspace>> ws;
  for (int w = 0; w < std::max(1, std::min(threads, replicas)); ++w) ws.push_back(solver.workspace());
  auto sums = reduce_replicas(replicas, threads, MomentSummary::kStatCount * block,
                              [&](int r, int w, std::vector<double>& out) {
                                const FieldSample f = solver.solve(static_cast<std::uint64_t>(r), *ws[w]);
                                for (std::size_t i = 0; i < block; ++i) {
                                  const double u = f.U[i];
                                  const double x = u - f.D[i];
                                  const double x2 = x * x;
                                  const double u2 = u * u;
                                  out[MomentSummary::kR1 * block + i] = x;
                                  out[MomentSummary::kR2 * block + i] = x2;
                                  out[MomentSummary::kR3 * block + i] = x2 * x;
                                  out[MomentSummary::kR4 * block + i] = x2 * x2;
                                  out[MomentSummary::kU2 * block + i] = u2;
                                  out[MomentSummary::kU4 * block + i] = u2 * u2;
                                  out[MomentSummary::kU6 * block + i] = u2 * u2 * u2;
                                }
                              });
  return MomentSummary(M, sites, replicas, std::move(sums));
}

VarianceCheck variance_check(const SIESolver& solver, const MomentSummary& m, int step,
                             std::span<const long> x_steps) {
  VarianceCheck v;
  v.step = step;
  v.site.assign(x_steps.begin(), x_steps.end());
  const SIEConfig& cfg = solver.config();
  const std::size_t s = box_site_index(cfg.lat.half_width(), cfg.params.dimension(), x_steps);
  v.exact = solver.exact_variance(step, x_steps);
  v.empirical = m.variance(step, s);
  v.se = m.variance_se(step, s);
  v.z = v.se > 0.0 ? (v.empirical - v.exact) / v.se : (v.empirical == v.exact ? 0.0 : INFINITY);
  v.pass = std::abs(v.z) <= 3.0;
  return v;
}

MomentEnvelope moment_envelope(std::span<const double> times, std::span<const double> values, int q,
                               double c_max) {
  if (times.size() != values.size()) throw SizeError("moment_envelope: length mismatch");
  MomentEnvelope e;
  e.q = q;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v)) {
      e.C = INFINITY;
      e.max_value = INFINITY;
      break;
    }
    e.max_value = std::max(e.max_value, v);
    if (v <= 0.0 || e.C * std::exp(e.C * times[i]) >= v) continue;
    // C exp(C t) is increasing in C and exceeds v at C = v.
    double lo = e.C;
    double hi = std::max(v, e.C);
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mid * std::exp(mid * times[i]) >= v ? hi : lo) = mid;
    }
    e.C = hi;
  }
  e.pass = std::isfinite(e.C) && e.C <= c_max;
  return e;
}

// ---- Picard ----------------------------------------------------------------

PicardReport picard_solve(const SIESolver& solver, int replicas, int iterations, int threads) {
  if (iterations < 1) throw DomainError("picard_solve: need at least one iteration");
  const SIEConfig& cfg = solver.config();
  const int M = cfg.steps;
  const std::size_t sites = solver.sites();
  const std::size_t N = static_cast<std::size_t>(iterations);
  const std::size_t len = (N + 2) * sites;
  std::vector<std::shared_ptr<SIESolver::Workspace>> ws;
  for (int w = 0; w < std::max(1, std::min(threads, replicas)); ++w) ws.push_back(solver.workspace());
  const std::vector<double>& D = solver.deterministic();
  const std::size_t last = static_cast<std::size_t>(M) * sites;

  auto sums = reduce_replicas(replicas, threads, len, [&](int r, int w, std::vector<double>& out) {
    const NoiseField noise = gen_noise(cfg.seed, static_cast<std::uint64_t>(r), cfg.lat, M, cfg.dt());
    const FieldSample expl = solver.solve(noise, *ws[w]);
    std::vector<double> cur = D;
    std::vector<double> xi(static_cast<std::size_t>(M) * sites);
    for (std::size_t n = 0; n < N; ++n) {
      for (int i = 0; i < M; ++i) {
        const double* dw = noise.step(i);
        for (std::size_t s = 0; s < sites; ++s) {
          const std::size_t k = static_cast<std::size_t>(i) * sites + s;
          xi[k] = cfg.a(cur[k]) * dw[s];
        }
      }
      std::vector<double> next = solver.convolve(xi, *ws[w]);
      for (std::size_t k = 0; k < next.size(); ++k) next[k] += D[k];
      for (std::size_t s = 0; s < sites; ++s) {
        const double diff = next[last + s] - cur[last + s];
        out[n * sites + s] = diff * diff;
      }
      cur = std::move(next);
    }
    for (std::size_t s = 0; s < sites; ++s) {
      const double g = cur[last + s] - expl.U[last + s];
      out[N * sites + s] = g * g;
      out[(N + 1) * sites + s] = g * g * g * g;
    }
  });

  PicardReport rep;
  rep.dstar.assign(N, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t s = 0; s < sites; ++s) rep.dstar[n] = std::max(rep.dstar[n], sums[n * sites + s] / replicas);
  }
  for (std::size_t n = 0; n + 1 < N; ++n) {
    rep.ratios.push_back(rep.dstar[n] > 0.0 ? rep.dstar[n + 1] / rep.dstar[n] : 0.0);
  }
  int rising = 0;
  for (std::size_t n = 1; n < N; ++n) {
    rising = rep.dstar[n] > rep.dstar[n - 1] ? rising + 1 : 0;
    if (rising >= 3 && !rep.diverged) {
      rep.diverged = true;
      rep.divergence_at = static_cast<int>(n);
    }
  }
  for (std::size_t s = 0; s < sites; ++s) {
    const double g = sums[N * sites + s] / replicas;
    if (g >= rep.explicit_gap) {
      rep.explicit_gap = g;
      const double g2 = sums[(N + 1) * sites + s] / replicas;
      rep.explicit_gap_se = std::sqrt(std::max(0.0, g2 - g * g) / replicas);
    }
  }
  return rep;
}

}  // namespace islt

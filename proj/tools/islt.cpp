#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "islt/errors.hpp"
#include "islt/estimates.hpp"
#include "islt/kernel_table.hpp"
#include "islt/kernels.hpp"
#include "islt/regularity.hpp"
#include "islt/sie.hpp"
#include "islt/subordinator.hpp"
#include "islt/verify.hpp"
#include "run.hpp"

namespace islt::cli {
namespace {

struct Globals {
  std::string out = "results";
  int threads = 1;
};

// --beta "1/2^k" or --k k; unset means "the command's default set".
struct BetaOption {
  std::optional<std::string> beta;
  std::optional<int> k;

  void add(CLI::App* app) {
    auto* b = app->add_option("--beta", beta, "stable index as 1, 1/2, 1/4, 1/8 or 1/2^k");
    auto* kk = app->add_option("--k", k, "level k with beta = 1/2^k")->check(CLI::Range(0, ModelParams::kMaxLevel));
    b->excludes(kk);
  }
  bool given() const { return beta || k; }
  int level(int fallback) const {
    if (k) return *k;
    if (beta) return parse_beta_level(*beta);
    return fallback;
  }
};

// Every option of a subcommand with its effective value (defaults included).
json snapshot(const CLI::App* app, const Globals& g) {
  json j;
  for (const CLI::Option* o : app->get_options()) {
    if (o->get_name() == "--help" || o->get_name() == "-h") continue;
    const std::string name = o->get_single_name();
    if (o->count() > 0) {
      const auto& r = o->results();
      j[name] = r.size() == 1 ? json(r[0]) : json(r);
    } else if (!o->get_default_str().empty()) {
      j[name] = o->get_default_str();
    } else {
      j[name] = nullptr;
    }
  }
  j["threads"] = g.threads;
  return j;
}

fs::path cache_dir(const Globals& g) {
  if (const char* env = std::getenv("ISLT_CACHE_DIR"); env && *env) return env;
  return fs::path(g.out) / "cache";
}

std::string case_stem(const std::string& which, const ModelParams& p) {
  return which + "_b" + std::to_string(p.nu()) + "_d" + std::to_string(p.dimension());
}

void print(const Verdict& v) {
  std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << ": fitted " << v.fitted << ", expected " << v.expected
            << " (tolerance " << v.tolerance << ")";
  if (!v.note.empty()) std::cout << " [" << v.note << "]";
  std::cout << "\n";
}

// ---- kernel ----

struct KernelArgs {
  BetaOption beta;
  int d = 1;
  std::string flavor = "lattice";
  double delta = 0.05;
  int radius = 0;
  std::vector<double> times = {0.5, 1.0};
  bool density = false;
  bool full_csv = false;
};

// Kernel values along the first axis, x = (n delta, 0, ..., 0).
void write_axis_slice(const KernelTable& table, const fs::path& path) {
  const KernelTableSpec& spec = table.spec();
  const int d = spec.params.dimension();
  std::vector<std::string> header = {"t"};
  for (int i = 1; i <= d; ++i) header.push_back("x" + std::to_string(i));
  header.push_back("value");
  std::vector<std::vector<double>> rows;
  std::vector<long> steps(static_cast<std::size_t>(d), 0);
  for (std::size_t ti = 0; ti < spec.times.size(); ++ti) {
    for (long n = -spec.radius; n <= spec.radius; ++n) {
      std::vector<double> row = {spec.times[ti]};
      if (spec.flavor == Flavor::kLattice) {
        steps[0] = n;
        row.push_back(n * spec.delta);
        row.insert(row.end(), static_cast<std::size_t>(d - 1), 0.0);
        row.push_back(table.at(ti, steps));
      } else {
        if (n < 0) continue;
        row.push_back(n * spec.delta);
        row.insert(row.end(), static_cast<std::size_t>(d - 1), 0.0);
        row.push_back(table.at_radius(ti, static_cast<int>(n)));
      }
      rows.push_back(std::move(row));
    }
  }
  write_csv(path, header, rows);
}

int cmd_kernel(const KernelArgs& a, const CLI::App* app, const Globals& g) {
  const ModelParams p = ModelParams::make(a.beta.level(1), a.d);
  Run run(g.out, "kernel", snapshot(app, g));
  KernelTableSpec spec;
  spec.flavor = a.flavor == "continuum" ? Flavor::kContinuum : Flavor::kLattice;
  spec.params = p;
  spec.delta = a.delta;
  spec.times = a.times;
  std::sort(spec.times.begin(), spec.times.end());
  if (a.radius > 0) {
    spec.radius = a.radius;
  } else if (spec.flavor == Flavor::kLattice) {
    spec.radius = 0;
    for (double t : spec.times) spec.radius = std::max(spec.radius, tail_radius(p, a.delta, t));
  } else {
    spec.radius = 200;
  }
  bool hit = false;
  const KernelTable table = KernelTable::load_or_build(spec, cache_dir(g), &hit);
  run.set("kernel_hash", hex64(table.hash()));
  run.set("cache_hit", hit);
  run.set("cache_file", (cache_dir(g) / ("kt-" + hex64(table.hash()) + ".bin")).string());
  write_axis_slice(table, run.output("kernel_slice.csv"));
  if (a.full_csv) table.write_csv(run.output("kernel.csv"));

  Verdict v;
  v.name = "kernel normalization beta=" + p.beta_string() + " d=" + std::to_string(a.d);
  v.params = p;
  v.x_name = "t";
  v.y_name = spec.flavor == Flavor::kLattice ? "row_sum" : "continuum_mass";
  v.expected = 1.0;
  v.tolerance = spec.flavor == Flavor::kLattice ? 1e-6 : 1e-5;
  v.pass = true;
  double worst = 1.0;
  for (std::size_t i = 0; i < spec.times.size(); ++i) {
    const double m = spec.flavor == Flavor::kLattice ? table.row_sum(i) : continuum_mass(p, spec.times[i]);
    v.x.push_back(spec.times[i]);
    v.y.push_back(m);
    if (std::abs(m - 1.0) >= std::abs(worst - 1.0)) worst = m;
    v.pass = v.pass && std::abs(m - 1.0) <= v.tolerance;
  }
  v.fitted = worst;
  v.details.emplace_back("radius", spec.radius);
  v.details.emplace_back("cache_hit", hit ? 1.0 : 0.0);
  write_verdict(run, v, "normalization");

  if (a.density && !p.degenerate()) {
    const SubordinatorDensity dens(p);
    std::vector<std::vector<double>> rows;
    for (double t : spec.times) {
      const double top = dens.cutoff(t);
      for (int i = 1; i <= 400; ++i) {
        const double s = top * i / 400.0;
        rows.push_back({t, s, dens(t, s)});
      }
    }
    write_csv(run.output("density.csv"), {"t", "s", "density"}, rows);
  }
  print(v);
  std::cout << (hit ? "cache hit " : "built ") << hex64(table.hash()) << " -> " << run.dir().string() << "\n";
  const int code = v.pass ? kPass : kFail;
  run.finish(code);
  return code;
}

// ---- verify ----

struct VerifyArgs {
  std::string which;
  BetaOption beta;
  std::optional<int> d;
  std::optional<double> tol;
  bool cross_check = true;
  std::string form = "default";
};

std::vector<int> beta_set(const VerifyArgs& a, std::vector<int> fallback) {
  return a.beta.given() ? std::vector<int>{a.beta.level(1)} : fallback;
}
std::vector<int> dim_set(const VerifyArgs& a, std::vector<int> fallback) {
  return a.d ? std::vector<int>{*a.d} : fallback;
}

int cmd_verify(const VerifyArgs& a, const CLI::App* app, const Globals& g) {
  std::vector<Verdict> verdicts;
  std::vector<std::string> stems;
  auto add = [&](Verdict v, const std::string& stem) {
    verdicts.push_back(std::move(v));
    stems.push_back(stem);
  };
  const std::string& w = a.which;
  if (w == "divergence" && a.d && *a.d != 4) {
    throw CLI::ValidationError("--d", "divergence compares d = 4 with the d = 3 control; pass --d 4 or omit it");
  }
  a.beta.level(1);
  Run run(g.out, "verify-" + w, snapshot(app, g));
  if (w == "l2" || w == "temporal" || w == "spatial") {
    const auto ks = beta_set(a, {1, 2});
    const auto ds = dim_set(a, {1, 2, 3});
    for (int k : ks) {
      for (int d : ds) {
        const ModelParams p = ModelParams::make(k, d);
        if (w == "l2") add(verify_l2(p, a.tol.value_or(0.02)), case_stem(w, p));
        if (w == "temporal") add(verify_temporal(p, a.cross_check, a.tol.value_or(0.03)), case_stem(w, p));
        if (w == "spatial") add(verify_spatial(p, a.tol.value_or(0.05)), case_stem(w, p));
      }
    }
    if (w == "spatial" && !a.beta.given()) {
      for (int d : ds) add(verify_spatial_invariance(d, a.tol.value_or(0.05)), "spatial_invariance_d" + std::to_string(d));
    }
  } else if (w == "dde") {
    const DdeForm form = a.form == "caputo" ? DdeForm::kCaputo : DdeForm::kDefault;
    for (int k : beta_set(a, {0, 1})) {
      for (int d : dim_set(a, {1})) {
        const ModelParams p = ModelParams::make(k, d);
        add(verify_dde(p, form), case_stem(w, p));
      }
    }
  } else if (w == "limit") {
    for (int k : beta_set(a, {1})) {
      for (int d : dim_set(a, {1})) {
        const ModelParams p = ModelParams::make(k, d);
        add(verify_limit(p, a.tol.value_or(0.012)), case_stem(w, p));
      }
    }
  } else if (w == "divergence") {
    for (int k : beta_set(a, {1, 2})) {
      Verdict v = verify_divergence(k);
      const std::string stem = case_stem(w, v.params);
      add(std::move(v), stem);
    }
  }
  json summary = json::array();
  bool ok = true;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    write_verdict(run, verdicts[i], stems[i]);
    summary.push_back(to_json(verdicts[i]));
    print(verdicts[i]);
    ok = ok && verdicts[i].pass;
  }
  std::ofstream(run.output("summary.json")) << summary.dump(2) << "\n";
  const int code = ok ? kPass : kFail;
  run.finish(code);
  std::cout << "results in " << run.dir().string() << "\n";
  return code;
}

// ---- simulate / holder ----

struct SieArgs {
  BetaOption beta;
  int d = 1;
  std::optional<double> delta;
  std::optional<double> box;
  std::optional<double> horizon;
  std::optional<int> steps;
  std::string a = "const:1";
  std::string u0 = "zero";
  std::uint64_t seed = 1;
  std::optional<int> replicas;

  void add(CLI::App* app) {
    beta.add(app);
    app->add_option("--d", d, "spatial dimension")->check(CLI::Range(1, 3))->capture_default_str();
    app->add_option("--delta", delta, "lattice step (default by dimension)");
    app->add_option("--box", box, "truncation half-length l (default by dimension)");
    app->add_option("--horizon", horizon, "final time T (default 1)");
    app->add_option("--steps", steps, "time steps M (default by command and dimension)");
    app->add_option("--a", a, "coefficient: zero, const:c, linear:c, sin:c, sqrt:c")->capture_default_str();
    app->add_option("--u0", u0, "initial function: zero, const:c, gaussian:center,width, cosine")->capture_default_str();
    app->add_option("--seed", seed, "master seed")->capture_default_str();
  }

  SIEConfig config(bool holder, int default_replicas) const {
    const int k = beta.level(1);
    SIEConfig c = holder ? SIEConfig::holder_defaults(k, d) : SIEConfig::defaults(k, d);
    if (delta || box) c.lat = Lattice(delta.value_or(c.lat.delta()), d, box.value_or(c.lat.radius()));
    if (horizon) c.horizon = *horizon;
    if (steps) c.steps = *steps;
    c.a = Coefficient::parse(a);
    c.u0 = InitialCondition::parse(u0);
    c.seed = seed;
    c.replicas = replicas.value_or(default_replicas);
    c.validate();
    return c;
  }
};

struct SimulateArgs {
  SieArgs sie;
  int picard = 0;
  int save_fields = 0;
};

void moment_rows(const SIEConfig& c, const MomentSummary& m, std::vector<std::vector<double>>& rows) {
  const int d = c.params.dimension();
  const int hw = c.lat.half_width();
  std::vector<long> x(static_cast<std::size_t>(d));
  for (int step = 0; step <= c.steps; ++step) {
    for (std::size_t s = 0; s < m.sites(); ++s) {
      box_site_steps(hw, d, s, x.data());
      std::vector<double> row = {c.time(step)};
      for (long xi : x) row.push_back(xi * c.lat.delta());
      row.push_back(m.mean(MomentSummary::kR1, step, s));
      row.push_back(m.variance(step, s));
      row.push_back(m.variance_se(step, s));
      rows.push_back(std::move(row));
    }
  }
}

json variance_json(const VarianceCheck& v, double t, double dt) {
  json j;
  j["t"] = t;
  j["step"] = static_cast<int>(std::lround(t / dt));
  j["site_steps"] = v.site;
  j["exact"] = v.exact;
  j["empirical"] = v.empirical;
  j["se"] = v.se;
  j["z"] = v.z;
  j["pass"] = v.pass;
  return j;
}

int cmd_simulate(const SimulateArgs& a, const CLI::App* app, const Globals& g) {
  const SIEConfig c = a.sie.config(false, 1);
  Run run(g.out, a.picard > 0 ? "picard" : "simulate", snapshot(app, g));
  run.set("resolved_config", to_json(c));
  const SIESolver solver(c, cache_dir(g));
  run.set("kernel_hash", hex64(solver.table().hash()));
  run.set("cache_hit", solver.cache_hit());
  bool ok = true;
  json checks;

  if (a.picard > 0) {
    const PicardReport r = picard_solve(solver, c.replicas, a.picard, g.threads);
    std::vector<std::vector<double>> rows;
    for (std::size_t n = 0; n < r.dstar.size(); ++n) {
      rows.push_back({static_cast<double>(n), r.dstar[n], n < r.ratios.size() ? r.ratios[n] : std::nan("")});
    }
    write_csv(run.output("picard.csv"), {"n", "dstar", "ratio"}, rows);
    checks["dstar"] = r.dstar;
    checks["ratios"] = r.ratios;
    checks["diverged"] = r.diverged;
    checks["divergence_at"] = r.divergence_at;
    checks["explicit_gap"] = r.explicit_gap;
    checks["explicit_gap_se"] = r.explicit_gap_se;
    ok = !r.diverged;
    std::cout << (ok ? "PASS" : "FAIL") << " picard: " << r.dstar.size() << " iterates, explicit gap " << r.explicit_gap
              << "\n";
    std::ofstream(run.output("picard.json")) << checks.dump(2) << "\n";
    const int code = ok ? kPass : kFail;
    run.finish(code);
    return code;
  }

  auto ws = solver.workspace();
  for (int r = 0; r < std::min(a.save_fields, c.replicas); ++r) {
    const FieldSample f = solver.solve(static_cast<std::uint64_t>(r), *ws);
    const std::string stem = "field_r" + std::to_string(r);
    f.write_csv(run.output(stem + ".csv"));
    f.save(run.output(stem + ".bin"));
  }
  if (c.a.is_zero()) {
    const FieldSample f = solver.solve(std::uint64_t{0}, *ws);
    double worst = 0.0;
    for (std::size_t i = 0; i < f.U.size(); ++i) worst = std::max(worst, std::abs(f.U[i] - f.D[i]));
    checks["zero_noise_max_difference"] = worst;
    ok = ok && worst == 0.0;
    std::cout << (worst == 0.0 ? "PASS" : "FAIL") << " a = 0 reduction: max |U - D| = " << worst << "\n";
  }
  const MomentSummary m = simulate_moments(solver, c.replicas, g.threads);
  std::vector<std::vector<double>> rows;
  moment_rows(c, m, rows);
  std::vector<std::string> header = {"t"};
  for (int i = 1; i <= c.params.dimension(); ++i) header.push_back("x" + std::to_string(i));
  for (const char* h : {"mean", "variance", "variance_se"}) header.push_back(h);
  write_csv(run.output("moments.csv"), header, rows);

  if (c.replicas >= 2 && c.a.is_constant() && !c.a.is_zero()) {
    std::vector<long> centre(static_cast<std::size_t>(c.params.dimension()), 0);
    std::vector<long> off = centre;
    off[0] = c.lat.half_width() / 4;
    const VarianceCheck v1 = variance_check(solver, m, c.steps, centre);
    const VarianceCheck v2 = variance_check(solver, m, c.steps / 2, off);
    checks["variance"] = {variance_json(v1, c.time(c.steps), c.dt()), variance_json(v2, c.time(c.steps / 2), c.dt())};
    ok = ok && v1.pass && v2.pass;
    for (const auto* v : {&v1, &v2}) {
      std::cout << (v->pass ? "PASS" : "FAIL") << " variance at step " << v->step << ": exact " << v->exact
                << ", empirical " << v->empirical << " (z = " << v->z << ")\n";
    }
  }
  std::vector<double> ts;
  for (int s = 0; s <= c.steps; ++s) ts.push_back(c.time(s));
  json env = json::array();
  std::vector<std::vector<double>> sup_rows(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) sup_rows[i].push_back(ts[i]);
  for (int q = 1; q <= 3; ++q) {
    const std::vector<double> sup = m.sup_moment(q);
    for (std::size_t i = 0; i < ts.size(); ++i) sup_rows[i].push_back(sup[i]);
    const MomentEnvelope e = moment_envelope(ts, sup, q);
    env.push_back({{"q", q}, {"C", e.C}, {"max_value", e.max_value}, {"pass", e.pass}});
    ok = ok && e.pass;
    std::cout << (e.pass ? "PASS" : "FAIL") << " sup moment q = " << q << ": envelope C = " << e.C << "\n";
  }
  write_csv(run.output("sup_moments.csv"), {"t", "q1", "q2", "q3"}, sup_rows);
  checks["envelopes"] = env;
  std::ofstream(run.output("checks.json")) << checks.dump(2) << "\n";
  const int code = ok ? kPass : kFail;
  run.finish(code);
  std::cout << "results in " << run.dir().string() << "\n";
  return code;
}

struct HolderArgs {
  SieArgs sie;
  double tol = 0.07;
  std::string fields;
};

int cmd_holder(const HolderArgs& a, const CLI::App* app, const Globals& g) {
  std::vector<HolderReport> reports;
  std::vector<FieldSample> samples;
  if (!a.fields.empty()) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a.fields)) {
      if (e.path().extension() == ".bin") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (static_cast<int>(files.size()) < kMinHolderReplicas) {
      throw DomainError("regularity fits need at least " + std::to_string(kMinHolderReplicas) + " replicas (got " +
                        std::to_string(files.size()) + " field files in " + a.fields + ")");
    }
    for (const auto& f : files) samples.push_back(FieldSample::load(f));
  }
  const SIEConfig c = samples.empty() ? a.sie.config(true, 500) : samples.front().config;
  if (samples.empty() && c.replicas < kMinHolderReplicas) {
    throw DomainError("regularity fits need at least " + std::to_string(kMinHolderReplicas) + " replicas (got " +
                      std::to_string(c.replicas) + ")");
  }
  Run run(g.out, "holder", snapshot(app, g));
  run.set("resolved_config", to_json(c));
  if (samples.empty()) {
    const SIESolver solver(c, cache_dir(g));
    run.set("kernel_hash", hex64(solver.table().hash()));
    reports = holder_report(solver, c.replicas, g.threads, a.tol);
  } else {
    reports = holder_report(samples, a.tol);
  }
  const RegularityPanel panel = default_panel(c);
  json out;
  out["config"] = to_json(c);
  out["replicas"] = samples.empty() ? c.replicas : static_cast<int>(samples.size());
  out["time_lags_steps"] = panel.time_lags;
  out["space_lags_steps"] = panel.space_lags;
  out["reports"] = json::array();
  bool ok = true;
  for (const auto& r : reports) {
    const std::string stem = "holder_" + std::string(to_string(r.direction)) + "_q" + std::to_string(r.q);
    std::vector<std::vector<double>> rows;
    for (const auto& m : r.moments) rows.push_back({m.lag, m.mean, m.se});
    write_csv(run.output(stem + ".csv"), {"lag", "value", "se"}, rows);
    json j = to_json(r);
    j["csv"] = stem + ".csv";
    out["reports"].push_back(j);
    ok = ok && r.pass;
    std::cout << (r.pass ? "PASS " : "FAIL ") << to_string(r.direction) << " q=" << r.q << ": ";
    if (r.refused) {
      std::cout << r.note << "\n";
    } else {
      std::cout << "slope " << r.fitted_slope << " +- " << r.half_width << ", expected " << r.expected_slope << " ("
                << r.note << ")\n";
    }
  }
  std::ofstream(run.output("holder_report.json")) << out.dump(2) << "\n";
  const int code = ok ? kPass : kFail;
  run.finish(code);
  std::cout << "results in " << run.dir().string() << "\n";
  return code;
}

// ---- converge ----

struct ConvergeArgs {
  BetaOption beta;
  int d = 1;
  double t = 1.0;
  std::vector<double> x = {0.5};
  std::vector<double> deltas = {0.25, 0.125, 0.0625};
  double tol = 0.012;
};

int cmd_converge(const ConvergeArgs& a, const CLI::App* app, const Globals& g) {
  const ModelParams p = ModelParams::make(a.beta.level(1), a.d);
  std::vector<double> x = a.x;
  x.resize(static_cast<std::size_t>(a.d), 0.0);
  std::vector<double> deltas = a.deltas;
  std::sort(deltas.begin(), deltas.end());
  Run run(g.out, "converge", snapshot(app, g));
  Verdict v;
  v.name = "lattice limit beta=" + p.beta_string() + " d=" + std::to_string(a.d);
  v.params = p;
  v.x_name = "delta";
  v.y_name = "ratio";
  v.x = deltas;
  v.y = continuum_limit_report(p, a.t, x, deltas);
  v.expected = 1.0;
  v.fitted = v.y.front();
  v.tolerance = a.tol;
  v.pass = std::abs(v.fitted - 1.0) <= a.tol;
  v.details.emplace_back("t", a.t);
  write_verdict(run, v, "converge");
  print(v);
  const int code = v.pass ? kPass : kFail;
  run.finish(code);
  return code;
}

}  // namespace
}  // namespace islt::cli

int main(int argc, char** argv) {
  using namespace islt;
  using namespace islt::cli;
  CLI::App app{"beta-inverse-stable-Levy-time kernels, estimates and lattice SIE simulation"};
  app.set_version_flag("--version", ISLT_VERSION);
  app.set_config("--config", "", "key-value config file with one section per subcommand");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--out", g.out, "results root")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads for replica loops")->check(CLI::PositiveNumber)->capture_default_str();

  KernelArgs ka;
  auto* kernel = app.add_subcommand("kernel", "build a kernel table (cached) and check its normalization");
  ka.beta.add(kernel);
  kernel->add_option("--d", ka.d, "dimension")->check(CLI::Range(1, ModelParams::kMaxDimension))->capture_default_str();
  kernel->add_option("--flavor", ka.flavor, "lattice or continuum")->check(CLI::IsMember({"lattice", "continuum"}))->capture_default_str();
  kernel->add_option("--delta", ka.delta, "lattice step or radial spacing")->check(CLI::PositiveNumber)->capture_default_str();
  kernel->add_option("--radius", ka.radius, "table radius in steps (0: 1e-10 tail)")->capture_default_str();
  kernel->add_option("--times", ka.times, "kernel times")->delimiter(',')->capture_default_str();
  kernel->add_flag("--full-csv", ka.full_csv, "also write every stored displacement to kernel.csv");
  kernel->add_flag("--density", ka.density, "also write the subordinator density (t, s, density)");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "check a kernel estimate; exit 0 iff every case passes");
  verify->add_option("which", va.which, "l2, temporal, spatial, dde, limit or divergence")
      ->required()
      ->check(CLI::IsMember({"l2", "temporal", "spatial", "dde", "limit", "divergence"}));
  va.beta.add(verify);
  verify->add_option("--d", va.d, "dimension (default: the standard set for the check)");
  verify->add_option("--tol", va.tol, "tolerance override");
  verify->add_flag("--cross-check,!--no-cross-check", va.cross_check, "temporal: brute-force comparison for d = 1")
      ->capture_default_str();
  verify->add_option("--form", va.form, "dde: default or caputo (Gamma-weighted memory terms)")->check(CLI::IsMember({"default", "caputo"}))->capture_default_str();

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "run replicas of the truncated lattice SIE");
  sa.sie.add(simulate);
  simulate->add_option("--replicas", sa.sie.replicas, "number of replicas (default 1)");
  simulate->add_option("--picard", sa.picard, "run N Picard iterations instead of the explicit scheme")->capture_default_str();
  simulate->add_option("--save-fields", sa.save_fields, "write the first N replicas as CSV and binary")->capture_default_str();

  HolderArgs ha;
  auto* holder = app.add_subcommand("holder", "fit temporal and spatial moment slopes");
  ha.sie.add(holder);
  holder->add_option("--replicas", ha.sie.replicas, "number of replicas (default 500, minimum 200)");
  holder->add_option("--tol", ha.tol, "slope tolerance")->capture_default_str();
  holder->add_option("--fields", ha.fields, "directory of saved .bin field samples to fit instead of simulating");

  ConvergeArgs ca;
  auto* converge = app.add_subcommand("converge", "lattice to continuum kernel ratio as delta shrinks");
  ca.beta.add(converge);
  converge->add_option("--d", ca.d, "dimension")->check(CLI::Range(1, ModelParams::kMaxDimension))->capture_default_str();
  converge->add_option("--t", ca.t, "time")->check(CLI::PositiveNumber)->capture_default_str();
  converge->add_option("--x", ca.x, "point (padded with zeros)")->delimiter(',')->capture_default_str();
  converge->add_option("--deltas", ca.deltas, "lattice steps")->delimiter(',')->capture_default_str();
  converge->add_option("--tol", ca.tol, "tolerance on the finest ratio")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (kernel->parsed()) return cmd_kernel(ka, kernel, g);
    if (verify->parsed()) return cmd_verify(va, verify, g);
    if (simulate->parsed()) return cmd_simulate(sa, simulate, g);
    if (holder->parsed()) return cmd_holder(ha, holder, g);
    if (converge->parsed()) return cmd_converge(ca, converge, g);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const QuadratureError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const SizeError& e) {
    std::cerr << "size error: " << e.what() << "\n";
    return kNumerical;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kUsage;
}

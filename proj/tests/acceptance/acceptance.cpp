// One PASS/FAIL line per acceptance criterion; per-case detail lines are
// indented underneath. Exit status is the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "islt/verify.hpp"

using namespace islt;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::vector<std::string> lines;
  std::string summary;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

void record(Outcome& o, const Verdict& v, double secs) {
  std::ostringstream s;
  s << (v.pass ? "ok   " : "miss ") << v.name << ": fitted " << v.fitted << " expected " << v.expected << " tol "
    << v.tolerance;
  if (v.half_width > 0.0) s << " (+-" << v.half_width << ")";
  if (!v.note.empty()) s << " [" << v.note << "]";
  s << fmt(" %.1fs", secs);
  o.lines.push_back(s.str());
  o.pass = o.pass && v.pass;
}

template <class F>
Verdict timed(Outcome& o, F&& f, double* secs_out = nullptr) {
  const auto t0 = Clock::now();
  Verdict v = f();
  const double secs = seconds_since(t0);
  record(o, v, secs);
  if (secs_out) *secs_out = secs;
  return v;
}

void budget(Outcome& o, double secs, double limit) {
  const bool ok = secs < limit;
  o.lines.push_back(std::string(ok ? "ok   " : "miss ") + fmt("runtime %.1fs, budget %.0fs", secs, limit));
  o.pass = o.pass && ok;
}

Outcome normalization(const VerifyOptions& opt) {
  Outcome o;
  for (int k : {0, 1, 2}) {
    for (int d = 1; d <= 3; ++d) {
      double secs = 0.0;
      timed(o, [&] { return verify_kernel_normalization(ModelParams::make(k, d), 0.2, {0.5, 1.0}, opt); }, &secs);
      if (secs >= 60.0) {
        o.pass = false;
        o.lines.push_back("miss case exceeded 60s");
      }
    }
  }
  o.summary = "lattice row sums within 1e-6 and continuum mass within 1e-5 for beta in {1,1/2,1/4}, d in {1,2,3}";
  return o;
}

Outcome l2() {
  Outcome o;
  const auto t0 = Clock::now();
  for (int k : {1, 2}) {
    for (int d = 1; d <= 3; ++d) timed(o, [&] { return verify_l2(ModelParams::make(k, d)); });
  }
  budget(o, seconds_since(t0), 300.0);
  o.summary = "log int K^2 vs log t slopes equal -d/(2 nu) within 0.02 (6 fits)";
  return o;
}

Outcome divergence() {
  Outcome o;
  const auto t0 = Clock::now();
  for (int k : {1, 2}) timed(o, [&] { return verify_divergence(k); });
  budget(o, seconds_since(t0), 120.0);
  o.summary = "d = 4 truncated integral strictly increasing with ratio > 3, d = 3 tail change < 1%";
  return o;
}

Outcome temporal() {
  Outcome o;
  const auto t0 = Clock::now();
  for (int k : {1, 2}) {
    for (int d = 1; d <= 3; ++d) timed(o, [&] { return verify_temporal(ModelParams::make(k, d), d == 1); });
  }
  budget(o, seconds_since(t0), 600.0);
  o.summary = "temporal difference slopes equal (2 nu - d)/(2 nu) within 0.03, d = 1 brute-force agreement within 1%";
  return o;
}

Outcome spatial() {
  Outcome o;
  const auto t0 = Clock::now();
  for (int k : {1, 2}) {
    for (int d = 1; d <= 3; ++d) timed(o, [&] { return verify_spatial(ModelParams::make(k, d)); });
  }
  for (int d = 1; d <= 3; ++d) timed(o, [&] { return verify_spatial_invariance(d); });
  budget(o, seconds_since(t0), 600.0);
  o.summary = "spatial |z| slopes within 0.05 of 2 alpha_d and beta-invariant within 0.05";
  return o;
}

Outcome dde() {
  Outcome o;
  const auto t0 = Clock::now();
  timed(o, [] { return verify_dde(ModelParams::make(1, 1)); });
  timed(o, [] { return verify_dde(ModelParams::make(0, 1)); });
  budget(o, seconds_since(t0), 120.0);
  o.summary = "DDE residual <= 1e-3 (beta = 1/2, d = 1) and <= 1e-6 (beta = 1), O(h^2) decay";
  return o;
}

Outcome limit() {
  Outcome o;
  const auto t0 = Clock::now();
  timed(o, [] { return verify_limit(ModelParams::make(1, 1)); });
  budget(o, seconds_since(t0), 120.0);
  o.summary = "lattice/continuum kernel ratio within 1.2% at delta = 0.0625";
  return o;
}

Outcome sie(const VerifyOptions& opt) {
  Outcome o;
  const auto t0 = Clock::now();
  for (const Verdict& v : verify_sie(2000, 500, opt)) record(o, v, seconds_since(t0));
  budget(o, seconds_since(t0), 900.0);
  o.summary = "a = 0 exact, Gaussian variance within 3 SE at R = 2000, Picard contraction, bounded sup moments";
  return o;
}

Outcome holder(const VerifyOptions& opt) {
  Outcome o;
  const auto t0 = Clock::now();
  timed(o, [&] { return verify_holder_time(1, 1, 500, 0.07, opt); });
  timed(o, [&] { return verify_holder_time(2, 1, 500, 0.07, opt); });
  timed(o, [&] { return verify_holder_time(1, 2, 500, 0.07, opt); });
  timed(o, [&] { return verify_holder_time(0, 1, 500, 0.07, opt); });
  timed(o, [&] { return verify_holder_space_invariance(1, 500, 0.1, opt); });
  timed(o, [&] { return verify_holder_space_invariance(2, 500, 0.1, opt); });
  budget(o, seconds_since(t0), 1800.0);
  o.summary = "q = 1 time slopes within 0.07 of (2 nu - d)/(2 nu) incl. beta = 1 control, space slopes beta-invariant within 0.1";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  VerifyOptions opt;
  std::string cache;
  std::vector<std::string> only;
  app.add_option("--cache-dir", cache, "kernel table cache");
  app.add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--only", only, "run only the named criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  if (!cache.empty()) opt.cache_dir = cache;

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"kernel-normalization", [&] { return normalization(opt); }},
      {"l2-time-scaling", l2},
      {"third-dimension-maximality", divergence},
      {"temporal-difference", temporal},
      {"spatial-difference", spatial},
      {"memoryful-dde", dde},
      {"lattice-continuum-limit", limit},
      {"sie-soundness", [&] { return sie(opt); }},
      {"holder-exponents", [&] { return holder(opt); }},
  };
  const std::set<std::string> wanted(only.begin(), only.end());
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!wanted.empty() && !wanted.count(name)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("error: ") + e.what();
    }
    for (const auto& l : o.lines) std::printf("    %s\n", l.c_str());
    std::printf("%s %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.summary.c_str(), seconds_since(t0));
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed;
}

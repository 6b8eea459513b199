#include "run.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>

#include "islt/kernel_table.hpp"

namespace islt::cli {

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Run::Run(const fs::path& root, std::string command, json config)
    : command_(std::move(command)), config_(std::move(config)), start_(std::chrono::steady_clock::now()) {
  const std::string snapshot = command_ + "\n" + config_.dump();
  id_ = command_ + "-" + hex64(fnv1a64(snapshot.data(), snapshot.size())).substr(0, 12);
  dir_ = root / id_;
  fs::create_directories(dir_);
}

fs::path Run::output(const std::string& name) {
  outputs_.push_back(name);
  return dir_ / name;
}

void Run::finish(int exit_code) {
  json m;
  m["command"] = command_;
  m["run_id"] = id_;
  m["config"] = config_;
  m["seed"] = config_.contains("seed") ? config_["seed"] : json(nullptr);
  m["version"] = ISLT_VERSION;
  m["kernel_hash"] = extra_.contains("kernel_hash") ? extra_["kernel_hash"] : json(nullptr);
  m["outputs"] = outputs_;
  m["exit_code"] = exit_code;
  m["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  for (auto& [k, v] : extra_.items()) {
    if (!m.contains(k)) m[k] = v;
  }
  std::ofstream(dir_ / "manifest.json") << m.dump(2) << "\n";
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

namespace {

// JSON has no inf/nan; those become null.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

json to_json(const Verdict& v) {
  json j;
  j["name"] = v.name;
  j["beta"] = v.params.beta_string();
  j["d"] = v.params.dimension();
  j["x_name"] = v.x_name;
  j["y_name"] = v.y_name;
  j["exponent_expected"] = number(v.expected);
  j["exponent_fitted"] = number(v.fitted);
  j["half_width"] = number(v.half_width);
  j["tolerance"] = v.tolerance;
  j["pass"] = v.pass;
  json details = json::object();
  for (const auto& [k, x] : v.details) details[k] = number(x);
  j["details"] = details;
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

json to_json(const HolderReport& r) {
  json j;
  j["beta"] = r.params.beta_string();
  j["d"] = r.params.dimension();
  j["direction"] = std::string(to_string(r.direction));
  j["q"] = r.q;
  j["exponent_expected"] = r.expected_slope;
  j["exponent_fitted"] = r.refused ? json(nullptr) : number(r.fitted_slope);
  j["half_width"] = r.refused ? json(nullptr) : number(r.half_width);
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  j["refused"] = r.refused;
  j["note"] = r.note;
  j["path_exponent_table"] = r.path_exponent_table;
  j["path_exponent_fitted"] = r.refused ? json(nullptr) : number(r.path_exponent_fitted);
  return j;
}

json to_json(const SIEConfig& c) {
  json j;
  j["beta"] = c.params.beta_string();
  j["k"] = c.params.level();
  j["d"] = c.params.dimension();
  j["delta"] = c.lat.delta();
  j["box"] = c.lat.radius();
  j["half_width_steps"] = c.lat.half_width();
  j["horizon"] = c.horizon;
  j["steps"] = c.steps;
  j["a"] = c.a.str();
  j["u0"] = c.u0.str();
  j["seed"] = c.seed;
  j["replicas"] = c.replicas;
  return j;
}

void write_verdict(Run& run, const Verdict& v, const std::string& stem) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < v.x.size(); ++i) rows.push_back({v.x[i], v.y[i]});
  write_csv(run.output(stem + ".csv"), {"lag", "value"}, rows);
  std::ofstream(run.output(stem + ".json")) << to_json(v).dump(2) << "\n";
}

}  // namespace islt::cli

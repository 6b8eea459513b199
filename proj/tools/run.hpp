#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "islt/sie.hpp"
#include "islt/verify.hpp"

namespace islt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { kPass = 0, kFail = 1, kNumerical = 2, kUsage = 64 };

// One invocation: results/<command>-<hash of the config snapshot>/ plus its
// manifest. Rerunning with the same inputs lands in the same directory.
class Run {
 public:
  Run(const fs::path& root, std::string command, json config);

  const fs::path& dir() const noexcept { return dir_; }
  const std::string& id() const noexcept { return id_; }

  // Path of an output file; records it in the manifest.
  fs::path output(const std::string& name);
  void set(const std::string& key, json value) { extra_[key] = std::move(value); }
  void finish(int exit_code);

 private:
  std::string command_;
  json config_;
  std::string id_;
  fs::path dir_;
  std::vector<std::string> outputs_;
  json extra_ = json::object();
  std::chrono::steady_clock::time_point start_;
};

std::string hex64(std::uint64_t h);

// Rows of doubles at full round-trip precision.
void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

json to_json(const Verdict& v);
json to_json(const HolderReport& r);
json to_json(const SIEConfig& c);

// <stem>.csv (lag, value) and <stem>.json.
void write_verdict(Run& run, const Verdict& v, const std::string& stem);

}  // namespace islt::cli

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "peap/harness/compare.hpp"
#include "peap/harness/eval.hpp"

namespace peap::harness {

// Everything one `peap eval` invocation needs.
struct RunConfig {
  std::filesystem::path dataset;
  std::vector<ModalityMode> modes{std::begin(kAllModes), std::end(kAllModes)};
  std::vector<PromptStyle> styles{PromptStyle::Direct};
  EvalConfig eval;
  EndpointConfig endpoint;
  TaskCatalog tasks;
  std::filesystem::path out;
  std::string clock = "steady";  // "steady" or "tick"

  // Paths are resolved against base_dir. Unknown keys are rejected.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
  void validate() const;
  nlohmann::json to_json() const;
};

std::unique_ptr<Clock> make_clock(const std::string& name);

struct SuiteResult {
  std::vector<RunReport> reports;  // styles outer, modes inner (Text first)
  ComparisonTable comparison;

  std::size_t failures() const;
  std::size_t records() const;
};

// Runs every (style, mode) pair into <out>/<mode>-<style>/, attaches Text
// overheads, and writes comparison.{csv,md,json} to <out>.
SuiteResult run_suite(const RunConfig& cfg, const std::vector<Example>& examples, ModelClient& client, Clock& clock);

void write_comparison(const ComparisonTable& table, const std::filesystem::path& dir);

}  // namespace peap::harness

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "peap/harness/client.hpp"
#include "peap/harness/dataset.hpp"
#include "peap/harness/prompt.hpp"
#include "peap/metrics.hpp"

namespace peap::harness {

struct EvalConfig {
  AssetOptions assets;
  RetryPolicy retry;
  // Per-style defaults when unset.
  std::optional<GenerationSettings> generation;
  std::size_t concurrency = 4;
  std::uint64_t seed = 0;
  // Write each rendered image under <out>/assets.
  bool save_assets = false;
  SandboxConfig sandbox;

  GenerationSettings generation_for(PromptStyle style) const {
    return generation ? *generation : default_generation(style);
  }
};

// Record status values.
inline constexpr std::string_view kStatusOk = "ok";
inline constexpr std::string_view kStatusNoAnswer = "no_answer";
inline constexpr std::string_view kStatusTransport = "transport_error";
inline constexpr std::string_view kStatusIncompatible = "incompatible";
inline constexpr std::string_view kStatusError = "error";

struct Record {
  std::string run_id;
  std::size_t index = 0;
  std::string id;
  std::string task;
  std::string status;
  std::string response;
  std::optional<std::string> extracted;
  int rule = 0;
  std::optional<double> score;  // unset = unscored
  std::string error;
  int retries = 0;
  double prepare_seconds = 0.0;
  double model_seconds = 0.0;
  double latency_seconds = 0.0;
  std::optional<long> prompt_tokens;
  std::optional<long> completion_tokens;
  std::string prerender_sha256;
  std::string prompt_sha256;
  nlohmann::json assets = nlohmann::json::array();

  bool scored() const { return score.has_value(); }
  nlohmann::json to_json() const;
  static Record from_json(const nlohmann::json& j);
};

struct TaskAggregate {
  std::string metric;
  std::size_t n = 0;
  std::size_t scored = 0;
  double mean_score = 0.0;
  std::optional<double> metric_value;  // in [−1, 1]; unset when undefined
  double total_latency_seconds = 0.0;

  nlohmann::json to_json() const;
  static TaskAggregate from_json(const nlohmann::json& j);
};

struct RunSummary {
  std::string run_id;
  std::string dataset_sha256;
  std::string model;
  ModalityMode mode = ModalityMode::Text;
  PromptStyle style = PromptStyle::Direct;
  std::string rules_version{kExtractionRulesVersion};
  std::size_t n = 0;
  std::size_t scored = 0;
  std::size_t no_answer = 0;
  std::size_t unscored = 0;
  std::size_t incompatible = 0;
  double mean_score = 0.0;
  double total_latency_seconds = 0.0;
  std::map<std::string, TaskAggregate> tasks;
  // Relative to the paired Text run, when one was given.
  std::optional<double> overhead_pct;
  nlohmann::json config = nlohmann::json::object();

  nlohmann::json to_json() const;
  static RunSummary from_json(const nlohmann::json& j);
};

struct RunReport {
  RunSummary summary;
  std::vector<Record> records;

  // Records that failed for reasons other than mode incompatibility.
  std::size_t failures() const;
};

// Directory name for a run: "<mode>-<style>".
std::string run_dir_name(ModalityMode mode, PromptStyle style);

std::string make_run_id(const std::string& dataset_sha256, ModalityMode mode, PromptStyle style,
                        const std::string& model, const EvalConfig& cfg);

// Record score given the extracted answer (pass_at_1 runs the sandbox).
double score_answer(const Example& ex, const TaskSpec& task, const std::string& answer, const SandboxPool* sandbox);

RunSummary summarize(const std::vector<Record>& records, const std::vector<Example>& examples,
                     const TaskCatalog& tasks);

// Largest deviation between summary aggregates and values recomputed from
// the records (0 for a consistent report).
double conservation_error(const RunReport& report);

// Fills overhead_pct of the summary and its tasks from a Text-mode run.
void attach_overhead(RunSummary& summary, const RunSummary& text_run);

// Evaluates every example once. With a non-empty out_dir, records are
// appended to <out_dir>/records.jsonl as they complete and an interrupted
// run resumes from it; the final records (dataset order) and summary.json
// are rewritten at the end. Fatal errors (auth, configuration) propagate.
RunReport run_eval(const std::vector<Example>& examples, const TaskCatalog& tasks, ModalityMode mode,
                   PromptStyle style, ModelClient& client, const EvalConfig& cfg,
                   const std::filesystem::path& out_dir, Clock& clock);

void write_report(const RunReport& report, const std::filesystem::path& dir);
RunReport read_report(const std::filesystem::path& dir);
RunSummary read_summary(const std::filesystem::path& path);

}  // namespace peap::harness

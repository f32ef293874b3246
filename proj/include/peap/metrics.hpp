#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace peap {

struct ConfusionCounts {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::uint64_t total() const { return tp + tn + fp + fn; }
  static ConfusionCounts from(const std::vector<bool>& preds, const std::vector<bool>& golds);
};

// Lowercased whitespace tokens.
std::vector<std::string> word_tokens(std::string_view text);

// LCS-based F1 (beta = 1) over word tokens; 0 when either side is empty.
double rouge_l(std::string_view candidate, std::string_view reference);

// Normalization: trim, lowercase, drop trailing . , ; : ! ? and closing
// quotes, strip thousands separators from numerals ("1,319" -> "1319"),
// drop a leading '+' and trailing fractional zeros ("42.0" -> "42").
std::string normalize_answer(std::string_view text);
int exact_match(std::string_view pred, std::string_view gold);

double accuracy(const std::vector<std::string>& preds, const std::vector<std::string>& golds);
double matthews_corr(const ConfusionCounts& c);
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);
double f1_binary(const std::vector<bool>& preds, const std::vector<bool>& golds);

// Percentage increase of t_method over t_text.
double overhead_pct(double t_text, double t_method);

struct SandboxConfig {
  std::string interpreter = "python3";
  std::chrono::milliseconds timeout{10'000};
  std::size_t max_concurrent = 4;
  // Run in a fresh network namespace; when the kernel refuses and this is
  // false the program still runs, without network isolation.
  bool require_network_isolation = false;
  std::uint64_t memory_limit_bytes = 1ull << 30;
};

struct SandboxResult {
  bool passed = false;
  bool timed_out = false;
  bool network_isolated = false;
  int exit_code = -1;
  std::string stderr_tail;
};

// Runs program + assertions in a subordinate process with a wall-clock
// timeout. At most max_concurrent programs run at once per pool.
class SandboxPool {
 public:
  explicit SandboxPool(SandboxConfig cfg);

  const SandboxConfig& config() const noexcept { return cfg_; }
  SandboxResult run(std::string_view program, const std::vector<std::string>& tests,
                    std::string_view epilogue = {}) const;

 private:
  SandboxConfig cfg_;
  mutable std::counting_semaphore<> slots_;
};

int pass_at_1(std::string_view program, const std::vector<std::string>& tests, const SandboxPool& pool);

// Experimental: plotting code passes when its assertions hold and it leaves
// a non-empty image behind (the current matplotlib figure is saved).
int visualization_pass(std::string_view program, const std::vector<std::string>& tests, const SandboxPool& pool);

// {"metric", "value", "n", "per_example": [...]}
nlohmann::json metric_report(std::string_view metric, double value, const std::vector<double>& per_example);

}  // namespace peap

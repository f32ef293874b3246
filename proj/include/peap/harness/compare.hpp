#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "peap/harness/eval.hpp"

namespace peap::harness {

// Scores and deltas in percentage points; overhead columns in percent.
struct ComparisonTable {
  struct Row {
    std::string task;
    std::vector<std::optional<double>> values;
  };
  std::vector<std::string> columns;
  std::vector<Row> rows;  // per task, then "Overall"

  std::optional<double> value(const std::string& task, const std::string& column) const;
  std::string to_csv() const;
  std::string to_markdown() const;
  nlohmann::json to_json() const;
};

inline constexpr std::string_view kOverallRow = "Overall";

// Column names: "<Style> <Mode>" scores, "PEAP-Text (<Style>)",
// "PEAPFast-PEAP (<Style>)", "CoT-Direct (<Mode>)" and
// "Overhead <Mode> (<Style>)". Overall scores are macro means over tasks;
// overall overhead uses summed latencies.
ComparisonTable compare_runs(const std::vector<RunSummary>& runs);

std::string display_name(ModalityMode mode);
std::string display_name(PromptStyle style);

}  // namespace peap::harness

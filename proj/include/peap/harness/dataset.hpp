#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peap/render.hpp"

namespace peap::harness {

enum class ModalityMode { Text, PEAP, Semi, PEAPFast };
enum class PromptStyle { Direct, CoT };
enum class TaskKind { Classification, Math, Code, FreeForm };

std::string_view to_string(ModalityMode mode);
std::string_view to_string(PromptStyle style);
std::string_view to_string(TaskKind kind);
ModalityMode parse_mode(std::string_view name);
PromptStyle parse_style(std::string_view name);
TaskKind parse_task_kind(std::string_view name);

inline constexpr ModalityMode kAllModes[] = {ModalityMode::Text, ModalityMode::PEAP, ModalityMode::Semi,
                                             ModalityMode::PEAPFast};
inline constexpr PromptStyle kAllStyles[] = {PromptStyle::Direct, PromptStyle::CoT};

// Metric names: accuracy, exact_match, rouge_l, mcc, f1, pearson, pass_at_1.
struct TaskSpec {
  std::string name;
  TaskKind kind = TaskKind::FreeForm;
  std::string metric = "exact_match";
  // Placeholders: {input}, {choices}, {table}. Without {table} a table is
  // placed ahead of the text.
  std::string prompt_template = "{input}";
  // Label counted as the positive class by mcc and f1; defaults to the
  // first choice.
  std::string positive_label;

  void validate() const;
  nlohmann::json to_json() const;
  static TaskSpec from_json(const nlohmann::json& j, std::string name = {});
};

struct Example;

class TaskCatalog {
 public:
  void add(TaskSpec spec);
  bool contains(const std::string& name) const { return specs_.count(name) != 0; }
  // Registered spec for the example's task, or a default inferred from the
  // example (choices -> classification scored by accuracy).
  TaskSpec resolve(const Example& ex) const;

  nlohmann::json to_json() const;
  static TaskCatalog from_json(const nlohmann::json& j);

 private:
  std::map<std::string, TaskSpec> specs_;
};

struct Example {
  std::string id;
  std::string task;
  std::string input;
  std::optional<TableData> table;
  std::optional<std::filesystem::path> image_path;
  std::optional<std::string> ocr_text;
  std::vector<std::string> choices;
  std::vector<std::string> references;
  nlohmann::json meta = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::size_t line = 0;

  bool has_visual() const { return table.has_value() || image_path.has_value(); }
  nlohmann::json to_json() const;
};

// Parses one dataset object. Relative image paths resolve against base_dir.
Example parse_example(const nlohmann::json& j, std::size_t line, const std::filesystem::path& base_dir,
                      std::uint64_t run_seed);

// One JSON object per line; blank lines are skipped. Example seeds derive
// from (run_seed, id). Duplicate ids are rejected.
std::vector<Example> load_dataset(const std::filesystem::path& path, const TaskCatalog& tasks,
                                  std::uint64_t run_seed);

// Hash over the example contents, used to pair reports of the same dataset.
std::string dataset_fingerprint(const std::vector<Example>& examples);

}  // namespace peap::harness

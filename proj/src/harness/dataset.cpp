#include "peap/harness/dataset.hpp"

#include <fstream>
#include <set>

#include "peap/error.hpp"
#include "peap/hash.hpp"
#include "peap/rng.hpp"

namespace peap::harness {

namespace {

constexpr const char* kMetrics[] = {"accuracy", "exact_match", "rouge_l", "mcc", "f1", "pearson", "pass_at_1"};

template <typename Enum, std::size_t N>
Enum parse_named(std::string_view name, const std::pair<Enum, std::string_view> (&table)[N], const char* what) {
  for (const auto& [value, label] : table) {
    if (label == name) return value;
  }
  throw Error(ErrorCode::InvalidConfig, std::string("unknown ") + what + " '" + std::string(name) + "'");
}

constexpr std::pair<ModalityMode, std::string_view> kModeNames[] = {
    {ModalityMode::Text, "text"}, {ModalityMode::PEAP, "peap"}, {ModalityMode::Semi, "semi"},
    {ModalityMode::PEAPFast, "peap-fast"}};
constexpr std::pair<PromptStyle, std::string_view> kStyleNames[] = {{PromptStyle::Direct, "direct"},
                                                                    {PromptStyle::CoT, "cot"}};
constexpr std::pair<TaskKind, std::string_view> kKindNames[] = {{TaskKind::Classification, "classification"},
                                                                {TaskKind::Math, "math"},
                                                                {TaskKind::Code, "code"},
                                                                {TaskKind::FreeForm, "free-form"}};

template <typename Enum, std::size_t N>
std::string_view name_of(Enum v, const std::pair<Enum, std::string_view> (&table)[N]) {
  for (const auto& [value, label] : table) {
    if (value == v) return label;
  }
  return "?";
}

std::string id_string(const nlohmann::json& v, std::size_t line) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw SchemaError(line, "id must be a string or integer");
}

std::vector<std::string> string_list(const nlohmann::json& v, std::size_t line, const char* field) {
  std::vector<std::string> out;
  auto one = [&](const nlohmann::json& x) {
    if (x.is_string()) out.push_back(x.get<std::string>());
    else if (x.is_number() || x.is_boolean()) out.push_back(x.dump());
    else throw SchemaError(line, std::string(field) + " entries must be strings or scalars");
  };
  if (v.is_array()) {
    for (const auto& x : v) one(x);
  } else {
    one(v);
  }
  return out;
}

}  // namespace

std::string_view to_string(ModalityMode mode) { return name_of(mode, kModeNames); }
std::string_view to_string(PromptStyle style) { return name_of(style, kStyleNames); }
std::string_view to_string(TaskKind kind) { return name_of(kind, kKindNames); }
ModalityMode parse_mode(std::string_view name) { return parse_named(name, kModeNames, "mode"); }
PromptStyle parse_style(std::string_view name) { return parse_named(name, kStyleNames, "prompt style"); }
TaskKind parse_task_kind(std::string_view name) { return parse_named(name, kKindNames, "task kind"); }

void TaskSpec::validate() const {
  if (std::find(std::begin(kMetrics), std::end(kMetrics), metric) == std::end(kMetrics)) {
    throw Error(ErrorCode::InvalidConfig, "unknown metric '" + metric + "' for task '" + name + "'");
  }
  if (prompt_template.find("{input}") == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "prompt template of task '" + name + "' lacks {input}");
  }
  if (metric == "pass_at_1" && kind != TaskKind::Code) {
    throw Error(ErrorCode::InvalidConfig, "pass_at_1 requires a code task ('" + name + "')");
  }
}

nlohmann::json TaskSpec::to_json() const {
  return {{"name", name},
          {"kind", to_string(kind)},
          {"metric", metric},
          {"prompt_template", prompt_template},
          {"positive_label", positive_label}};
}

TaskSpec TaskSpec::from_json(const nlohmann::json& j, std::string name) {
  TaskSpec t;
  t.name = j.value("name", std::move(name));
  if (j.contains("kind")) t.kind = parse_task_kind(j.at("kind").get<std::string>());
  t.metric = j.value("metric", t.kind == TaskKind::Code             ? std::string("pass_at_1")
                               : t.kind == TaskKind::Classification ? std::string("accuracy")
                                                                    : t.metric);
  t.prompt_template = j.value("prompt_template", t.prompt_template);
  t.positive_label = j.value("positive_label", t.positive_label);
  t.validate();
  return t;
}

void TaskCatalog::add(TaskSpec spec) {
  spec.validate();
  const std::string key = spec.name;
  specs_[key] = std::move(spec);
}

TaskSpec TaskCatalog::resolve(const Example& ex) const {
  if (auto it = specs_.find(ex.task); it != specs_.end()) return it->second;
  TaskSpec t;
  t.name = ex.task;
  if (!ex.choices.empty()) {
    t.kind = TaskKind::Classification;
    t.metric = "accuracy";
  }
  return t;
}

nlohmann::json TaskCatalog::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, spec] : specs_) j[name] = spec.to_json();
  return j;
}

TaskCatalog TaskCatalog::from_json(const nlohmann::json& j) {
  TaskCatalog c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "tasks must be an object keyed by task name");
  for (const auto& [name, spec] : j.items()) c.add(TaskSpec::from_json(spec, name));
  return c;
}

nlohmann::json Example::to_json() const {
  nlohmann::json j{{"id", id}, {"task", task}, {"input", input}, {"references", references}};
  if (table) j["table"] = table->to_json();
  if (image_path) j["image_path"] = image_path->string();
  if (ocr_text) j["ocr_text"] = *ocr_text;
  if (!choices.empty()) j["choices"] = choices;
  if (!meta.empty()) j["meta"] = meta;
  return j;
}

Example parse_example(const nlohmann::json& j, std::size_t line, const std::filesystem::path& base_dir,
                      std::uint64_t run_seed) {
  if (!j.is_object()) throw SchemaError(line, "expected a JSON object");
  Example ex;
  ex.line = line;
  if (!j.contains("id")) throw SchemaError(line, "missing id");
  ex.id = id_string(j.at("id"), line);
  if (ex.id.empty()) throw SchemaError(line, "empty id");
  if (!j.contains("task") || !j.at("task").is_string()) throw SchemaError(line, "missing task");
  ex.task = j.at("task").get<std::string>();
  if (j.contains("input")) {
    if (!j.at("input").is_string()) throw SchemaError(line, "input must be a string");
    ex.input = j.at("input").get<std::string>();
  }
  if (j.contains("table") && !j.at("table").is_null()) {
    try {
      ex.table = TableData::from_json(j.at("table"));
      ex.table->validate();
    } catch (const SchemaError&) {
      throw;
    } catch (const std::exception& e) {
      throw SchemaError(line, std::string("bad table: ") + e.what());
    }
  }
  if (j.contains("image_path") && !j.at("image_path").is_null()) {
    if (!j.at("image_path").is_string()) throw SchemaError(line, "image_path must be a string");
    std::filesystem::path p = j.at("image_path").get<std::string>();
    ex.image_path = p.is_absolute() ? p : base_dir / p;
  }
  if (j.contains("ocr_text") && !j.at("ocr_text").is_null()) {
    if (!j.at("ocr_text").is_string()) throw SchemaError(line, "ocr_text must be a string");
    ex.ocr_text = j.at("ocr_text").get<std::string>();
  }
  if (j.contains("choices") && !j.at("choices").is_null()) ex.choices = string_list(j.at("choices"), line, "choices");
  if (!j.contains("references") || j.at("references").is_null()) throw SchemaError(line, "missing references");
  ex.references = string_list(j.at("references"), line, "references");
  if (ex.references.empty()) throw SchemaError(line, "references must be non-empty");
  if (j.contains("meta")) ex.meta = j.at("meta");
  if (ex.input.empty() && !ex.table && !ex.image_path) {
    throw SchemaError(line, "example needs input text, a table or an image");
  }
  ex.seed = derive_seed(run_seed, std::string_view(ex.id));
  return ex;
}

std::vector<Example> load_dataset(const std::filesystem::path& path, const TaskCatalog& tasks,
                                  std::uint64_t run_seed) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open dataset " + path.string());
  std::vector<Example> out;
  std::set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(line, std::string("invalid JSON: ") + e.what());
    }
    Example ex = parse_example(j, line, path.parent_path(), run_seed);
    if (!seen.insert(ex.id).second) throw SchemaError(line, "duplicate id '" + ex.id + "'");
    const TaskSpec spec = tasks.resolve(ex);
    if (spec.kind == TaskKind::Classification && ex.choices.empty()) {
      throw SchemaError(line, "classification example needs choices");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::string dataset_fingerprint(const std::vector<Example>& examples) {
  std::string all;
  for (const auto& ex : examples) {
    all += ex.to_json().dump();
    all += '\n';
  }
  return sha256_hex(all);
}

}  // namespace peap::harness

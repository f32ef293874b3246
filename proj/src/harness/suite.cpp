#include "peap/harness/suite.hpp"

#include <fstream>
#include <set>

#include "peap/error.hpp"

namespace peap::harness {

namespace {

const std::set<std::string> kKnownKeys = {
    "dataset", "modes", "styles", "render", "sample_layout", "noise", "patch_size", "variance_threshold",
    "policy", "endpoint", "tasks", "out", "seed", "concurrency", "retry", "max_tokens", "temperature",
    "save_assets", "sandbox", "clock"};

template <typename T, typename F>
std::vector<T> parse_list(const nlohmann::json& j, F parse) {
  std::vector<T> out;
  if (j.is_string()) {
    out.push_back(parse(j.get<std::string>()));
  } else {
    for (const auto& x : j) out.push_back(parse(x.get<std::string>()));
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKnownKeys.count(key)) throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
  }
  RunConfig c;
  try {
    if (j.contains("dataset")) c.dataset = resolve(j.at("dataset").get<std::string>(), base_dir);
    if (j.contains("modes")) c.modes = parse_list<ModalityMode>(j.at("modes"), parse_mode);
    if (j.contains("styles")) c.styles = parse_list<PromptStyle>(j.at("styles"), parse_style);
    nlohmann::json assets = nlohmann::json::object();
    for (const char* k : {"render", "sample_layout", "noise", "patch_size", "variance_threshold", "policy"}) {
      if (j.contains(k)) assets[k] = j.at(k);
    }
    c.eval.assets = AssetOptions::from_json(assets);
    c.eval.seed = j.value("seed", c.eval.seed);
    c.eval.concurrency = j.value("concurrency", c.eval.concurrency);
    c.eval.save_assets = j.value("save_assets", c.eval.save_assets);
    if (j.contains("retry")) {
      const auto& r = j.at("retry");
      c.eval.retry.max_attempts = r.value("max_attempts", c.eval.retry.max_attempts);
      c.eval.retry.initial_backoff_seconds = r.value("initial_backoff_seconds", c.eval.retry.initial_backoff_seconds);
      c.eval.retry.backoff_multiplier = r.value("backoff_multiplier", c.eval.retry.backoff_multiplier);
    }
    if (j.contains("max_tokens") || j.contains("temperature")) {
      GenerationSettings g;
      g.max_tokens = j.value("max_tokens", g.max_tokens);
      g.temperature = j.value("temperature", g.temperature);
      c.eval.generation = g;
    }
    if (j.contains("sandbox")) {
      const auto& s = j.at("sandbox");
      c.eval.sandbox.interpreter = s.value("interpreter", c.eval.sandbox.interpreter);
      c.eval.sandbox.timeout = std::chrono::milliseconds(
          static_cast<long>(1000.0 * s.value("timeout_seconds", c.eval.sandbox.timeout.count() / 1000.0)));
      c.eval.sandbox.max_concurrent = s.value("max_concurrent", c.eval.sandbox.max_concurrent);
      c.eval.sandbox.require_network_isolation =
          s.value("require_network_isolation", c.eval.sandbox.require_network_isolation);
    }
    if (j.contains("endpoint")) c.endpoint = EndpointConfig::from_json(j.at("endpoint"));
    if (j.contains("tasks")) c.tasks = TaskCatalog::from_json(j.at("tasks"));
    if (j.contains("out")) c.out = resolve(j.at("out").get<std::string>(), base_dir);
    c.clock = j.value("clock", c.clock);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad config value: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

void RunConfig::validate() const {
  if (dataset.empty()) throw Error(ErrorCode::InvalidConfig, "dataset path is required");
  if (!std::filesystem::is_regular_file(dataset)) {
    throw Error(ErrorCode::InvalidConfig, "dataset " + dataset.string() + " does not exist");
  }
  if (modes.empty()) throw Error(ErrorCode::InvalidConfig, "at least one mode is required");
  if (styles.empty()) throw Error(ErrorCode::InvalidConfig, "at least one prompt style is required");
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, "output directory is required");
  if (eval.concurrency < 1) throw Error(ErrorCode::InvalidConfig, "concurrency must be at least 1");
  if (eval.retry.max_attempts < 1) throw Error(ErrorCode::InvalidConfig, "retry.max_attempts must be at least 1");
  if (clock != "steady" && clock != "tick") throw Error(ErrorCode::InvalidConfig, "clock must be steady or tick");
  eval.assets.validate();
  endpoint.validate();
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json modes_j = nlohmann::json::array(), styles_j = nlohmann::json::array();
  for (auto m : modes) modes_j.push_back(to_string(m));
  for (auto s : styles) styles_j.push_back(to_string(s));
  nlohmann::json j = eval.assets.to_json();
  j["dataset"] = dataset.string();
  j["modes"] = modes_j;
  j["styles"] = styles_j;
  j["endpoint"] = endpoint.to_json();
  j["tasks"] = tasks.to_json();
  j["out"] = out.string();
  j["seed"] = eval.seed;
  j["concurrency"] = eval.concurrency;
  j["save_assets"] = eval.save_assets;
  j["retry"] = {{"max_attempts", eval.retry.max_attempts},
                {"initial_backoff_seconds", eval.retry.initial_backoff_seconds},
                {"backoff_multiplier", eval.retry.backoff_multiplier}};
  j["clock"] = clock;
  return j;
}

std::unique_ptr<Clock> make_clock(const std::string& name) {
  if (name == "tick") return std::make_unique<TickClock>();
  if (name == "steady") return std::make_unique<SteadyClock>();
  throw Error(ErrorCode::InvalidConfig, "clock must be steady or tick");
}

std::size_t SuiteResult::failures() const {
  std::size_t n = 0;
  for (const auto& r : reports) n += r.failures();
  return n;
}

std::size_t SuiteResult::records() const {
  std::size_t n = 0;
  for (const auto& r : reports) n += r.records.size();
  return n;
}

void write_comparison(const ComparisonTable& table, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "comparison.csv") << table.to_csv();
  std::ofstream(dir / "comparison.md") << table.to_markdown();
  std::ofstream(dir / "comparison.json") << table.to_json().dump(2) << '\n';
}

SuiteResult run_suite(const RunConfig& cfg, const std::vector<Example>& examples, ModelClient& client, Clock& clock) {
  std::vector<ModalityMode> modes;
  if (std::find(cfg.modes.begin(), cfg.modes.end(), ModalityMode::Text) != cfg.modes.end()) {
    modes.push_back(ModalityMode::Text);
  }
  for (auto m : cfg.modes) {
    if (m != ModalityMode::Text && std::find(modes.begin(), modes.end(), m) == modes.end()) modes.push_back(m);
  }
  SuiteResult result;
  std::vector<RunSummary> summaries;
  for (PromptStyle style : cfg.styles) {
    std::optional<RunSummary> text_run;
    for (ModalityMode mode : modes) {
      const auto dir = cfg.out / run_dir_name(mode, style);
      RunReport report = run_eval(examples, cfg.tasks, mode, style, client, cfg.eval, dir, clock);
      if (mode == ModalityMode::Text) text_run = report.summary;
      if (text_run) {
        attach_overhead(report.summary, *text_run);
        write_report(report, dir);
      }
      summaries.push_back(report.summary);
      result.reports.push_back(std::move(report));
    }
  }
  result.comparison = compare_runs(summaries);
  write_comparison(result.comparison, cfg.out);
  return result;
}

}  // namespace peap::harness

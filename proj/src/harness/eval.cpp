#include "peap/harness/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "peap/error.hpp"
#include "peap/hash.hpp"
#include "peap/provenance.hpp"

namespace peap::harness {

namespace {

template <typename T>
nlohmann::json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::optional<double> parse_number(const std::string& s) {
  const std::string n = normalize_answer(s);
  if (n.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(n.c_str(), &end);
  if (end != n.c_str() + n.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string safe_name(const std::string& id) {
  std::string out;
  for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out;
}

std::optional<double> task_metric(const TaskSpec& spec, const std::vector<const Record*>& recs,
                                  const std::vector<Example>& examples, double mean_score) {
  std::vector<const Record*> scored;
  for (const Record* r : recs) {
    if (r->scored()) scored.push_back(r);
  }
  if (scored.empty()) return std::nullopt;
  if (spec.metric == "mcc" || spec.metric == "f1") {
    const Example& first = examples.at(scored.front()->index);
    std::string positive = spec.positive_label;
    if (positive.empty() && !first.choices.empty()) positive = first.choices.front();
    positive = normalize_answer(positive);
    std::vector<bool> preds, golds;
    for (const Record* r : scored) {
      preds.push_back(r->extracted && normalize_answer(*r->extracted) == positive);
      golds.push_back(normalize_answer(examples.at(r->index).references.front()) == positive);
    }
    if (spec.metric == "f1") return f1_binary(preds, golds);
    return matthews_corr(ConfusionCounts::from(preds, golds));
  }
  if (spec.metric == "pearson") {
    std::vector<double> xs, ys;
    for (const Record* r : scored) {
      if (!r->extracted) continue;
      const auto x = parse_number(*r->extracted);
      const auto y = parse_number(examples.at(r->index).references.front());
      if (x && y) {
        xs.push_back(*x);
        ys.push_back(*y);
      }
    }
    try {
      return pearson(xs, ys);
    } catch (const Error&) {
      return std::nullopt;
    }
  }
  return mean_score;
}

void write_lines_atomically(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    for (const auto& l : lines) out << l << '\n';
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

bool is_fatal(ErrorCode code) {
  return code == ErrorCode::AuthError || code == ErrorCode::InvalidConfig || code == ErrorCode::SandboxUnavailable;
}

}  // namespace

nlohmann::json Record::to_json() const {
  return {{"run_id", run_id},
          {"index", index},
          {"id", id},
          {"task", task},
          {"status", status},
          {"response", response},
          {"extracted", opt_json(extracted)},
          {"rule", rule},
          {"score", opt_json(score)},
          {"error", error},
          {"retries", retries},
          {"prepare_seconds", prepare_seconds},
          {"model_seconds", model_seconds},
          {"latency_seconds", latency_seconds},
          {"prompt_tokens", opt_json(prompt_tokens)},
          {"completion_tokens", opt_json(completion_tokens)},
          {"prerender_sha256", prerender_sha256},
          {"prompt_sha256", prompt_sha256},
          {"assets", assets}};
}

Record Record::from_json(const nlohmann::json& j) {
  Record r;
  r.run_id = j.at("run_id").get<std::string>();
  r.index = j.at("index").get<std::size_t>();
  r.id = j.at("id").get<std::string>();
  r.task = j.at("task").get<std::string>();
  r.status = j.at("status").get<std::string>();
  r.response = j.at("response").get<std::string>();
  r.extracted = opt_from<std::string>(j, "extracted");
  r.rule = j.at("rule").get<int>();
  r.score = opt_from<double>(j, "score");
  r.error = j.at("error").get<std::string>();
  r.retries = j.at("retries").get<int>();
  r.prepare_seconds = j.at("prepare_seconds").get<double>();
  r.model_seconds = j.at("model_seconds").get<double>();
  r.latency_seconds = j.at("latency_seconds").get<double>();
  r.prompt_tokens = opt_from<long>(j, "prompt_tokens");
  r.completion_tokens = opt_from<long>(j, "completion_tokens");
  r.prerender_sha256 = j.at("prerender_sha256").get<std::string>();
  r.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
  r.assets = j.at("assets");
  return r;
}

nlohmann::json TaskAggregate::to_json() const {
  return {{"metric", metric},
          {"n", n},
          {"scored", scored},
          {"mean_score", mean_score},
          {"metric_value", opt_json(metric_value)},
          {"total_latency_seconds", total_latency_seconds}};
}

TaskAggregate TaskAggregate::from_json(const nlohmann::json& j) {
  TaskAggregate t;
  t.metric = j.value("metric", t.metric);
  t.n = j.value("n", t.n);
  t.scored = j.value("scored", t.scored);
  t.mean_score = j.value("mean_score", t.mean_score);
  t.metric_value = opt_from<double>(j, "metric_value");
  t.total_latency_seconds = j.value("total_latency_seconds", t.total_latency_seconds);
  return t;
}

nlohmann::json RunSummary::to_json() const {
  nlohmann::json t = nlohmann::json::object();
  for (const auto& [name, agg] : tasks) t[name] = agg.to_json();
  return {{"run_id", run_id},
          {"dataset_sha256", dataset_sha256},
          {"model", model},
          {"mode", to_string(mode)},
          {"style", to_string(style)},
          {"rules_version", rules_version},
          {"n", n},
          {"scored", scored},
          {"no_answer", no_answer},
          {"unscored", unscored},
          {"incompatible", incompatible},
          {"mean_score", mean_score},
          {"total_latency_seconds", total_latency_seconds},
          {"tasks", t},
          {"overhead_pct", opt_json(overhead_pct)},
          {"config", config}};
}

RunSummary RunSummary::from_json(const nlohmann::json& j) {
  RunSummary s;
  try {
    s.run_id = j.value("run_id", s.run_id);
    s.dataset_sha256 = j.value("dataset_sha256", s.dataset_sha256);
    s.model = j.value("model", s.model);
    s.mode = parse_mode(j.at("mode").get<std::string>());
    s.style = parse_style(j.at("style").get<std::string>());
    s.rules_version = j.value("rules_version", s.rules_version);
    s.n = j.value("n", s.n);
    s.scored = j.value("scored", s.scored);
    s.no_answer = j.value("no_answer", s.no_answer);
    s.unscored = j.value("unscored", s.unscored);
    s.incompatible = j.value("incompatible", s.incompatible);
    s.mean_score = j.value("mean_score", s.mean_score);
    s.total_latency_seconds = j.value("total_latency_seconds", s.total_latency_seconds);
    if (j.contains("tasks")) {
      for (const auto& [name, agg] : j.at("tasks").items()) s.tasks[name] = TaskAggregate::from_json(agg);
    }
    s.overhead_pct = opt_from<double>(j, "overhead_pct");
    if (j.contains("config")) s.config = j.at("config");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed run summary: ") + e.what());
  }
  return s;
}

std::size_t RunReport::failures() const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const Record& r) {
    return r.status == kStatusTransport || r.status == kStatusError;
  }));
}

std::string run_dir_name(ModalityMode mode, PromptStyle style) {
  return std::string(to_string(mode)) + "-" + std::string(to_string(style));
}

namespace {

nlohmann::json run_config_json(const EvalConfig& cfg, PromptStyle style) {
  const GenerationSettings g = cfg.generation_for(style);
  return {{"assets", cfg.assets.to_json()},
          {"seed", cfg.seed},
          {"temperature", g.temperature},
          {"max_tokens", g.max_tokens}};
}

}  // namespace

std::string make_run_id(const std::string& dataset_sha256, ModalityMode mode, PromptStyle style,
                        const std::string& model, const EvalConfig& cfg) {
  const std::string key = dataset_sha256 + "|" + std::string(to_string(mode)) + "|" + std::string(to_string(style)) +
                          "|" + model + "|" + run_config_json(cfg, style).dump() + "|" +
                          std::string(kExtractionRulesVersion);
  return sha256_hex(key).substr(0, 16);
}

double score_answer(const Example& ex, const TaskSpec& task, const std::string& answer, const SandboxPool* sandbox) {
  if (task.metric == "pass_at_1") {
    if (!sandbox) throw Error(ErrorCode::InvalidConfig, "code task without a sandbox");
    std::vector<std::string> tests;
    if (ex.meta.contains("tests") && ex.meta.at("tests").is_array()) {
      for (const auto& t : ex.meta.at("tests")) tests.push_back(t.get<std::string>());
    } else {
      tests = ex.references;
    }
    std::string program = answer;
    if (ex.meta.contains("setup") && ex.meta.at("setup").is_string()) {
      program = ex.meta.at("setup").get<std::string>() + "\n" + program;
    }
    return pass_at_1(program, tests, *sandbox);
  }
  double best = 0.0;
  for (const auto& ref : ex.references) {
    best = std::max(best, task.metric == "rouge_l" ? rouge_l(answer, ref) : static_cast<double>(exact_match(answer, ref)));
  }
  return best;
}

RunSummary summarize(const std::vector<Record>& records, const std::vector<Example>& examples,
                     const TaskCatalog& tasks) {
  RunSummary s;
  std::map<std::string, std::vector<const Record*>> by_task;
  double score_sum = 0.0;
  for (const auto& r : records) {
    ++s.n;
    s.total_latency_seconds += r.latency_seconds;
    if (r.scored()) {
      ++s.scored;
      score_sum += *r.score;
    } else {
      ++s.unscored;
    }
    if (r.status == kStatusNoAnswer) ++s.no_answer;
    if (r.status == kStatusIncompatible) ++s.incompatible;
    by_task[r.task].push_back(&r);
  }
  s.mean_score = s.scored ? score_sum / static_cast<double>(s.scored) : 0.0;
  for (const auto& [name, recs] : by_task) {
    TaskAggregate agg;
    const TaskSpec spec = tasks.resolve(examples.at(recs.front()->index));
    agg.metric = spec.metric;
    double sum = 0.0;
    for (const Record* r : recs) {
      ++agg.n;
      agg.total_latency_seconds += r->latency_seconds;
      if (r->scored()) {
        ++agg.scored;
        sum += *r->score;
      }
    }
    agg.mean_score = agg.scored ? sum / static_cast<double>(agg.scored) : 0.0;
    agg.metric_value = task_metric(spec, recs, examples, agg.mean_score);
    s.tasks[name] = agg;
  }
  return s;
}

double conservation_error(const RunReport& report) {
  const RunSummary& s = report.summary;
  if (s.n != report.records.size()) return std::numeric_limits<double>::infinity();
  double err = 0.0;
  double sum = 0.0, latency = 0.0;
  std::size_t scored = 0;
  std::map<std::string, std::pair<double, std::size_t>> task_scores;
  std::map<std::string, double> task_latency;
  for (const auto& r : report.records) {
    latency += r.latency_seconds;
    task_latency[r.task] += r.latency_seconds;
    if (r.scored()) {
      sum += *r.score;
      ++scored;
      task_scores[r.task].first += *r.score;
      ++task_scores[r.task].second;
    }
  }
  if (scored != s.scored) return std::numeric_limits<double>::infinity();
  err = std::max(err, std::abs((scored ? sum / static_cast<double>(scored) : 0.0) - s.mean_score));
  err = std::max(err, std::abs(latency - s.total_latency_seconds));
  for (const auto& [name, agg] : s.tasks) {
    const auto [tsum, tn] = task_scores[name];
    if (tn != agg.scored) return std::numeric_limits<double>::infinity();
    err = std::max(err, std::abs((tn ? tsum / static_cast<double>(tn) : 0.0) - agg.mean_score));
    err = std::max(err, std::abs(task_latency[name] - agg.total_latency_seconds));
  }
  return err;
}

void attach_overhead(RunSummary& summary, const RunSummary& text_run) {
  if (text_run.mode != ModalityMode::Text) throw Error(ErrorCode::MismatchedRuns, "overhead baseline must be a Text run");
  if (text_run.dataset_sha256 != summary.dataset_sha256) {
    throw Error(ErrorCode::MismatchedRuns, "overhead baseline ran on a different dataset");
  }
  summary.overhead_pct = text_run.total_latency_seconds > 0
                             ? std::optional<double>(overhead_pct(text_run.total_latency_seconds, summary.total_latency_seconds))
                             : std::nullopt;
}

RunReport run_eval(const std::vector<Example>& examples, const TaskCatalog& tasks, ModalityMode mode,
                   PromptStyle style, ModelClient& client, const EvalConfig& cfg,
                   const std::filesystem::path& out_dir, Clock& clock) {
  cfg.assets.validate();
  const std::string dataset_sha = dataset_fingerprint(examples);
  const std::string run_id = make_run_id(dataset_sha, mode, style, client.model_id(), cfg);

  std::unique_ptr<SandboxPool> sandbox;
  for (const auto& ex : examples) {
    if (tasks.resolve(ex).metric == "pass_at_1") {
      sandbox = std::make_unique<SandboxPool>(cfg.sandbox);
      break;
    }
  }

  std::vector<std::optional<Record>> done(examples.size());
  std::ofstream sink;
  const auto records_path = out_dir / "records.jsonl";
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    if (std::filesystem::exists(records_path)) {
      std::ifstream in(records_path);
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        Record r;
        try {
          r = Record::from_json(nlohmann::json::parse(line));
        } catch (const std::exception&) {
          continue;  // torn write from an interrupted run
        }
        if (r.run_id != run_id) {
          throw Error(ErrorCode::InvalidConfig, records_path.string() + " belongs to a different run");
        }
        if (r.index >= examples.size() || examples[r.index].id != r.id) {
          throw Error(ErrorCode::InvalidConfig, records_path.string() + " does not match the dataset");
        }
        done[r.index] = std::move(r);
      }
      std::vector<std::string> kept;
      for (const auto& r : done) {
        if (r) kept.push_back(r->to_json().dump());
      }
      write_lines_atomically(records_path, kept);
    }
    sink.open(records_path, std::ios::app);
    if (!sink) throw Error(ErrorCode::IoError, "cannot open " + records_path.string());
  }

  const GenerationSettings generation = cfg.generation_for(style);
  auto process = [&](std::size_t i) {
    const Example& ex = examples[i];
    Record r;
    r.run_id = run_id;
    r.index = i;
    r.id = ex.id;
    r.task = ex.task;
    const TaskSpec spec = tasks.resolve(ex);
    const double t0 = clock.now();
    PromptPayload payload;
    try {
      const ModalityAssets assets = transfer_modality(ex, spec, mode, cfg.assets);
      r.prerender_sha256 = sha256_hex(assets.prerender_text);
      payload = build_prompt(assets, spec, style, generation, cfg.assets.patch_size);
      r.prompt_sha256 = payload.sha256();
      for (std::size_t k = 0; k < assets.images.size(); ++k) {
        const auto& img = assets.images[k];
        nlohmann::json a{{"role", img.role},
                         {"width", img.canvas.width()},
                         {"height", img.canvas.height()},
                         {"provenance", provenance_to_json(img.canvas.provenance)}};
        if (img.mask) {
          a["patches"] = img.mask->size();
          a["retained"] = img.mask->retained;
        }
        if (cfg.save_assets && !out_dir.empty()) {
          const auto rel = std::filesystem::path("assets") / (safe_name(ex.id) + "-" + std::to_string(k) + ".png");
          std::filesystem::create_directories(out_dir / "assets");
          write_canvas(out_dir / rel, img.canvas);
          a["file"] = rel.generic_string();
        }
        r.assets.push_back(std::move(a));
      }
    } catch (const Error& e) {
      if (is_fatal(e.code())) throw;
      r.status = e.code() == ErrorCode::IncompatibleMode ? kStatusIncompatible : kStatusError;
      r.error = e.what();
      r.latency_seconds = r.prepare_seconds = clock.now() - t0;
      return r;
    }
    r.prepare_seconds = clock.now() - t0;
    ModelResponse resp;
    try {
      resp = query_model(client, payload, cfg.retry, clock);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TransportError) throw;
      r.status = kStatusTransport;
      r.error = e.what();
      r.retries = std::max(0, cfg.retry.max_attempts - 1);
      r.latency_seconds = r.prepare_seconds;
      return r;
    }
    r.response = resp.text;
    r.retries = resp.retries;
    r.model_seconds = resp.latency_seconds;
    r.latency_seconds = r.prepare_seconds + r.model_seconds;
    r.prompt_tokens = resp.prompt_tokens;
    r.completion_tokens = resp.completion_tokens;
    try {
      const ExtractedAnswer a = extract_answer(resp.text, spec, ex.choices);
      r.extracted = a.text;
      r.rule = a.rule;
      r.score = score_answer(ex, spec, a.text, sandbox.get());
      r.status = kStatusOk;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoAnswerFound) throw;
      r.status = kStatusNoAnswer;
      r.score = 0.0;
    }
    return r;
  };

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (!done[i]) pending.push_back(i);
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex sink_mu;
  auto worker = [&] {
    while (!abort.load()) {
      const std::size_t k = next.fetch_add(1);
      if (k >= pending.size()) return;
      try {
        Record r = process(pending[k]);
        std::lock_guard lock(sink_mu);
        if (sink.is_open()) {
          sink << r.to_json().dump() << '\n';
          sink.flush();
        }
        done[pending[k]] = std::move(r);
      } catch (...) {
        std::lock_guard lock(sink_mu);
        if (!fatal) fatal = std::current_exception();
        abort.store(true);
      }
    }
  };
  const std::size_t n_workers = std::min(std::max<std::size_t>(1, cfg.concurrency), pending.size());
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w + 1 < n_workers; ++w) threads.emplace_back(worker);
  if (n_workers > 0) worker();
  for (auto& t : threads) t.join();
  if (sink.is_open()) sink.close();
  if (fatal) std::rethrow_exception(fatal);

  RunReport report;
  for (auto& r : done) report.records.push_back(std::move(*r));
  report.summary = summarize(report.records, examples, tasks);
  report.summary.run_id = run_id;
  report.summary.dataset_sha256 = dataset_sha;
  report.summary.model = client.model_id();
  report.summary.mode = mode;
  report.summary.style = style;
  report.summary.config = run_config_json(cfg, style);
  if (!out_dir.empty()) write_report(report, out_dir);
  return report;
}

void write_report(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> lines;
  for (const auto& r : report.records) lines.push_back(r.to_json().dump());
  write_lines_atomically(dir / "records.jsonl", lines);
  write_lines_atomically(dir / "summary.json", {report.summary.to_json().dump(2)});
}

RunSummary read_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return RunSummary::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

RunReport read_report(const std::filesystem::path& dir) {
  RunReport report;
  report.summary = read_summary(dir / "summary.json");
  std::ifstream in(dir / "records.jsonl");
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + (dir / "records.jsonl").string());
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) report.records.push_back(Record::from_json(nlohmann::json::parse(line)));
  }
  return report;
}

}  // namespace peap::harness

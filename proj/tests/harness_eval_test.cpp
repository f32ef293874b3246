#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <regex>

#include "peap/error.hpp"
#include "peap/harness/compare.hpp"
#include "peap/harness/eval.hpp"
#include "peap/harness/suite.hpp"
#include "peap/metrics.hpp"
#include "support/paper_tables.hpp"
#include "support/temp_dir.hpp"

namespace peap::harness {
namespace {

using peap::testing::column;
using peap::testing::kModeScores;
using peap::testing::kModeSeconds;
using peap::testing::kStyleScores;
using peap::testing::kSuperGlueTasks;
using peap::testing::slurp;
using peap::testing::summary_of;
using peap::testing::TempDir;

template <typename F>
void expect_error(ErrorCode code, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

TaskCatalog math_catalog() {
  TaskCatalog c;
  c.add(TaskSpec::from_json({{"kind", "math"}, {"metric", "exact_match"}}, "arith"));
  return c;
}

// "What is i + 1?" for i in [0, n).
std::vector<Example> arithmetic(std::size_t n) {
  std::vector<Example> xs;
  for (std::size_t i = 0; i < n; ++i) {
    xs.push_back(parse_example({{"id", "q" + std::to_string(i)},
                                {"task", "arith"},
                                {"input", "What is " + std::to_string(i) + " + 1?"},
                                {"references", {std::to_string(i + 1)}}},
                               i + 1, {}, 3));
  }
  return xs;
}

int question_number(const PromptPayload& p) {
  std::smatch m;
  const std::string text = p.text();
  if (!std::regex_search(text, m, std::regex(R"(What is (\d+) \+ 1\?)"))) return -1;
  return std::stoi(m[1]);
}

// Correct for even questions, wrong for odd ones, silent for multiples of 5.
std::unique_ptr<MockClient> grader() {
  return std::make_unique<MockClient>([](const PromptPayload& p) -> std::string {
    const int i = question_number(p);
    if (i < 0) return "Answer: 0";
    if (i % 5 == 0) return "I am not sure.";
    return "So the answer is: " + std::to_string(i % 2 == 0 ? i + 1 : i + 2) + "\nAnswer: " +
           std::to_string(i % 2 == 0 ? i + 1 : i + 2);
  });
}

EvalConfig quick_config() {
  EvalConfig c;
  c.concurrency = 3;
  c.retry = RetryPolicy{3, 0.0, 2.0};
  return c;
}

TEST(RunEval, ScoresEveryExampleAndConserves) {
  const auto xs = arithmetic(20);
  auto client = grader();
  TickClock clock;
  const RunReport rep = run_eval(xs, math_catalog(), ModalityMode::Text, PromptStyle::Direct, *client, quick_config(), {}, clock);
  ASSERT_EQ(rep.records.size(), 20u);
  double sum = 0;
  std::size_t scored = 0, silent = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    const Record& r = rep.records[i];
    EXPECT_EQ(r.id, xs[i].id);
    ASSERT_TRUE(r.scored());
    if (i % 5 == 0) {
      EXPECT_EQ(r.status, kStatusNoAnswer);
      EXPECT_EQ(*r.score, 0.0);
      ++silent;
    } else {
      EXPECT_EQ(r.status, kStatusOk);
      EXPECT_EQ(*r.score, i % 2 == 0 ? 1.0 : 0.0);
      EXPECT_EQ(r.rule, 1);
    }
    sum += *r.score;
    ++scored;
    EXPECT_EQ(r.latency_seconds, r.prepare_seconds + r.model_seconds);
  }
  EXPECT_EQ(rep.summary.no_answer, silent);
  EXPECT_NEAR(rep.summary.mean_score, sum / static_cast<double>(scored), 1e-12);
  EXPECT_NEAR(rep.summary.mean_score, 8.0 / 20.0, 1e-12);
  EXPECT_LE(conservation_error(rep), 1e-12);
  EXPECT_EQ(rep.summary.tasks.at("arith").metric_value, rep.summary.mean_score);
  EXPECT_EQ(rep.failures(), 0u);
}

TEST(RunEval, TransportFailuresAreUnscored) {
  const auto xs = arithmetic(14);
  MockClient flaky([](const PromptPayload& p) -> std::string {
    const int i = question_number(p);
    if (i % 7 == 3) throw Error(ErrorCode::TransportError, "connection reset");
    return "Answer: " + std::to_string(i + 1);
  });
  TickClock clock;
  const RunReport rep = run_eval(xs, math_catalog(), ModalityMode::Text, PromptStyle::CoT, flaky, quick_config(), {}, clock);
  std::size_t failed = 0;
  double lat = 0;
  for (const auto& r : rep.records) {
    lat += r.latency_seconds;
    if (r.status == kStatusTransport) {
      ++failed;
      EXPECT_FALSE(r.scored());
      EXPECT_EQ(r.retries, 2);
    }
  }
  EXPECT_EQ(failed, 2u);
  EXPECT_EQ(rep.failures(), 2u);
  EXPECT_EQ(rep.summary.unscored, 2u);
  EXPECT_DOUBLE_EQ(rep.summary.mean_score, 1.0);
  EXPECT_EQ(rep.summary.total_latency_seconds, lat);
  EXPECT_LE(conservation_error(rep), 1e-12);
}

TEST(RunEval, RecordsRetriesOfTransientFailures) {
  const auto xs = arithmetic(1);
  auto mock = MockClient::fixed("Answer: 1");
  mock->fail_next(2);
  TickClock clock;
  const RunReport rep = run_eval(xs, math_catalog(), ModalityMode::Text, PromptStyle::Direct, *mock, quick_config(), {}, clock);
  EXPECT_EQ(rep.records[0].retries, 2);
  EXPECT_EQ(rep.records[0].status, kStatusOk);
}

TEST(RunEval, AuthErrorAbortsTheRun) {
  const auto xs = arithmetic(6);
  MockClient denied([](const PromptPayload&) -> std::string { throw Error(ErrorCode::AuthError, "bad key"); });
  TickClock clock;
  expect_error(ErrorCode::AuthError, [&] {
    run_eval(xs, math_catalog(), ModalityMode::Text, PromptStyle::Direct, denied, quick_config(), {}, clock);
  });
}

TEST(RunEval, IncompatibleExamplesAreRecorded) {
  const auto xs = arithmetic(4);
  auto mock = MockClient::fixed("Answer: 1");
  TickClock clock;
  const RunReport rep = run_eval(xs, math_catalog(), ModalityMode::Semi, PromptStyle::Direct, *mock, quick_config(), {}, clock);
  EXPECT_EQ(rep.summary.incompatible, 4u);
  EXPECT_EQ(rep.summary.scored, 0u);
  EXPECT_EQ(rep.failures(), 0u);
  EXPECT_EQ(mock->calls(), 0);
}

TEST(RunEval, ImageModesRecordAssets) {
  const auto xs = arithmetic(3);
  auto mock = MockClient::echo();
  TickClock clock;
  TempDir dir;
  EvalConfig cfg = quick_config();
  cfg.save_assets = true;
  const RunReport rep = run_eval(xs, math_catalog(), ModalityMode::PEAPFast, PromptStyle::Direct, *mock, cfg, dir.path(), clock);
  for (const auto& r : rep.records) {
    ASSERT_EQ(r.assets.size(), 1u);
    EXPECT_EQ(r.assets[0].at("role"), "prompt");
    EXPECT_LT(r.assets[0].at("retained").get<std::size_t>(), r.assets[0].at("patches").get<std::size_t>());
    EXPECT_TRUE(std::filesystem::exists(dir.path() / r.assets[0].at("file").get<std::string>()));
    EXPECT_FALSE(r.prerender_sha256.empty());
  }
}

TEST(RunEval, ClassificationMccAndCodePassAtOne) {
  TaskCatalog cat;
  cat.add(TaskSpec::from_json({{"kind", "classification"}, {"metric", "mcc"}, {"positive_label", "yes"}}, "judge"));
  cat.add(TaskSpec::from_json({{"kind", "code"}}, "prog"));
  // gold: yes yes no no yes; predicted: yes no no yes yes
  const std::vector<std::pair<std::string, std::string>> items = {
      {"yes", "yes"}, {"yes", "no"}, {"no", "no"}, {"no", "yes"}, {"yes", "yes"}};
  std::vector<Example> xs;
  for (std::size_t i = 0; i < items.size(); ++i) {
    xs.push_back(parse_example({{"id", "j" + std::to_string(i)},
                                {"task", "judge"},
                                {"input", "Case " + std::to_string(i) + ": " + items[i].second},
                                {"choices", {"yes", "no"}},
                                {"references", {items[i].first}}},
                               i + 1, {}, 0));
  }
  xs.push_back(parse_example({{"id", "p0"},
                              {"task", "prog"},
                              {"input", "Write add(a, b). PASS"},
                              {"references", {"assert add(1, 2) == 3"}}},
                             9, {}, 0));
  xs.push_back(parse_example({{"id", "p1"},
                              {"task", "prog"},
                              {"input", "Write add(a, b). FAIL"},
                              {"references", {"unused"}},
                              {"meta", {{"tests", {"assert add(2, 2) == 4"}}}}},
                             10, {}, 0));
  MockClient answers([](const PromptPayload& p) -> std::string {
    const std::string t = p.text();
    if (t.find("PASS") != std::string::npos) return "```python\ndef add(a, b):\n    return a + b\n```";
    if (t.find("FAIL") != std::string::npos) return "```python\ndef add(a, b):\n    return a - b\n```";
    return "Answer: " + t.substr(t.find(": ") + 2, t.find('\n') - t.find(": ") - 2);
  });
  TickClock clock;
  EvalConfig cfg = quick_config();
  cfg.sandbox.timeout = std::chrono::milliseconds(5000);
  const RunReport rep = run_eval(xs, cat, ModalityMode::Text, PromptStyle::Direct, answers, cfg, {}, clock);
  const ConfusionCounts counts{2, 1, 1, 1};
  EXPECT_NEAR(*rep.summary.tasks.at("judge").metric_value, matthews_corr(counts), 1e-12);
  EXPECT_EQ(*rep.records[5].score, 1.0);
  EXPECT_EQ(*rep.records[6].score, 0.0);
  EXPECT_DOUBLE_EQ(*rep.summary.tasks.at("prog").metric_value, 0.5);
}

TEST(RunEval, ResumeIsByteIdentical) {
  const auto xs = arithmetic(20);
  TempDir full, resumed;
  {
    auto client = grader();
    TickClock clock;
    run_eval(xs, math_catalog(), ModalityMode::PEAP, PromptStyle::Direct, *client, quick_config(), full.path(), clock);
  }
  std::ifstream in(full / "records.jsonl");
  std::string line, partial;
  for (int i = 0; i < 8 && std::getline(in, line); ++i) partial += line + "\n";
  std::getline(in, line);
  partial += line.substr(0, line.size() / 2);
  resumed.write("records.jsonl", partial);

  auto client = grader();
  TickClock clock;
  const RunReport rep =
      run_eval(xs, math_catalog(), ModalityMode::PEAP, PromptStyle::Direct, *client, quick_config(), resumed.path(), clock);
  EXPECT_EQ(client->calls(), 12);
  EXPECT_EQ(slurp(resumed / "records.jsonl"), slurp(full / "records.jsonl"));
  EXPECT_EQ(slurp(resumed / "summary.json"), slurp(full / "summary.json"));
  EXPECT_LE(conservation_error(read_report(resumed.path())), 1e-12);
}

TEST(RunEval, ResumeRejectsAnotherRun) {
  const auto xs = arithmetic(3);
  TempDir dir;
  auto client = grader();
  TickClock clock;
  run_eval(xs, math_catalog(), ModalityMode::Text, PromptStyle::Direct, *client, quick_config(), dir.path(), clock);
  expect_error(ErrorCode::InvalidConfig, [&] {
    run_eval(xs, math_catalog(), ModalityMode::Text, PromptStyle::CoT, *client, quick_config(), dir.path(), clock);
  });
}

TEST(Reports, RoundTripThroughFiles) {
  const auto xs = arithmetic(5);
  TempDir dir;
  auto client = grader();
  TickClock clock;
  const RunReport rep =
      run_eval(xs, math_catalog(), ModalityMode::Text, PromptStyle::Direct, *client, quick_config(), dir.path(), clock);
  const RunReport back = read_report(dir.path());
  ASSERT_EQ(back.records.size(), rep.records.size());
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    EXPECT_EQ(back.records[i].to_json(), rep.records[i].to_json());
  }
  EXPECT_EQ(back.summary.to_json(), rep.summary.to_json());
  EXPECT_EQ(read_summary(dir / "summary.json").run_id, rep.summary.run_id);
  EXPECT_EQ(rep.summary.run_id.size(), 16u);
}

TEST(Overhead, PairedRunsFollowThePercentIncrease) {
  RunSummary text = summary_of(ModalityMode::Text, PromptStyle::Direct, column(kModeScores, 0), column(kModeSeconds, 0));
  RunSummary peap = summary_of(ModalityMode::PEAP, PromptStyle::Direct, column(kModeScores, 1), column(kModeSeconds, 1));
  attach_overhead(peap, text);
  double t = 0, p = 0;
  for (const auto& row : kModeSeconds) t += row[0], p += row[1];
  EXPECT_NEAR(*peap.overhead_pct, 100.0 * (p - t) / t, 1e-9);
  expect_error(ErrorCode::MismatchedRuns, [&] { attach_overhead(text, peap); });
  RunSummary other = text;
  other.dataset_sha256 = "different";
  expect_error(ErrorCode::MismatchedRuns, [&] { attach_overhead(peap, other); });
}

std::vector<RunSummary> table4_runs() {
  return {summary_of(ModalityMode::Text, PromptStyle::Direct, column(kStyleScores, 0)),
          summary_of(ModalityMode::PEAP, PromptStyle::Direct, column(kStyleScores, 1)),
          summary_of(ModalityMode::Text, PromptStyle::CoT, column(kStyleScores, 2)),
          summary_of(ModalityMode::PEAP, PromptStyle::CoT, column(kStyleScores, 3))};
}

TEST(CompareRuns, DirectVersusCotImprovements) {
  const ComparisonTable t = compare_runs(table4_runs());
  EXPECT_NEAR(*t.value("Overall", "CoT-Direct (Text)"), 0.30, 0.01);
  EXPECT_NEAR(*t.value("Overall", "CoT-Direct (PEAP)"), 2.58, 0.01);
  EXPECT_NEAR(*t.value("Overall", "Direct Text"), 64.92, 0.01);
  EXPECT_NEAR(*t.value("Overall", "CoT PEAP"), 60.14, 0.01);
  const double improve_text[] = {1.25, 13.34, -4.00, 3.35, -6.13, 0.72, 1.57, -7.69};
  const double improve_peap[] = {-0.98, 24.79, -4.00, -1.87, -1.22, 4.34, -0.47, 0.00};
  for (std::size_t i = 0; i < kSuperGlueTasks.size(); ++i) {
    EXPECT_NEAR(*t.value(kSuperGlueTasks[i], "CoT-Direct (Text)"), improve_text[i], 0.005) << kSuperGlueTasks[i];
    EXPECT_NEAR(*t.value(kSuperGlueTasks[i], "CoT-Direct (PEAP)"), improve_peap[i], 0.005) << kSuperGlueTasks[i];
  }
}

TEST(CompareRuns, ModeGapsAndOverheads) {
  const std::vector<RunSummary> runs = {
      summary_of(ModalityMode::Text, PromptStyle::Direct, column(kModeScores, 0), column(kModeSeconds, 0)),
      summary_of(ModalityMode::PEAP, PromptStyle::Direct, column(kModeScores, 1), column(kModeSeconds, 1)),
      summary_of(ModalityMode::PEAPFast, PromptStyle::Direct, column(kModeScores, 2), column(kModeSeconds, 2))};
  const ComparisonTable t = compare_runs(runs);
  EXPECT_NEAR(*t.value("Overall", "Direct Text"), 64.74, 0.01);
  EXPECT_NEAR(*t.value("Overall", "Direct PEAP"), 59.40, 0.01);
  EXPECT_NEAR(*t.value("Overall", "Direct PEAPFast"), 58.23, 0.01);
  EXPECT_NEAR(*t.value("Overall", "PEAPFast-PEAP (Direct)"), -1.17, 0.01);
  EXPECT_NEAR(*t.value("CB", "Overhead PEAP (Direct)"), 175.00, 0.01);
  EXPECT_NEAR(*t.value("CB", "Overhead PEAPFast (Direct)"), 87.50, 0.01);
  EXPECT_NEAR(*t.value("COPA", "Overhead PEAP (Direct)"), -2.56, 0.01);
  double text = 0, fast = 0;
  for (const auto& row : kModeSeconds) text += row[0], fast += row[2];
  EXPECT_NEAR(*t.value("Overall", "Overhead PEAPFast (Direct)"), 100.0 * (fast - text) / text, 1e-9);
  EXPECT_THROW(t.value("Overall", "Overhead Text (Direct)"), Error);

  const std::string csv = t.to_csv();
  EXPECT_NE(csv.find("CB,67.70,40.77,39.57"), std::string::npos);
  EXPECT_NE(csv.find("175.00"), std::string::npos);
  const std::string md = t.to_markdown();
  EXPECT_EQ(md.rfind("| Task | Direct Text | Direct PEAP | Direct PEAPFast |", 0), 0u);
  EXPECT_EQ(t.to_json().at("rows").back().at("task"), "Overall");
}

TEST(CompareRuns, IdenticalRunsHaveZeroDeltas) {
  const auto scores = column(kModeScores, 0);
  const ComparisonTable t = compare_runs({summary_of(ModalityMode::Text, PromptStyle::Direct, scores),
                                          summary_of(ModalityMode::PEAP, PromptStyle::Direct, scores),
                                          summary_of(ModalityMode::Text, PromptStyle::CoT, scores),
                                          summary_of(ModalityMode::PEAP, PromptStyle::CoT, scores)});
  for (const auto& row : t.rows) {
    for (const char* col : {"PEAP-Text (Direct)", "PEAP-Text (CoT)", "CoT-Direct (Text)", "CoT-Direct (PEAP)"}) {
      EXPECT_EQ(*t.value(row.task, col), 0.0);
    }
  }
  EXPECT_EQ(t.to_csv().find("-0.00"), std::string::npos);
}

TEST(CompareRuns, MismatchedRuns) {
  auto runs = table4_runs();
  runs[1].model = "another";
  expect_error(ErrorCode::MismatchedRuns, [&] { compare_runs(runs); });
  runs = table4_runs();
  runs[2].dataset_sha256 = "another";
  expect_error(ErrorCode::MismatchedRuns, [&] { compare_runs(runs); });
  runs = table4_runs();
  runs.push_back(runs.front());
  expect_error(ErrorCode::MismatchedRuns, [&] { compare_runs(runs); });
  expect_error(ErrorCode::MismatchedRuns, [&] { compare_runs({}); });
}

TEST(Suite, MockRunProducesAllReports) {
  TempDir dir;
  const auto cfg_path = std::filesystem::path(PEAP_TEST_DATA) / "mock_config.json";
  RunConfig cfg = RunConfig::load(cfg_path);
  cfg.out = dir / "out";
  cfg.styles = {PromptStyle::Direct, PromptStyle::CoT};
  const auto xs = load_dataset(cfg.dataset, cfg.tasks, cfg.eval.seed);
  auto client = make_client(cfg.endpoint);
  auto clock = make_clock(cfg.clock);
  const SuiteResult res = run_suite(cfg, xs, *client, *clock);
  ASSERT_EQ(res.reports.size(), 8u);
  for (const auto& rep : res.reports) {
    ASSERT_EQ(rep.records.size(), xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_EQ(rep.records[i].id, xs[i].id);
    EXPECT_LE(conservation_error(rep), 1e-12);
    const auto dir_name = run_dir_name(rep.summary.mode, rep.summary.style);
    EXPECT_TRUE(std::filesystem::exists(cfg.out / dir_name / "summary.json"));
    if (rep.summary.mode != ModalityMode::Text) EXPECT_TRUE(rep.summary.overhead_pct.has_value());
  }
  EXPECT_EQ(res.failures(), 0u);
  EXPECT_EQ(res.records(), 8 * xs.size());
  for (const char* f : {"comparison.csv", "comparison.md", "comparison.json"}) {
    EXPECT_TRUE(std::filesystem::exists(cfg.out / f)) << f;
  }
  EXPECT_NO_THROW(res.comparison.value("Overall", "Overhead PEAP (CoT)"));
}

TEST(RunConfig, UnknownKeysAndBadValuesAreRejected) {
  const auto base = nlohmann::json::parse(slurp(std::filesystem::path(PEAP_TEST_DATA) / "mock_config.json"));
  auto j = base;
  j["temprature"] = 0.5;
  expect_error(ErrorCode::InvalidConfig, [&] { RunConfig::from_json(j, PEAP_TEST_DATA); });
  j = base;
  j["modes"] = nlohmann::json::array();
  expect_error(ErrorCode::InvalidConfig, [&] { RunConfig::from_json(j, PEAP_TEST_DATA).validate(); });
  j = base;
  j["dataset"] = "missing.jsonl";
  expect_error(ErrorCode::InvalidConfig, [&] { RunConfig::from_json(j, PEAP_TEST_DATA).validate(); });
  const RunConfig ok = RunConfig::from_json(base, PEAP_TEST_DATA);
  EXPECT_NO_THROW(ok.validate());
  EXPECT_EQ(ok.modes.size(), 4u);
  EXPECT_EQ(ok.eval.concurrency, 2u);
  EXPECT_TRUE(ok.tasks.contains("cola"));
}

}  // namespace
}  // namespace peap::harness

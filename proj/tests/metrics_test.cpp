#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "peap/error.hpp"
#include "peap/metrics.hpp"

namespace peap {
namespace {

template <typename F>
void expect_error(ErrorCode code, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

// Sample correlation of two 0/1 vectors, computed from the raw vectors.
double brute_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

void label_vectors(const ConfusionCounts& c, std::vector<double>& pred, std::vector<double>& gold) {
  auto push = [&](std::uint64_t n, double p, double g) {
    for (std::uint64_t i = 0; i < n; ++i) pred.push_back(p), gold.push_back(g);
  };
  push(c.tp, 1, 1);
  push(c.tn, 0, 0);
  push(c.fp, 1, 0);
  push(c.fn, 0, 1);
}

std::string random_sentence(std::mt19937_64& gen) {
  static const char* vocab[] = {"the", "cat", "sat", "on", "mat", "a", "dog", "ran", "fast", "Cat"};
  std::string s;
  const int n = static_cast<int>(gen() % 9);
  for (int i = 0; i < n; ++i) s += std::string(i ? " " : "") + vocab[gen() % 10];
  return s;
}

TEST(RougeL, Fixtures) {
  EXPECT_DOUBLE_EQ(rouge_l("the cat sat", "the cat sat"), 1.0);
  EXPECT_DOUBLE_EQ(rouge_l("alpha beta", "gamma delta"), 0.0);
  EXPECT_NEAR(rouge_l("the cat", "the cat sat on"), 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(rouge_l("the cat", "the cat sat on"), 0.6667, 1e-4);
  EXPECT_DOUBLE_EQ(rouge_l("", "anything"), 0.0);
  EXPECT_DOUBLE_EQ(rouge_l("The CAT", "the cat"), 1.0);
}

TEST(RougeL, SymmetricAndBounded) {
  std::mt19937_64 gen(1);
  for (int i = 0; i < 300; ++i) {
    const std::string a = random_sentence(gen), b = random_sentence(gen);
    const double ab = rouge_l(a, b);
    EXPECT_DOUBLE_EQ(ab, rouge_l(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(ExactMatch, Normalization) {
  EXPECT_EQ(exact_match("42", "42"), 1);
  EXPECT_EQ(exact_match("42.", " 42"), 1);
  EXPECT_EQ(exact_match("6", "six"), 0);
  EXPECT_EQ(exact_match("1,319", "1319"), 1);
  EXPECT_EQ(exact_match("42.0", "42"), 1);
  EXPECT_EQ(exact_match("+7", "7"), 1);
  EXPECT_EQ(exact_match("True", "true"), 1);
  EXPECT_EQ(exact_match("Paris!\"", "paris"), 1);
  EXPECT_EQ(normalize_answer("  3.50 "), "3.5");
  EXPECT_EQ(normalize_answer("1,234,567.00"), "1234567");
  EXPECT_EQ(normalize_answer("a,b"), "a,b");
}

TEST(Accuracy, Fixtures) {
  EXPECT_DOUBLE_EQ(accuracy({"a", "b"}, {"a", "b"}), 1.0);
  EXPECT_DOUBLE_EQ(accuracy({"a", "b"}, {"c", "d"}), 0.0);
  EXPECT_DOUBLE_EQ(accuracy({"a", "b", "c", "x"}, {"a", "b", "c", "d"}), 0.75);
  expect_error(ErrorCode::LengthMismatch, [] { accuracy({"a"}, {"a", "b"}); });
}

TEST(Mcc, Fixtures) {
  EXPECT_DOUBLE_EQ(matthews_corr({5, 5, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(matthews_corr({1, 1, 1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(matthews_corr({5, 0, 0, 0}), 0.0);
  std::vector<double> p, g;
  label_vectors({10, 8, 2, 4}, p, g);
  EXPECT_NEAR(matthews_corr({10, 8, 2, 4}), brute_pearson(p, g), 1e-12);
}

TEST(Mcc, EqualsPearsonOfLabelsOnRandomMatrices) {
  std::mt19937_64 gen(2);
  int checked = 0;
  while (checked < 100) {
    const ConfusionCounts c{gen() % 40, gen() % 40, gen() % 40, gen() % 40};
    std::vector<double> p, g;
    label_vectors(c, p, g);
    if ((c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn) == 0) {
      EXPECT_EQ(matthews_corr(c), 0.0);
      continue;
    }
    EXPECT_NEAR(matthews_corr(c), brute_pearson(p, g), 1e-9);
    EXPECT_NEAR(matthews_corr(c), pearson(p, g), 1e-9);
    ++checked;
  }
}

TEST(Mcc, ScaleInvariant) {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 100; ++i) {
    const ConfusionCounts c{1 + gen() % 30, 1 + gen() % 30, 1 + gen() % 30, 1 + gen() % 30};
    const std::uint64_t k = 1 + gen() % 50;
    const double m = matthews_corr(c);
    EXPECT_NEAR(matthews_corr({c.tp * k, c.tn * k, c.fp * k, c.fn * k}), m, 1e-12);
    EXPECT_GE(m, -1.0);
    EXPECT_LE(m, 1.0);
  }
}

TEST(Confusion, FromVectors) {
  const ConfusionCounts c = ConfusionCounts::from({true, true, false, false, true}, {true, false, false, true, true});
  EXPECT_EQ(c.tp, 2u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.tn, 1u);
  EXPECT_EQ(c.fn, 1u);
}

TEST(Pearson, Fixtures) {
  EXPECT_NEAR(pearson({1, 2, 3}, {1, 2, 3}), 1.0, 1e-12);
  EXPECT_NEAR(pearson({1, 2, 3}, {-1, -2, -3}), -1.0, 1e-12);
  // cov = 1.5, sx = 1, sy = sqrt(7/3).
  EXPECT_NEAR(pearson({1, 2, 3}, {1, 2, 4}), 1.5 / std::sqrt(7.0 / 3.0) / 1.0 / 1.0, 1e-12);
  EXPECT_NEAR(pearson({1, 2, 3}, {1, 2, 4}), 0.9820, 1e-4);
  expect_error(ErrorCode::DegenerateVariance, [] { pearson({1, 1, 1}, {1, 2, 3}); });
  expect_error(ErrorCode::DegenerateVariance, [] { pearson({1}, {2}); });
  expect_error(ErrorCode::LengthMismatch, [] { pearson({1, 2}, {1, 2, 3}); });
}

TEST(F1, Fixtures) {
  EXPECT_DOUBLE_EQ(f1_binary({true, false, true}, {true, false, true}), 1.0);
  EXPECT_DOUBLE_EQ(f1_binary({false, true}, {true, false}), 0.0);
  // TP=2, FP=1, FN=1.
  EXPECT_NEAR(f1_binary({true, true, true, false}, {true, true, false, true}), 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(f1_binary({false, false}, {false, false}), 0.0);
  expect_error(ErrorCode::LengthMismatch, [] { f1_binary({true}, {}); });
}

TEST(Overhead, TableFixtures) {
  EXPECT_NEAR(overhead_pct(8, 22), 175.00, 0.005);
  EXPECT_NEAR(overhead_pct(8, 15), 87.50, 0.005);
  EXPECT_NEAR(overhead_pct(39, 38), -2.56, 0.005);
  EXPECT_NEAR(overhead_pct(11, 36), 227.27, 0.005);
  EXPECT_DOUBLE_EQ(overhead_pct(3.5, 3.5), 0.0);
  expect_error(ErrorCode::NonpositiveBaseline, [] { overhead_pct(0, 1); });
  expect_error(ErrorCode::NonpositiveBaseline, [] { overhead_pct(-2, 1); });
}

TEST(Overhead, InvertsScaling) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> t(0.01, 1e4), x(-99, 500);
  for (int i = 0; i < 200; ++i) {
    const double base = t(gen), pct = x(gen);
    EXPECT_NEAR(overhead_pct(base, base * (1 + pct / 100)), pct, 1e-9);
  }
}

SandboxConfig fast_sandbox() {
  SandboxConfig c;
  c.timeout = std::chrono::milliseconds(1500);
  return c;
}

TEST(Sandbox, PassRaiseTimeout) {
  const SandboxPool pool(fast_sandbox());
  const std::string add = "def add(a, b):\n    return a + b\n";
  EXPECT_EQ(pass_at_1(add, {"assert add(2, 3) == 5", "assert add(-1, 1) == 0"}, pool), 1);
  EXPECT_EQ(pass_at_1(add, {"assert add(2, 3) == 6"}, pool), 0);
  EXPECT_EQ(pass_at_1("raise ValueError('boom')\n", {"assert True"}, pool), 0);
  const auto start = std::chrono::steady_clock::now();
  const SandboxResult r = pool.run("while True:\n    pass\n", {});
  const auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_FALSE(r.passed);
  EXPECT_TRUE(r.timed_out);
  EXPECT_LT(elapsed, std::chrono::seconds(5));
}

TEST(Sandbox, CapturesStderr) {
  const SandboxPool pool(fast_sandbox());
  const SandboxResult r = pool.run("import sys\nsys.stderr.write('diagnostic text')\nsys.exit(3)\n", {});
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.stderr_tail.find("diagnostic text"), std::string::npos);
}

TEST(Sandbox, MissingInterpreter) {
  SandboxConfig c = fast_sandbox();
  c.interpreter = "peap-no-such-interpreter";
  const SandboxPool pool(c);
  expect_error(ErrorCode::SandboxUnavailable, [&] { pass_at_1("x = 1", {}, pool); });
}

TEST(Sandbox, BoundsConcurrency) {
  SandboxConfig c = fast_sandbox();
  c.timeout = std::chrono::milliseconds(5000);
  c.max_concurrent = 1;
  const SandboxPool pool(c);
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::thread> threads;
  for (int i = 0; i < 3; ++i) threads.emplace_back([&] { pool.run("import time\ntime.sleep(0.3)\n", {}); });
  for (auto& t : threads) t.join();
  EXPECT_GE(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(900));
}

TEST(Sandbox, VisualizationNeedsAFigure) {
  SandboxConfig c = fast_sandbox();
  c.timeout = std::chrono::milliseconds(20000);
  const SandboxPool pool(c);
  const SandboxResult probe = pool.run("import matplotlib\n", {});
  if (!probe.passed) GTEST_SKIP() << "matplotlib not installed";
  EXPECT_EQ(visualization_pass("import matplotlib.pyplot as plt\nplt.plot([1, 2, 3])\n", {}, pool), 1);
  EXPECT_EQ(visualization_pass("x = 1\n", {}, pool), 0);
}

TEST(MetricReport, Shape) {
  const auto j = metric_report("accuracy", 0.5, {1.0, 0.0});
  EXPECT_EQ(j.at("metric"), "accuracy");
  EXPECT_EQ(j.at("value"), 0.5);
  EXPECT_EQ(j.at("n"), 2);
  EXPECT_EQ(j.at("per_example").size(), 2u);
}

}  // namespace
}  // namespace peap

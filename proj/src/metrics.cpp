#include "peap/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <sstream>

#include "peap/error.hpp"

namespace peap {

ConfusionCounts ConfusionCounts::from(const std::vector<bool>& preds, const std::vector<bool>& golds) {
  if (preds.size() != golds.size()) throw Error(ErrorCode::LengthMismatch, "prediction and gold counts differ");
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] && golds[i]) ++c.tp;
    else if (!preds[i] && !golds[i]) ++c.tn;
    else if (preds[i]) ++c.fp;
    else ++c.fn;
  }
  return c;
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto c = word_tokens(candidate);
  const auto r = word_tokens(reference);
  if (c.empty() || r.empty()) return 0.0;
  std::vector<std::size_t> prev(r.size() + 1, 0), cur(r.size() + 1, 0);
  for (std::size_t i = 1; i <= c.size(); ++i) {
    for (std::size_t j = 1; j <= r.size(); ++j) {
      cur[j] = c[i - 1] == r[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[r.size()]);
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(c.size());
  const double rec = lcs / static_cast<double>(r.size());
  return 2.0 * p * rec / (p + rec);
}

std::string normalize_answer(std::string_view text) {
  std::string s(text);
  auto is_space = [](unsigned char ch) { return std::isspace(ch) != 0; };
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && is_space(static_cast<unsigned char>(s[start]))) ++start;
  s.erase(0, start);
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  while (!s.empty() && std::string_view(".,;:!?\"'").find(s.back()) != std::string_view::npos) s.pop_back();
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.pop_back();

  static const std::regex grouped(R"(^[+-]?\d{1,3}(,\d{3})+(\.\d+)?$)");
  if (std::regex_match(s, grouped)) s.erase(std::remove(s.begin(), s.end(), ','), s.end());
  static const std::regex number(R"(^[+-]?\d+(\.\d+)?$)");
  if (std::regex_match(s, number)) {
    if (s.front() == '+') s.erase(0, 1);
    if (s.find('.') != std::string::npos) {
      while (s.back() == '0') s.pop_back();
      if (s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
  }
  return s;
}

int exact_match(std::string_view pred, std::string_view gold) {
  return normalize_answer(pred) == normalize_answer(gold) ? 1 : 0;
}

double accuracy(const std::vector<std::string>& preds, const std::vector<std::string>& golds) {
  if (preds.size() != golds.size()) throw Error(ErrorCode::LengthMismatch, "prediction and gold counts differ");
  if (preds.empty()) throw Error(ErrorCode::LengthMismatch, "accuracy over zero examples");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += static_cast<std::size_t>(exact_match(preds[i], golds[i]));
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double matthews_corr(const ConfusionCounts& c) {
  const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom);
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::LengthMismatch, "pearson inputs differ in length");
  if (xs.size() < 2) throw Error(ErrorCode::DegenerateVariance, "pearson needs at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::DegenerateVariance, "pearson input has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double f1_binary(const std::vector<bool>& preds, const std::vector<bool>& golds) {
  const ConfusionCounts c = ConfusionCounts::from(preds, golds);
  const double p = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  const double r = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

double overhead_pct(double t_text, double t_method) {
  if (!(t_text > 0.0)) throw Error(ErrorCode::NonpositiveBaseline, "text-mode time must be positive");
  return 100.0 * (t_method - t_text) / t_text;
}

int pass_at_1(std::string_view program, const std::vector<std::string>& tests, const SandboxPool& pool) {
  return pool.run(program, tests).passed ? 1 : 0;
}

int visualization_pass(std::string_view program, const std::vector<std::string>& tests, const SandboxPool& pool) {
  static constexpr std::string_view epilogue =
      "import os as _os\n"
      "import matplotlib.pyplot as _plt\n"
      "if _plt.get_fignums():\n"
      "    _plt.savefig('__peap_figure.png')\n"
      "assert _os.path.exists('__peap_figure.png') and _os.path.getsize('__peap_figure.png') > 0\n";
  return pool.run(program, tests, epilogue).passed ? 1 : 0;
}

nlohmann::json metric_report(std::string_view metric, double value, const std::vector<double>& per_example) {
  return {{"metric", metric}, {"value", value}, {"n", per_example.size()}, {"per_example", per_example}};
}

}  // namespace peap

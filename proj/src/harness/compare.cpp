#include "peap/harness/compare.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "peap/error.hpp"
#include "peap/metrics.hpp"

namespace peap::harness {

namespace {

struct Cell {
  std::optional<double> score;  // percent
  double latency = 0.0;
  bool present = false;  // run exists and scored at least one record here
};

std::string fmt(const std::optional<double>& v) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", std::abs(*v) < 0.005 ? 0.0 : *v);
  return buf;
}

std::optional<double> diff(const std::optional<double>& a, const std::optional<double>& b) {
  if (!a || !b) return std::nullopt;
  return *a - *b;
}

std::optional<double> overhead(const Cell& text, const Cell& method) {
  if (!text.present || !method.present || !(text.latency > 0)) return std::nullopt;
  return overhead_pct(text.latency, method.latency);
}

}  // namespace

std::string display_name(ModalityMode mode) {
  switch (mode) {
    case ModalityMode::Text: return "Text";
    case ModalityMode::PEAP: return "PEAP";
    case ModalityMode::Semi: return "Semi";
    case ModalityMode::PEAPFast: return "PEAPFast";
  }
  return "?";
}

std::string display_name(PromptStyle style) { return style == PromptStyle::CoT ? "CoT" : "Direct"; }

std::optional<double> ComparisonTable::value(const std::string& task, const std::string& column) const {
  std::size_t c = 0;
  while (c < columns.size() && columns[c] != column) ++c;
  if (c == columns.size()) throw Error(ErrorCode::InvalidConfig, "no column '" + column + "'");
  for (const auto& row : rows) {
    if (row.task == task) return row.values[c];
  }
  throw Error(ErrorCode::InvalidConfig, "no row '" + task + "'");
}

std::string ComparisonTable::to_csv() const {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
  };
  std::ostringstream out;
  out << "task";
  for (const auto& c : columns) out << ',' << quote(c);
  out << '\n';
  for (const auto& row : rows) {
    out << quote(row.task);
    for (const auto& v : row.values) out << ',' << fmt(v);
    out << '\n';
  }
  return out.str();
}

std::string ComparisonTable::to_markdown() const {
  std::ostringstream out;
  out << "| Task |";
  for (const auto& c : columns) out << ' ' << c << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < columns.size(); ++i) out << "---:|";
  out << '\n';
  for (const auto& row : rows) {
    out << "| " << row.task << " |";
    for (const auto& v : row.values) out << ' ' << (v ? fmt(v) : "-") << " |";
    out << '\n';
  }
  return out.str();
}

nlohmann::json ComparisonTable::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json vals = nlohmann::json::object();
    for (std::size_t c = 0; c < columns.size(); ++c) {
      vals[columns[c]] = row.values[c] ? nlohmann::json(*row.values[c]) : nlohmann::json(nullptr);
    }
    rows_json.push_back({{"task", row.task}, {"values", vals}});
  }
  return {{"columns", columns}, {"rows", rows_json}};
}

ComparisonTable compare_runs(const std::vector<RunSummary>& runs) {
  if (runs.empty()) throw Error(ErrorCode::MismatchedRuns, "no runs to compare");
  std::map<std::pair<PromptStyle, ModalityMode>, const RunSummary*> index;
  for (const auto& r : runs) {
    if (r.dataset_sha256 != runs.front().dataset_sha256) {
      throw Error(ErrorCode::MismatchedRuns, "runs were made on different datasets");
    }
    if (r.model != runs.front().model) throw Error(ErrorCode::MismatchedRuns, "runs used different models");
    if (!index.emplace(std::pair{r.style, r.mode}, &r).second) {
      throw Error(ErrorCode::MismatchedRuns,
                  "duplicate run for " + display_name(r.mode) + " / " + display_name(r.style));
    }
  }

  std::vector<std::string> task_names;
  {
    std::set<std::string> seen;
    for (const auto& r : runs) {
      for (const auto& [name, agg] : r.tasks) {
        if (seen.insert(name).second) task_names.push_back(name);
      }
    }
  }

  // cell(task, style, mode); task "" = overall
  auto cell = [&](const std::string& task, PromptStyle style, ModalityMode mode) {
    Cell c;
    auto it = index.find({style, mode});
    if (it == index.end()) return c;
    const RunSummary& r = *it->second;
    if (task.empty()) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& [name, agg] : r.tasks) {
        if (!agg.metric_value) continue;
        sum += *agg.metric_value;
        ++n;
      }
      if (n) c.score = 100.0 * sum / static_cast<double>(n);
      c.latency = r.total_latency_seconds;
      c.present = true;
    } else if (auto t = r.tasks.find(task); t != r.tasks.end()) {
      if (t->second.metric_value) c.score = 100.0 * *t->second.metric_value;
      c.latency = t->second.total_latency_seconds;
      c.present = t->second.scored > 0;
    }
    return c;
  };
  // Overall overhead sums latencies over the tasks both runs scored.
  auto overhead_of = [&](const std::string& task, PromptStyle style, ModalityMode mode) -> std::optional<double> {
    if (!task.empty()) return overhead(cell(task, style, ModalityMode::Text), cell(task, style, mode));
    Cell text, method;
    for (const auto& t : task_names) {
      const Cell a = cell(t, style, ModalityMode::Text), b = cell(t, style, mode);
      if (!a.present || !b.present) continue;
      text.present = method.present = true;
      text.latency += a.latency;
      method.latency += b.latency;
    }
    return overhead(text, method);
  };

  using Getter = std::function<std::optional<double>(const std::string&)>;
  std::vector<std::pair<std::string, Getter>> spec;
  for (PromptStyle style : kAllStyles) {
    for (ModalityMode mode : kAllModes) {
      if (!index.count({style, mode})) continue;
      spec.emplace_back(display_name(style) + " " + display_name(mode),
                        [=](const std::string& t) { return cell(t, style, mode).score; });
    }
  }
  for (PromptStyle style : kAllStyles) {
    const std::string s = display_name(style);
    if (index.count({style, ModalityMode::Text}) && index.count({style, ModalityMode::PEAP})) {
      spec.emplace_back("PEAP-Text (" + s + ")", [=](const std::string& t) {
        return diff(cell(t, style, ModalityMode::PEAP).score, cell(t, style, ModalityMode::Text).score);
      });
    }
    if (index.count({style, ModalityMode::PEAP}) && index.count({style, ModalityMode::PEAPFast})) {
      spec.emplace_back("PEAPFast-PEAP (" + s + ")", [=](const std::string& t) {
        return diff(cell(t, style, ModalityMode::PEAPFast).score, cell(t, style, ModalityMode::PEAP).score);
      });
    }
  }
  for (ModalityMode mode : kAllModes) {
    if (index.count({PromptStyle::Direct, mode}) && index.count({PromptStyle::CoT, mode})) {
      spec.emplace_back("CoT-Direct (" + display_name(mode) + ")", [=](const std::string& t) {
        return diff(cell(t, PromptStyle::CoT, mode).score, cell(t, PromptStyle::Direct, mode).score);
      });
    }
  }
  for (PromptStyle style : kAllStyles) {
    if (!index.count({style, ModalityMode::Text})) continue;
    for (ModalityMode mode : kAllModes) {
      if (mode == ModalityMode::Text || !index.count({style, mode})) continue;
      spec.emplace_back("Overhead " + display_name(mode) + " (" + display_name(style) + ")",
                        [=](const std::string& t) {
                          return overhead_of(t, style, mode);
                        });
    }
  }

  ComparisonTable table;
  for (const auto& [name, get] : spec) table.columns.push_back(name);
  auto make_row = [&](const std::string& label, const std::string& key) {
    ComparisonTable::Row row;
    row.task = label;
    for (const auto& [name, get] : spec) row.values.push_back(get(key));
    return row;
  };
  for (const auto& t : task_names) table.rows.push_back(make_row(t, t));
  table.rows.push_back(make_row(std::string(kOverallRow), ""));
  return table;
}

}  // namespace peap::harness

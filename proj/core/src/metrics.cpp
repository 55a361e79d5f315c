// Copyright 2026 The UWE Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "uwe/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "uwe/error.hpp"
#include "uwe/random.hpp"

namespace uwe {
namespace {

std::vector<bool> relevance_mask(std::span<const std::uint32_t> ranking,
                                 std::span<const std::uint32_t> relevant) {
  if (relevant.empty()) throw ValidationError("relevant set is empty");
  std::size_t size = ranking.size();
  for (const auto r : relevant) size = std::max<std::size_t>(size, r + 1);
  std::vector<bool> mask(size, false);
  for (const auto r : relevant) mask[r] = true;
  return mask;
}

std::size_t distinct_count(std::span<const std::uint32_t> relevant) {
  std::vector<std::uint32_t> sorted(relevant.begin(), relevant.end());
  std::sort(sorted.begin(), sorted.end());
  return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

std::string percent(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.1f", 100.0 * value);
  return buffer;
}

}  // namespace

double average_precision(std::span<const std::uint32_t> ranking,
                         std::span<const std::uint32_t> relevant) {
  const auto mask = relevance_mask(ranking, relevant);
  double hits = 0.0;
  double sum = 0.0;
  for (std::size_t rank = 0; rank < ranking.size(); ++rank) {
    if (mask[ranking[rank]]) {
      hits += 1.0;
      sum += hits / static_cast<double>(rank + 1);
    }
  }
  return sum / static_cast<double>(distinct_count(relevant));
}

double rp_at_k(std::span<const std::uint32_t> ranking, std::span<const std::uint32_t> relevant,
               std::size_t k, RPrecisionMode mode) {
  if (k == 0) throw ValidationError("rp_at_k: k must be positive");
  const auto mask = relevance_mask(ranking, relevant);
  const std::size_t denominator = std::min(distinct_count(relevant), k);
  const std::size_t depth =
      std::min(mode == RPrecisionMode::kHitsOverMinRk ? k : denominator, ranking.size());
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < depth; ++rank) {
    if (mask[ranking[rank]]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(denominator);
}

TaskMetrics evaluate_task(const TaskSpec& task, const RankingMatrix& rankings,
                          const EvaluationOptions& options) {
  std::unordered_map<std::string_view, const RankedOutput*> rows;
  for (const auto& row : rankings.rows) rows.emplace(row.query_id, &row);

  TaskMetrics metrics;
  metrics.task = task.name;
  metrics.task_group = task.task_group.empty() ? task.name : task.task_group;
  double ap_sum = 0.0;
  double rp_sum = 0.0;
  std::vector<std::uint32_t> relevant;
  for (const auto& [query, targets] : task.qrels) {
    const auto it = rows.find(query);
    if (it == rows.end()) {
      throw ValidationError("task '" + task.name + "': query '" + query +
                            "' missing from the ranking matrix");
    }
    const auto& row = *it->second;
    if (row.ranking.size() != task.target_space->size()) {
      throw ValidationError("task '" + task.name + "': ranking for '" + query +
                            "' does not cover the target space");
    }
    relevant.clear();
    for (const auto& target : targets) {
      if (task.exclude_self && target == query) continue;
      const auto index = task.target_space->index_of(target);
      if (!index) {
        throw ValidationError("task '" + task.name + "': unknown target '" + target + "'");
      }
      relevant.push_back(static_cast<std::uint32_t>(*index));
    }
    if (relevant.empty()) continue;
    ap_sum += average_precision(row.ranking, relevant);
    rp_sum += rp_at_k(row.ranking, relevant, kDefaultPrecisionCutoff, options.rp_mode);
    ++metrics.queries;
  }
  if (metrics.queries == 0) {
    throw ValidationError("task '" + task.name + "' has no evaluable queries");
  }
  metrics.map = ap_sum / static_cast<double>(metrics.queries);
  metrics.rp_at_10 = rp_sum / static_cast<double>(metrics.queries);
  return metrics;
}

AggregateMetrics macro_aggregate(std::span<const TaskMetrics> per_task) {
  if (per_task.empty()) throw ValidationError("macro_aggregate needs at least one task");
  struct Group {
    double map = 0.0;
    double rp = 0.0;
    std::size_t count = 0;
  };
  // Groups in first-seen order.
  std::vector<std::string> order;
  std::map<std::string, Group> groups;
  for (const auto& task : per_task) {
    const auto& key = task.task_group.empty() ? task.task : task.task_group;
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.map += task.map;
    it->second.rp += task.rp_at_10;
    ++it->second.count;
  }
  AggregateMetrics out;
  for (const auto& key : order) {
    const auto& g = groups.at(key);
    out.map += g.map / static_cast<double>(g.count);
    out.rp_at_10 += g.rp / static_cast<double>(g.count);
  }
  out.groups = order.size();
  out.map /= static_cast<double>(out.groups);
  out.rp_at_10 /= static_cast<double>(out.groups);
  return out;
}

std::string metric_report_json(std::span<const TaskMetrics> per_task,
                               const AggregateMetrics& aggregate) {
  nlohmann::ordered_json doc;
  doc["per_task"] = nlohmann::ordered_json::object();
  for (const auto& task : per_task) {
    doc["per_task"][task.task] = {{"task_group", task.task_group},
                                  {"map", task.map},
                                  {"rp_at_10", task.rp_at_10},
                                  {"queries", task.queries}};
  }
  doc["task_avg"] = {{"map", aggregate.map},
                     {"rp_at_10", aggregate.rp_at_10},
                     {"groups", aggregate.groups}};
  return doc.dump(2);
}

std::string metric_report_table(std::span<const TaskMetrics> per_task,
                                const AggregateMetrics& aggregate) {
  std::size_t width = 8;
  for (const auto& task : per_task) width = std::max(width, task.task.size());
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s  %-*s  %6s  %6s  %7s\n", static_cast<int>(width),
                "task", static_cast<int>(width), "group", "MAP", "RP@10", "queries");
  out << line;
  for (const auto& task : per_task) {
    std::snprintf(line, sizeof(line), "%-*s  %-*s  %6s  %6s  %7zu\n",
                  static_cast<int>(width), task.task.c_str(), static_cast<int>(width),
                  task.task_group.c_str(), percent(task.map).c_str(),
                  percent(task.rp_at_10).c_str(), task.queries);
    out << line;
  }
  std::snprintf(line, sizeof(line), "%-*s  %-*s  %6s  %6s  %7s\n", static_cast<int>(width),
                "Task Avg", static_cast<int>(width), "", percent(aggregate.map).c_str(),
                percent(aggregate.rp_at_10).c_str(), "");
  out << line;
  return out.str();
}

// ---------------------------------------------------------------------------

std::pair<double, double> mean_and_standard_error(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return {mean, sd / std::sqrt(n)};
}

BenchReport bench_latency(const QueryRunner& run, std::span<const TaskSpec> tasks,
                          const BenchOptions& options) {
  using Clock = std::chrono::steady_clock;
  BenchReport report;
  report.warmup = options.warmup;
  report.measured = options.measured;
  report.seed = options.seed;

  std::vector<double> task_means;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& task = tasks[t];
    std::vector<std::size_t> queries;
    for (const auto& [query, targets] : task.qrels) {
      if (const auto index = task.query_space->index_of(query)) queries.push_back(*index);
    }
    if (queries.empty()) {
      for (std::size_t i = 0; i < task.query_space->size(); ++i) queries.push_back(i);
    }
    if (queries.empty()) throw ValidationError("task '" + task.name + "' has no queries");
    std::sort(queries.begin(), queries.end());

    Rng rng(options.seed, t);
    for (std::size_t i = queries.size(); i > 1; --i) {
      std::swap(queries[i - 1], queries[rng.uniform_index(i)]);
    }
    for (std::size_t i = 0; i < options.warmup; ++i) {
      run(task, queries[rng.uniform_index(queries.size())]);
    }

    TaskLatency latency;
    latency.task = task.name;
    latency.queries = std::min(options.measured, queries.size());
    latency.truncated = latency.queries < options.measured;
    std::vector<double> spans;
    spans.reserve(latency.queries);
    for (std::size_t i = 0; i < latency.queries; ++i) {
      const auto start = Clock::now();
      run(task, queries[i]);
      const auto stop = Clock::now();
      spans.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    }
    std::tie(latency.mean_ms, latency.se_ms) = mean_and_standard_error(spans);
    task_means.push_back(latency.mean_ms);
    report.tasks.push_back(std::move(latency));
  }
  std::tie(report.macro_mean_ms, report.macro_se_ms) = mean_and_standard_error(task_means);
  return report;
}

std::string BenchReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["warmup"] = warmup;
  doc["measured"] = measured;
  doc["seed"] = seed;
  doc["tasks"] = nlohmann::ordered_json::array();
  for (const auto& t : tasks) {
    doc["tasks"].push_back({{"task", t.task},
                            {"mean_ms", t.mean_ms},
                            {"se_ms", t.se_ms},
                            {"queries", t.queries},
                            {"truncated", t.truncated}});
  }
  doc["macro"] = {{"mean_ms", macro_mean_ms}, {"se_ms", macro_se_ms}};
  return doc.dump(2);
}

std::string BenchReport::to_table() const {
  std::size_t width = 5;
  for (const auto& t : tasks) width = std::max(width, t.task.size());
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s  %10s  %8s  %7s\n", static_cast<int>(width), "task",
                "latency_ms", "se_ms", "queries");
  out << line;
  for (const auto& t : tasks) {
    std::snprintf(line, sizeof(line), "%-*s  %10.3f  %8.3f  %7zu%s\n", static_cast<int>(width),
                  t.task.c_str(), t.mean_ms, t.se_ms, t.queries,
                  t.truncated ? "  (fewer than requested)" : "");
    out << line;
  }
  std::snprintf(line, sizeof(line), "%-*s  %10.3f  %8.3f\n", static_cast<int>(width), "macro",
                macro_mean_ms, macro_se_ms);
  out << line;
  std::snprintf(line, sizeof(line), "warmup=%zu measured=%zu seed=%llu\n", warmup, measured,
                static_cast<unsigned long long>(seed));
  out << line;
  return out.str();
}

}  // namespace uwe

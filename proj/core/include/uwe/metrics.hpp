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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "uwe/corpus.hpp"
#include "uwe/ranking.hpp"

namespace uwe {

/// Average precision of a ranking (target indices, best first) against a
/// non-empty relevant set.
double average_precision(std::span<const std::uint32_t> ranking,
                         std::span<const std::uint32_t> relevant);

enum class RPrecisionMode {
  kHitsOverMinRk,       // relevant in top k / min(R, k)
  kPrecisionAtMinRk,    // relevant in top min(R, k) / min(R, k)
};

inline constexpr std::size_t kDefaultPrecisionCutoff = 10;

double rp_at_k(std::span<const std::uint32_t> ranking,
               std::span<const std::uint32_t> relevant,
               std::size_t k = kDefaultPrecisionCutoff,
               RPrecisionMode mode = RPrecisionMode::kHitsOverMinRk);

struct TaskMetrics {
  std::string task;
  std::string task_group;
  double map = 0.0;
  double rp_at_10 = 0.0;
  std::size_t queries = 0;
};

struct EvaluationOptions {
  RPrecisionMode rp_mode = RPrecisionMode::kHitsOverMinRk;
};

/// Means of AP and RP@10 over the task's labelled queries. With
/// exclude_self, the query's own id is removed from its relevant set first;
/// queries left without relevant targets are skipped.
TaskMetrics evaluate_task(const TaskSpec& task, const RankingMatrix& rankings,
                          const EvaluationOptions& options = {});

struct AggregateMetrics {
  double map = 0.0;
  double rp_at_10 = 0.0;
  std::size_t groups = 0;
};

/// Averages tasks within a group first, then takes the unweighted mean over
/// groups.
AggregateMetrics macro_aggregate(std::span<const TaskMetrics> per_task);

/// {"per_task": {...}, "task_avg": {...}}, values in [0, 1].
std::string metric_report_json(std::span<const TaskMetrics> per_task,
                               const AggregateMetrics& aggregate);
/// Aligned table in percentage points with one decimal.
std::string metric_report_table(std::span<const TaskMetrics> per_task,
                                const AggregateMetrics& aggregate);

// ---------------------------------------------------------------------------
// Latency benchmark

struct BenchOptions {
  std::size_t warmup = 30;
  std::size_t measured = 100;
  std::uint64_t seed = 0;
};

struct TaskLatency {
  std::string task;
  double mean_ms = 0.0;
  double se_ms = 0.0;
  std::size_t queries = 0;
  bool truncated = false;  // fewer queries available than requested
};

struct BenchReport {
  std::vector<TaskLatency> tasks;
  double macro_mean_ms = 0.0;
  double macro_se_ms = 0.0;
  std::size_t warmup = 0;
  std::size_t measured = 0;
  std::uint64_t seed = 0;

  std::string to_json() const;
  std::string to_table() const;
};

/// Runs one query of a task, identified by its query-space index.
using QueryRunner = std::function<void(const TaskSpec&, std::size_t query_index)>;

/// Mean and standard error of single-query wall-clock latency per task, then
/// mean and standard error across task means. Queries run sequentially.
BenchReport bench_latency(const QueryRunner& run, std::span<const TaskSpec> tasks,
                          const BenchOptions& options = {});

/// Mean and sample standard error; zero SE for fewer than two values.
std::pair<double, double> mean_and_standard_error(std::span<const double> values);

}  // namespace uwe

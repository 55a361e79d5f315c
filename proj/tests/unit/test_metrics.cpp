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

#include <gtest/gtest.h>

#include <chrono>
#include <memory>
#include <thread>

#include <nlohmann/json.hpp>

#include "metric_oracle.hpp"
#include "support.hpp"
#include "uwe/error.hpp"
#include "uwe/metrics.hpp"

namespace uwe {
namespace {

using Ids = std::vector<std::uint32_t>;

TEST(AveragePrecision, HandValues) {
  EXPECT_EQ(average_precision(Ids{4, 1, 2}, Ids{4}), 1.0);
  EXPECT_NEAR(average_precision(Ids{0, 5, 1, 7}, Ids{0, 1}), (1 + 2.0 / 3) / 2, 1e-15);
  for (std::uint32_t k = 1; k <= 8; ++k) {
    Ids ranking(8);
    std::iota(ranking.begin(), ranking.end(), 0u);
    EXPECT_EQ(average_precision(ranking, Ids{k - 1}), 1.0 / k);
  }
  EXPECT_THROW(average_precision(Ids{0}, Ids{}), ValidationError);
}

TEST(RPrecision, HandValues) {
  Ids ranking(30);
  std::iota(ranking.begin(), ranking.end(), 0u);
  EXPECT_EQ(rp_at_k(ranking, Ids{9}), 1.0);
  EXPECT_EQ(rp_at_k(ranking, Ids{10}), 0.0);
  Ids twenty = {0, 1, 2, 3, 4, 5, 6};
  for (std::uint32_t i = 0; i < 13; ++i) twenty.push_back(15 + i);
  EXPECT_NEAR(rp_at_k(ranking, twenty), 0.7, 1e-15);
  EXPECT_NEAR(rp_at_k(ranking, Ids{2, 8, 20}), 2.0 / 3, 1e-15);
  // The strict reading only looks at the top min(R, 10).
  EXPECT_NEAR(rp_at_k(ranking, Ids{2, 8, 20}, 10, RPrecisionMode::kPrecisionAtMinRk), 1.0 / 3, 1e-15);
}

TEST(Metrics, MatchBruteForceOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto inst = testing::random_instance(rng, 30, 10);
    const Ids relevant(inst.relevant.begin(), inst.relevant.end());
    EXPECT_EQ(average_precision(inst.ranking, relevant), inst.average_precision());
    EXPECT_EQ(rp_at_k(inst.ranking, relevant), inst.rp_at(10));
  }
}

TEST(Metrics, DependOnlyOnRanking) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(20);
    std::vector<std::string> ids;
    std::vector<double> scores;
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back("t" + std::to_string(100 + i));
      scores.push_back(std::round(4 * (2 * rng.uniform01() - 1)) / 4);  // ties included
    }
    std::vector<double> transformed;
    for (double s : scores) transformed.push_back(std::exp(3 * s) + 7);
    const auto a = make_ranked_output("q", scores, ids);
    const auto b = make_ranked_output("q", transformed, ids);
    EXPECT_EQ(a.ranking, b.ranking);
    const Ids relevant = {0, static_cast<std::uint32_t>(n - 1)};
    EXPECT_EQ(average_precision(a.ranking, relevant), average_precision(b.ranking, relevant));
  }
}

TEST(Metrics, Bounds) {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = testing::random_instance(rng, 30, 10);
    const Ids relevant(inst.relevant.begin(), inst.relevant.end());
    for (const double v : {average_precision(inst.ranking, relevant), rp_at_k(inst.ranking, relevant),
                           rp_at_k(inst.ranking, relevant, 10, RPrecisionMode::kPrecisionAtMinRk)}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

std::shared_ptr<const TextSpace> ids_space(const std::string& prefix, std::size_t n) {
  std::vector<TextItem> items;
  for (std::size_t i = 0; i < n; ++i) items.push_back({prefix + std::to_string(i), "x"});
  return std::make_shared<const TextSpace>(prefix, SpaceRole::kGeneric, std::move(items));
}

RankingMatrix matrix_from(const TaskSpec& task, const std::vector<Ids>& rankings) {
  RankingMatrix m;
  m.task = task.name;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    m.rows.push_back({task.query_space->at(i).id, std::vector<double>(rankings[i].size(), 0.0), rankings[i]});
  }
  return m;
}

TEST(EvaluateTask, PerfectAndMean) {
  TaskSpec task;
  task.name = "demo";
  task.query_space = ids_space("q", 2);
  task.target_space = ids_space("y", 3);
  task.qrels = {{"q0", {"y1"}}, {"q1", {"y0", "y2"}}};
  const auto perfect = evaluate_task(task, matrix_from(task, {{1, 0, 2}, {2, 0, 1}}));
  EXPECT_EQ(perfect.map, 1.0);
  EXPECT_EQ(perfect.rp_at_10, 1.0);
  EXPECT_EQ(perfect.queries, 2u);
  const auto half = evaluate_task(task, matrix_from(task, {{1, 0, 2}, {1, 0, 2}}));
  // q1: relevant at ranks 2 and 3 -> (1/2 + 2/3) / 2.
  EXPECT_NEAR(half.map, (1.0 + (0.5 + 2.0 / 3) / 2) / 2, 1e-15);
}

TEST(EvaluateTask, MissingQueryRejected) {
  TaskSpec task;
  task.name = "demo";
  task.query_space = ids_space("q", 2);
  task.target_space = ids_space("y", 2);
  task.qrels = {{"q0", {"y1"}}, {"q1", {"y0"}}};
  auto m = matrix_from(task, {{1, 0}});
  EXPECT_THROW(evaluate_task(task, m), ValidationError);
}

TEST(EvaluateTask, ExcludeSelfDropsOwnId) {
  TaskSpec task;
  task.name = "sim";
  task.query_space = ids_space("s", 3);
  task.target_space = task.query_space;
  task.exclude_self = true;
  task.qrels = {{"s0", {"s0", "s2"}}, {"s1", {"s1"}}};
  const auto m = evaluate_task(task, matrix_from(task, {{2, 1, 0}, {0, 2, 1}}));
  EXPECT_EQ(m.queries, 1u);
  EXPECT_EQ(m.map, 1.0);
}

TEST(EvaluateTask, SingleLabelMapEqualsMrr) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    TaskSpec task;
    task.name = "one";
    const std::size_t nq = 1 + rng.uniform_index(15), nt = 1 + rng.uniform_index(25);
    task.query_space = ids_space("q", nq);
    task.target_space = ids_space("y", nt);
    task.label_type = LabelType::kOne;
    std::vector<Ids> rankings;
    for (std::size_t i = 0; i < nq; ++i) {
      task.qrels["q" + std::to_string(i)] = {"y" + std::to_string(rng.uniform_index(nt))};
      Ids r(nt);
      std::iota(r.begin(), r.end(), 0u);
      for (std::size_t k = nt; k > 1; --k) std::swap(r[k - 1], r[rng.uniform_index(k)]);
      rankings.push_back(r);
    }
    const auto matrix = matrix_from(task, rankings);
    double rr = 0;
    for (const auto& [query, targets] : task.qrels) {
      const auto qi = *task.query_space->index_of(query);
      testing::PrefixOracle o{rankings[qi], {static_cast<std::uint32_t>(*task.target_space->index_of(targets[0]))}};
      rr += o.reciprocal_rank();
    }
    EXPECT_EQ(evaluate_task(task, matrix).map, rr / static_cast<double>(nq));
  }
}

std::vector<TaskMetrics> table_row(const std::vector<double>& values) {
  const char* names[] = {"JobSim", "SkillSim", "JobNorm", "SkillNorm", "Job2Skill", "SkillExtr-H", "SkillExtr-T"};
  std::vector<TaskMetrics> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::string name = names[i];
    out.push_back({name, i >= 5 ? "SkillExtr" : name, values[i] / 100, values[i] / 100, 1});
  }
  return out;
}

TEST(MacroAggregate, GroupsBeforeAveraging) {
  const auto map = table_row({17.9, 37.3, 39.3, 88.9, 10.4, 52.3, 42.3});
  const auto agg = macro_aggregate(map);
  EXPECT_EQ(agg.groups, 6u);
  EXPECT_NEAR(100 * agg.map, 40.2, 0.05);
  const auto rp = table_row({37.8, 49.4, 60.8, 95.9, 33.8, 73.5, 64.2});
  EXPECT_NEAR(100 * macro_aggregate(rp).rp_at_10, 57.7, 0.1);
}

TEST(MacroAggregate, TrivialCases) {
  const std::vector<TaskMetrics> one = {{"a", "a", 0.3, 0.4, 1}};
  EXPECT_EQ(macro_aggregate(one).map, 0.3);
  const std::vector<TaskMetrics> grouped = {{"a", "g", 0.6, 0.6, 1}, {"b", "g", 0.6, 0.6, 1}, {"c", "c", 0.2, 0.2, 1}};
  EXPECT_NEAR(macro_aggregate(grouped).map, 0.4, 1e-15);
  EXPECT_THROW(macro_aggregate(std::vector<TaskMetrics>{}), ValidationError);
}

TEST(MetricReport, JsonAndTable) {
  const auto tasks = table_row({17.9, 37.3, 39.3, 88.9, 10.4, 52.3, 42.3});
  const auto agg = macro_aggregate(tasks);
  const auto doc = nlohmann::json::parse(metric_report_json(tasks, agg));
  EXPECT_TRUE(doc.contains("per_task"));
  EXPECT_NEAR(doc["task_avg"]["map"].get<double>(), agg.map, 1e-15);
  const auto table = metric_report_table(tasks, agg);
  EXPECT_NE(table.find("Task Avg"), std::string::npos);
  EXPECT_NE(table.find("40.2"), std::string::npos) << table;
}

TEST(Bench, TwoPointStandardError) {
  const std::vector<double> values = {10, 20};
  const auto [mean, se] = mean_and_standard_error(values);
  EXPECT_EQ(mean, 15.0);
  EXPECT_NEAR(se, 5.0, 1e-12);
}

TaskSpec bench_task(const std::string& name, std::size_t queries) {
  TaskSpec task;
  task.name = name;
  task.query_space = ids_space(name + "q", queries);
  task.target_space = ids_space(name + "y", 1);
  for (std::size_t i = 0; i < queries; ++i) task.qrels[name + "q" + std::to_string(i)] = {name + "y0"};
  return task;
}

TEST(Bench, ProtocolCountsAndSeededSubset) {
  const std::vector<TaskSpec> tasks = {bench_task("a", 150), bench_task("b", 40)};
  std::map<std::string, std::vector<std::size_t>> calls;
  BenchOptions options{3, 20, 9};
  const auto report = bench_latency(
      [&](const TaskSpec& t, std::size_t q) { calls[t.name].push_back(q); }, tasks, options);
  EXPECT_EQ(report.warmup, 3u);
  EXPECT_EQ(report.measured, 20u);
  ASSERT_EQ(report.tasks.size(), 2u);
  EXPECT_EQ(report.tasks[0].queries, 20u);
  EXPECT_FALSE(report.tasks[0].truncated);
  EXPECT_EQ(calls["a"].size(), 23u);
  // Determinism of the seeded subset.
  std::map<std::string, std::vector<std::size_t>> again;
  bench_latency([&](const TaskSpec& t, std::size_t q) { again[t.name].push_back(q); }, tasks, options);
  EXPECT_EQ(calls, again);

  BenchOptions many{2, 100, 9};
  const auto truncated = bench_latency([](const TaskSpec&, std::size_t) {}, tasks, many);
  EXPECT_EQ(truncated.tasks[1].queries, 40u);
  EXPECT_TRUE(truncated.tasks[1].truncated);
  const auto doc = nlohmann::json::parse(truncated.to_json());
  EXPECT_EQ(doc["warmup"], 2);
  EXPECT_EQ(doc["measured"], 100);
}

TEST(Bench, StubLatencyIsMeasured) {
  const std::vector<TaskSpec> tasks = {bench_task("a", 30)};
  const auto report = bench_latency(
      [](const TaskSpec&, std::size_t) { std::this_thread::sleep_for(std::chrono::milliseconds(2)); },
      tasks, {2, 10, 0});
  EXPECT_GE(report.tasks[0].mean_ms, 2.0);
  EXPECT_LT(report.tasks[0].mean_ms, 4.0);
  EXPECT_EQ(report.macro_se_ms, 0.0);
}

}  // namespace
}  // namespace uwe

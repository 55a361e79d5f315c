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

#include <algorithm>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "uwe/corpus.hpp"
#include "uwe/error.hpp"
#include "uwe/random.hpp"
#include "uwe/text_fold.hpp"

namespace uwe {
namespace {

SpacePtr make_space(const std::string& name, std::vector<std::string> ids) {
  std::vector<TextItem> items;
  for (auto& id : ids) items.push_back({id, "text of " + id});
  return std::make_shared<const TextSpace>(name, SpaceRole::kGeneric, std::move(items));
}

RawEdgeList edges_from(const std::string& tsv) {
  std::istringstream in(tsv);
  return parse_edge_list(in);
}

template <typename Fn>
std::string error_message(Fn&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

// --- text spaces -----------------------------------------------------------

TEST(LoadSpace, PreservesFileOrder) {
  std::istringstream in(R"({"id": "b", "text": "second"}
{"id": "a", "text": "first"}
)");
  const auto space = parse_space(in, "demo");
  ASSERT_EQ(space.size(), 2u);
  EXPECT_EQ(space.at(0).id, "b");
  EXPECT_EQ(space.at(1).id, "a");
  EXPECT_EQ(space.index_of("a"), 1u);
  EXPECT_EQ(space.name(), "demo");
}

TEST(LoadSpace, DuplicateIdNamesIdAndBothLines) {
  std::istringstream in(R"({"id": "s1", "text": "x"}
{"id": "s2", "text": "y"}
{"id": "s1", "text": "z"}
)");
  const auto message = error_message([&] { parse_space(in, "demo"); });
  EXPECT_NE(message.find("s1"), std::string::npos) << message;
  EXPECT_NE(message.find('1'), std::string::npos) << message;
  EXPECT_NE(message.find('3'), std::string::npos) << message;
}

TEST(LoadSpace, MalformedLineReportsLineNumber) {
  std::istringstream in("{\"id\": \"a\", \"text\": \"ok\"}\n{not json\n");
  const auto message = error_message([&] { parse_space(in, "demo"); });
  EXPECT_NE(message.find("line 2"), std::string::npos) << message;
}

TEST(LoadSpace, EmptyFileIsEmptySpace) {
  std::istringstream in("");
  const auto space = parse_space(in, "empty");
  EXPECT_TRUE(space.empty());
}

TEST(LoadSpace, HeaderCarriesNameAndRole) {
  std::istringstream in("#!{\"name\": \"skills\", \"role\": \"skill\"}\n{\"id\": \"a\", \"text\": \"t\"}\n");
  const auto space = parse_space(in, "fallback");
  EXPECT_EQ(space.name(), "skills");
  EXPECT_EQ(space.role(), SpaceRole::kSkill);
}

TEST(LoadSpace, SerializeRoundTrip) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TextItem> items;
    const std::size_t n = rng.uniform_index(8);
    for (std::size_t i = 0; i < n; ++i) {
      items.push_back({"id" + std::to_string(trial) + "_" + std::to_string(i),
                       testing::random_phrase(rng, 4) + " \"quoted\"\tÄé"});
    }
    const TextSpace space("round", SpaceRole::kVacancySentence, items);
    std::stringstream buffer;
    serialize_space(space, buffer);
    EXPECT_EQ(parse_space(buffer, "other"), space);
  }
}

TEST(LoadSpace, ToyFilesLoad) {
  const auto skills = load_space(testing::toy_dir() / "skills.jsonl");
  EXPECT_EQ(skills.size(), 20u);
  EXPECT_EQ(skills.role(), SpaceRole::kSkill);
}

// --- graphs ----------------------------------------------------------------

TEST(LoadGraph, DropsDuplicateEdges) {
  const auto q = make_space("q", {"s1", "s2"});
  const auto t = make_space("t", {"j1", "j2"});
  const auto graph = build_graph(edges_from("s1\tj1\ns2\tj1\ns1\tj1\n"), q, t);
  EXPECT_EQ(graph.edge_count(), 2u);
}

TEST(LoadGraph, UnknownTargetIsRejected) {
  const auto q = make_space("q", {"s1"});
  const auto t = make_space("t", {"j1"});
  const auto message = error_message([&] { build_graph(edges_from("s1\tj9\n"), q, t); });
  EXPECT_NE(message.find("j9"), std::string::npos) << message;
}

TEST(LoadGraph, AdjacencyMatchesHandEnumeration) {
  const auto q = make_space("q", {"s1", "s2"});
  const auto t = make_space("t", {"j1", "j2"});
  const auto graph = build_graph(edges_from("# comment\ns1\tj1\ns1\tj2\ns2\tj1\n"), q, t);
  const auto ys = graph.targets_of(0);
  EXPECT_EQ(std::vector<std::size_t>(ys.begin(), ys.end()), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(graph.queries_of(0).size(), 2u);
  EXPECT_EQ(graph.queries_of(1).size(), 1u);
  EXPECT_TRUE(graph.has_edge(1, 0));
  EXPECT_FALSE(graph.has_edge(1, 1));

  const auto back = graph.transposed();
  EXPECT_EQ(back.targets_of(0).size(), 2u);
  EXPECT_EQ(&back.query_space(), &graph.target_space());
}

TEST(ValidateGraph, NamesIsolatedQuery) {
  const auto q = make_space("q", {"s1", "s2"});
  const auto t = make_space("t", {"j1"});
  const auto report = validate_graph(build_graph(edges_from("s1\tj1\n"), q, t));
  ASSERT_EQ(report.isolated_queries.size(), 1u);
  EXPECT_EQ(report.isolated_queries[0], "s2");
  EXPECT_NE(report.to_string().find("s2"), std::string::npos);
}

TEST(ValidateGraph, ValidGraphHasEmptyReport) {
  const auto q = make_space("q", {"s1", "s2"});
  const auto t = make_space("t", {"j1"});
  const auto raw = edges_from("s1\tj1\ns2\tj1\n");
  EXPECT_TRUE(validate_graph(*q, *t, raw).empty());
  EXPECT_TRUE(validate_graph(build_graph(raw, q, t)).empty());
}

TEST(ValidateGraph, CategorisesMixedViolations) {
  const auto q = make_space("q", {"s1", "s2"});
  const auto t = make_space("t", {"j1"});
  const auto report = validate_graph(*q, *t, edges_from("s1\tj1\ns1\tj1\ns1\tjX\n"));
  EXPECT_EQ(report.duplicate_edges.size(), 1u);
  ASSERT_EQ(report.dangling_ids.size(), 1u);
  EXPECT_EQ(report.dangling_ids[0].id, "jX");
  EXPECT_FALSE(report.dangling_ids[0].is_query);
  ASSERT_EQ(report.isolated_queries.size(), 1u);
  EXPECT_EQ(report.isolated_queries[0], "s2");
}

TEST(ValidateGraph, EveryQueryWithAnEdgeHasTargets) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto q = make_space("q", {"a", "b", "c", "d"});
    const auto t = make_space("t", {"x", "y", "z"});
    std::string tsv;
    const char* qs[] = {"a", "b", "c", "d"};
    const char* ts[] = {"x", "y", "z"};
    for (std::size_t e = rng.uniform_index(10); e > 0; --e) {
      tsv += std::string(qs[rng.uniform_index(4)]) + '\t' + ts[rng.uniform_index(3)] + '\n';
    }
    const auto graph = build_graph(edges_from(tsv), q, t);
    const auto report = validate_graph(graph);
    std::set<std::string> isolated(report.isolated_queries.begin(), report.isolated_queries.end());
    for (std::size_t i = 0; i < q->size(); ++i) {
      EXPECT_EQ(graph.targets_of(i).empty(), isolated.count(q->at(i).id) == 1);
    }
  }
}

// --- tasks -----------------------------------------------------------------

TEST(LoadTask, ToyManifestsValidate) {
  for (const char* name : {"job2skill.json", "skill2job.json", "skillnorm.json"}) {
    const auto task = load_task(testing::toy_dir() / "tasks" / name);
    EXPECT_NO_THROW(task.validate()) << name;
    EXPECT_FALSE(task.qrels.empty()) << name;
  }
}

TEST(LoadTask, SingleLabelRequiresExactlyOneTarget) {
  TaskSpec task;
  task.name = "t";
  task.query_space = make_space("q", {"a"});
  task.target_space = make_space("y", {"x", "z"});
  task.label_type = LabelType::kOne;
  task.qrels = {{"a", {"x", "z"}}};
  EXPECT_THROW(task.validate(), ValidationError);
  task.qrels = {{"a", {"x"}}};
  EXPECT_NO_THROW(task.validate());
  task.qrels = {{"a", {"missing"}}};
  EXPECT_THROW(task.validate(), ValidationError);
}

// --- job title merging -----------------------------------------------------

RawVacancyRecord record(std::string title, std::vector<SkillPrediction> skills) {
  return {std::move(title), std::move(skills)};
}

TEST(DedupMerge, CaseVariantsMerge) {
  const std::vector<RawVacancyRecord> records = {
      record("Data Scientist", {{"k1", 0.9}}), record("data scientist", {{"k1", 0.7}})};
  const auto merged = dedup_merge_jobs(records);
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_EQ(merged[0].duplicate_count, 2u);
  ASSERT_EQ(merged[0].skills.size(), 1u);
  EXPECT_DOUBLE_EQ(merged[0].skills[0].confidence, 0.8);
}

TEST(DedupMerge, MajorityVote) {
  const std::vector<RawVacancyRecord> records = {
      record("Nurse", {{"k", 0.5}, {"rare", 0.9}}), record("nurse", {{"k", 0.5}}),
      record("NURSE", {})};
  const auto merged = dedup_merge_jobs(records);
  ASSERT_EQ(merged.size(), 1u);
  ASSERT_EQ(merged[0].skills.size(), 1u);
  EXPECT_EQ(merged[0].skills[0].skill_id, "k");
}

TEST(DedupMerge, TwoDuplicateTieKeepsSkill) {
  const std::vector<RawVacancyRecord> records = {record("Chef", {{"k", 0.4}}),
                                                 record("chef", {})};
  EXPECT_EQ(dedup_merge_jobs(records)[0].skills.size(), 1u);
}

TEST(DedupMerge, CutsProfileToTopByMeanConfidence) {
  std::vector<SkillPrediction> skills;
  for (int i = 0; i < 250; ++i) {
    skills.push_back({"k" + std::to_string(1000 + i), (i + 1) / 1000.0});
  }
  const std::vector<RawVacancyRecord> records = {record("Welder", skills)};
  const auto merged = dedup_merge_jobs(records);
  ASSERT_EQ(merged[0].skills.size(), 200u);
  EXPECT_EQ(merged[0].skills.front().skill_id, "k1249");
  EXPECT_EQ(merged[0].skills.back().skill_id, "k1050");
}

TEST(DedupMerge, ConfidenceTiesOrderById) {
  const std::vector<RawVacancyRecord> records = {
      record("Driver", {{"b", 0.5}, {"a", 0.5}, {"c", 0.7}})};
  const auto merged = dedup_merge_jobs(records);
  ASSERT_EQ(merged[0].skills.size(), 3u);
  EXPECT_EQ(merged[0].skills[0].skill_id, "c");
  EXPECT_EQ(merged[0].skills[1].skill_id, "a");
  EXPECT_EQ(merged[0].skills[2].skill_id, "b");
}

TEST(DedupMerge, CanonicalTitleIsMostFrequentSurfaceForm) {
  const std::vector<RawVacancyRecord> records = {
      record("data  scientist", {}), record("Data Scientist", {}),
      record(" Data Scientist ", {}), record("DATA SCIENTIST", {})};
  EXPECT_EQ(dedup_merge_jobs(records)[0].title, "Data Scientist");
}

TEST(DedupMerge, EmptyInput) { EXPECT_TRUE(dedup_merge_jobs({}).empty()); }

std::vector<RawVacancyRecord> random_records(Rng& rng) {
  const std::vector<std::string> titles = {"Data Scientist", "data scientist", "DATA scientist",
                                           "Nurse",          "nurse ",         "Straße Arbeiter",
                                           "STRASSE arbeiter", "Chef"};
  std::vector<RawVacancyRecord> out;
  for (std::size_t i = 0, n = 1 + rng.uniform_index(12); i < n; ++i) {
    RawVacancyRecord r;
    r.title = titles[rng.uniform_index(titles.size())];
    std::set<std::string> used;
    for (std::size_t k = rng.uniform_index(6); k > 0; --k) {
      const std::string id = "k" + std::to_string(rng.uniform_index(8));
      if (used.insert(id).second) r.skills.push_back({id, rng.uniform01()});
    }
    out.push_back(std::move(r));
  }
  return out;
}

TEST(DedupMerge, IdempotentOnItsOwnOutput) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto first = dedup_merge_jobs(random_records(rng), 4);
    std::vector<RawVacancyRecord> again;
    for (const auto& p : first) again.push_back({p.title, p.skills});
    const auto second = dedup_merge_jobs(again, 4);
    ASSERT_EQ(first.size(), second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
      EXPECT_EQ(first[i].title, second[i].title);
      ASSERT_EQ(first[i].skills.size(), second[i].skills.size());
      for (std::size_t k = 0; k < first[i].skills.size(); ++k) {
        EXPECT_EQ(first[i].skills[k].skill_id, second[i].skills[k].skill_id);
        EXPECT_EQ(first[i].skills[k].confidence, second[i].skills[k].confidence);
      }
    }
  }
}

TEST(DedupMerge, TitlesUniqueUnderCaseFolding) {
  Rng rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    std::set<std::string> keys;
    for (const auto& p : dedup_merge_jobs(random_records(rng))) {
      EXPECT_TRUE(keys.insert(title_key(p.title)).second) << p.title;
    }
  }
}

TEST(TextFold, SimpleCaseFolding) {
  EXPECT_EQ(fold_case("Data SCIENTIST"), "data scientist");
  EXPECT_EQ(fold_case("ÄÖÜ"), "äöü");
  EXPECT_EQ(fold_case("ΣΊΣΥΦΟΣ"), "σίσυφοσ");
  EXPECT_EQ(collapse_whitespace("  a \t b\n"), "a b");
  EXPECT_EQ(title_key(" Data   Scientist"), "data scientist");
}

}  // namespace
}  // namespace uwe

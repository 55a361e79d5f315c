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

#include <cmath>
#include <memory>
#include <sstream>

#include "support.hpp"
#include "uwe/error.hpp"
#include "uwe/ranker.hpp"

namespace uwe {
namespace {

std::shared_ptr<const TextSpace> random_space(Rng& rng, const std::string& prefix, std::size_t n) {
  std::vector<TextItem> items;
  for (std::size_t i = 0; i < n; ++i) {
    items.push_back({prefix + std::to_string(1000 + i), testing::random_phrase(rng, 6)});
  }
  return std::make_shared<const TextSpace>(prefix, SpaceRole::kGeneric, std::move(items));
}

Matrix row(std::initializer_list<double> values) {
  Matrix out(1, values.size());
  Eigen::Index j = 0;
  for (double v : values) out(0, j++) = v;
  return out;
}

TEST(RankedOutput, DescendingWithIdTieBreak) {
  const std::vector<std::string> ids = {"c", "a", "b", "d"};
  const auto out = make_ranked_output("q", {0.5, 0.5, 0.9, 0.5}, ids);
  EXPECT_EQ(out.ranking, (std::vector<std::uint32_t>{2, 1, 0, 3}));
}

TEST(RankedOutput, ExcludedTargetRanksLast) {
  const std::vector<std::string> ids = {"a", "b", "c"};
  const auto out = make_ranked_output("b", {0.1, 0.9, -0.5}, ids, 1);
  EXPECT_EQ(out.ranking.back(), 1u);
  EXPECT_EQ(out.scores[1], kExcludedScore);
}

TEST(TargetCache, HandScoredRanking) {
  // Mean-cosine scores 0.9, 0.1, 0.5 against the query [1, 0].
  auto vec = [](double c) { return row({c, std::sqrt(1 - c * c)}); };
  const TargetCache cache("t", 2, {{"y0", vec(0.9)}, {"y1", vec(0.1)}, {"y2", vec(0.5)}});
  const auto params = [] {
    auto p = init_params(0, 8, 2, false);
    p.table.setZero();
    p.table.col(0).setOnes();
    return p;
  }();
  const Ranker ranker(params, {ScorerKind::kMeanCosine, 0.5});
  const auto out = ranker.rank_query("q", "anything", cache, false);
  EXPECT_NEAR(out.scores[0], 0.9, 1e-6);
  EXPECT_NEAR(out.scores[1], 0.1, 1e-6);
  EXPECT_NEAR(out.scores[2], 0.5, 1e-6);
  EXPECT_EQ(out.ranking, (std::vector<std::uint32_t>{0, 2, 1}));
}

TEST(TargetCache, SingleTarget) {
  Rng rng(1);
  const auto params = init_params(1, 256, 8, false);
  const auto space = random_space(rng, "t", 1);
  const auto cache = build_cache(params, *space);
  ASSERT_EQ(cache.size(), 1u);
  EXPECT_EQ(cache.tokens(0).raw, encode_text(params, space->at(0).text).cast<float>().cast<double>());
  const Ranker ranker(params, {});
  EXPECT_EQ(ranker.rank_query("q", "data", cache, false).ranking, std::vector<std::uint32_t>{0});
}

TEST(TargetCache, FileRoundTripIsBitwise) {
  Rng rng(2);
  const auto params = init_params(2, 512, 8, true);
  const auto space = random_space(rng, "t", 25);
  const auto cache = build_cache(params, *space);
  std::stringstream a;
  write_cache(cache, a);
  const auto bytes = a.str();
  EXPECT_EQ(bytes.substr(0, 4), "UWEC");
  const auto loaded = read_cache(a, "t");
  EXPECT_TRUE(loaded == cache);
  std::stringstream b;
  write_cache(loaded, b);
  EXPECT_EQ(b.str(), bytes);
  std::stringstream c;
  write_cache(build_cache(params, *space), c);
  EXPECT_EQ(c.str(), bytes);
}

TEST(TargetCache, RejectsTrailingBytesAndBadMagic) {
  Rng rng(3);
  const auto params = init_params(2, 64, 4, false);
  std::stringstream a;
  write_cache(build_cache(params, *random_space(rng, "t", 3)), a);
  std::stringstream trailing(a.str() + "x");
  EXPECT_THROW(read_cache(trailing), ValidationError);
  std::stringstream magic("UWEX" + a.str().substr(4));
  EXPECT_THROW(read_cache(magic), ValidationError);
}

TEST(TargetCache, ImportChecksDimAndIds) {
  Rng rng(4);
  const auto params = init_params(3, 256, 6, false);
  const auto space = random_space(rng, "t", 5);
  const auto cache = build_cache(params, *space);
  try {
    import_cache(cache, *space, 7);
    FAIL();
  } catch (const ValidationError& e) {
    const std::string message = e.what();
    EXPECT_NE(message.find('6'), std::string::npos) << message;
    EXPECT_NE(message.find('7'), std::string::npos) << message;
  }
  const auto other = random_space(rng, "u", 5);
  EXPECT_THROW(import_cache(cache, *other, 6), ValidationError);
}

TEST(TargetCache, ExternalEmbeddingsScoreLikeEncoder) {
  Rng rng(5);
  const auto params = init_params(4, 256, 6, false);
  const auto space = random_space(rng, "t", 12);
  std::vector<std::pair<std::string, Matrix>> entries;
  for (auto it = space->items().rbegin(); it != space->items().rend(); ++it) {
    entries.emplace_back(it->id, encode_text(params, it->text));
  }
  const TargetCache external("ext", 6, std::move(entries));
  const auto imported = import_cache(external, *space, 6);
  const auto built = build_cache(params, *space);
  EXPECT_TRUE(imported == built);
  const Ranker ranker(params, {});
  EXPECT_EQ(ranker.score_all("python data", imported), ranker.score_all("python data", built));
}

class CacheTransparency : public ::testing::TestWithParam<ScorerKind> {};

TEST_P(CacheTransparency, CachedMatchesDirect) {
  Rng rng(6);
  const auto params = init_params(5, 1024, 16, true);
  const InteractionConfig config{GetParam(), 0.5};
  const auto queries = random_space(rng, "q", 20);
  const auto targets = random_space(rng, "t", 60);
  const auto cache = build_cache(params, *targets);
  const Ranker ranker(params, config);
  for (const auto& q : queries->items()) {
    const auto cached = ranker.score_all(q.text, cache);
    const auto direct = score_direct(params, config, q.text, *targets);
    for (std::size_t j = 0; j < cached.size(); ++j) EXPECT_NEAR(cached[j], direct[j], 1e-6);
  }
}

INSTANTIATE_TEST_SUITE_P(AllScorers, CacheTransparency,
                         ::testing::Values(ScorerKind::kSoftmaxToken, ScorerKind::kMaxSim,
                                           ScorerKind::kMeanCosine, ScorerKind::kSoftmaxYMean),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TaskSpec make_task(SpacePtr q, SpacePtr t, bool exclude_self) {
  TaskSpec task;
  task.name = "t";
  task.query_space = std::move(q);
  task.target_space = std::move(t);
  task.exclude_self = exclude_self;
  task.task_group = "t";
  return task;
}

TEST(RankTask, RowsMatchIndividualQueriesAndCountEncodes) {
  Rng rng(7);
  const auto params = init_params(6, 512, 8, false);
  const auto q = random_space(rng, "q", 2);
  const auto t = random_space(rng, "t", 3);
  const auto cache = build_cache(params, *t);
  const Ranker ranker(params, {});
  const auto matrix = rank_task(make_task(q, t, false), ranker, cache);
  ASSERT_EQ(matrix.rows.size(), 2u);
  EXPECT_EQ(ranker.query_encodes(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    ASSERT_EQ(matrix.rows[i].scores.size(), 3u);
    const auto single = ranker.rank_query(q->at(i).id, q->at(i).text, cache, false);
    EXPECT_EQ(matrix.rows[i].scores, single.scores);
    EXPECT_EQ(matrix.rows[i].ranking, single.ranking);
  }
}

TEST(RankTask, InvertedTaskTransposesShape) {
  Rng rng(8);
  const auto params = init_params(7, 512, 8, false);
  const InteractionConfig config{ScorerKind::kMeanCosine, 0.5};
  const auto q = random_space(rng, "q", 4);
  const auto t = random_space(rng, "t", 6);
  const Ranker ranker(params, config);
  const auto forward = rank_task(make_task(q, t, false), ranker, build_cache(params, *t));
  const auto backward = rank_task(make_task(t, q, false), ranker, build_cache(params, *q));
  ASSERT_EQ(forward.rows.size(), 4u);
  ASSERT_EQ(backward.rows.size(), 6u);
  // Mean cosine is symmetric, so the two matrices are transposes up to the
  // float32 rounding of cached targets.
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_NEAR(forward.rows[i].scores[j], backward.rows[j].scores[i], 1e-6);
    }
  }
}

TEST(RankTask, ThreadCountDoesNotChangeResults) {
  Rng rng(9);
  const auto params = init_params(8, 512, 8, true);
  const auto q = random_space(rng, "q", 37);
  const auto t = random_space(rng, "t", 20);
  const auto cache = build_cache(params, *t);
  const Ranker ranker(params, {});
  const auto one = rank_task(make_task(q, t, false), ranker, cache, 1);
  const auto four = rank_task(make_task(q, t, false), ranker, cache, 4);
  ASSERT_EQ(one.rows.size(), four.rows.size());
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    EXPECT_EQ(one.rows[i].query_id, four.rows[i].query_id);
    EXPECT_EQ(one.rows[i].scores, four.rows[i].scores);
    EXPECT_EQ(one.rows[i].ranking, four.rows[i].ranking);
  }
  EXPECT_EQ(ranker.query_encodes(), 2 * q->size());
}

TEST(RankTask, ExcludeSelfMasksOwnId) {
  Rng rng(10);
  const auto params = init_params(9, 512, 8, false);
  const auto s = random_space(rng, "s", 5);
  const Ranker ranker(params, {});
  const auto matrix = rank_task(make_task(s, s, true), ranker, build_cache(params, *s));
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(matrix.rows[i].ranking.back(), i);
    EXPECT_EQ(matrix.rows[i].scores[i], kExcludedScore);
  }
  EXPECT_THROW(ranker.rank_query_by_id("missing", *s, build_cache(params, *s), true), ValidationError);
}

TEST(RankTask, CacheForWrongSpaceRejected) {
  Rng rng(11);
  const auto params = init_params(9, 512, 8, false);
  const auto q = random_space(rng, "q", 2);
  const auto t = random_space(rng, "t", 3);
  const auto other = random_space(rng, "u", 3);
  const Ranker ranker(params, {});
  EXPECT_THROW(rank_task(make_task(q, t, false), ranker, build_cache(params, *other)), ValidationError);
}

}  // namespace
}  // namespace uwe

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

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "uwe/contrastive.hpp"
#include "uwe/interaction.hpp"
#include "uwe/random.hpp"
#include "uwe/ranker.hpp"

namespace {

uwe::Matrix random_tokens(uwe::Rng& rng, std::size_t rows, std::size_t dim) {
  uwe::Matrix m(rows, dim);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 2 * rng.uniform01() - 1;
  return m;
}

std::string phrase(uwe::Rng& rng, std::size_t words) {
  static const char* vocab[] = {"data", "cloud", "python", "sales", "care", "finance", "metal",
                                "lesson", "truck", "kitchen", "legal", "market", "design", "test"};
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += ' ';
    out += vocab[rng.uniform_index(std::size(vocab))];
  }
  return out;
}

void BM_Score(benchmark::State& state, uwe::ScorerKind kind) {
  uwe::Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto query = uwe::prepare_tokens(random_tokens(rng, n, 64));
  const auto target = uwe::prepare_tokens(random_tokens(rng, n, 64));
  const uwe::InteractionConfig config{kind, 0.5};
  for (auto _ : state) benchmark::DoNotOptimize(uwe::score(config, query, target));
}
BENCHMARK_CAPTURE(BM_Score, softmax, uwe::ScorerKind::kSoftmaxToken)->Arg(4)->Arg(16)->Arg(64);
BENCHMARK_CAPTURE(BM_Score, maxsim, uwe::ScorerKind::kMaxSim)->Arg(4)->Arg(16)->Arg(64);
BENCHMARK_CAPTURE(BM_Score, mean_cosine, uwe::ScorerKind::kMeanCosine)->Arg(4)->Arg(16)->Arg(64);
BENCHMARK_CAPTURE(BM_Score, softmax_ymean, uwe::ScorerKind::kSoftmaxYMean)->Arg(4)->Arg(16)->Arg(64);

void BM_ScoreWithGradient(benchmark::State& state) {
  uwe::Rng rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto query = random_tokens(rng, n, 32);
  const auto target = random_tokens(rng, n, 32);
  const uwe::InteractionConfig config{uwe::ScorerKind::kSoftmaxToken, 0.5};
  for (auto _ : state) benchmark::DoNotOptimize(uwe::score_with_gradient(config, query, target));
}
BENCHMARK(BM_ScoreWithGradient)->Arg(4)->Arg(16);

void BM_RankQuery(benchmark::State& state) {
  uwe::Rng rng(3);
  const auto targets = static_cast<std::size_t>(state.range(0));
  std::vector<uwe::TextItem> items;
  for (std::size_t i = 0; i < targets; ++i) items.push_back({"t" + std::to_string(i), phrase(rng, 4)});
  const uwe::TextSpace space("targets", uwe::SpaceRole::kGeneric, items);
  const auto params = uwe::init_params(3, 8192, 64, false);
  const auto cache = uwe::build_cache(params, space);
  const uwe::Ranker ranker(params, {});
  const std::string query = phrase(rng, 6);
  for (auto _ : state) benchmark::DoNotOptimize(ranker.rank_query("q", query, cache, false));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(targets));
}
BENCHMARK(BM_RankQuery)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_MtmSymmetricLoss(benchmark::State& state) {
  uwe::Rng rng(4);
  const auto n = static_cast<std::size_t>(state.range(0));
  uwe::BatchSimilarityMatrix batch;
  batch.values = random_tokens(rng, n, n);
  batch.positives = uwe::PositiveMask::Identity(n, n);
  batch.temperature = 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(uwe::evaluate_loss(uwe::LossKind::kMtmSymmetric, batch));
}
BENCHMARK(BM_MtmSymmetricLoss)->Arg(64)->Arg(512);

}  // namespace

BENCHMARK_MAIN();

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

#include "uwe/sampler.hpp"

#include <algorithm>
#include <numeric>

#include "uwe/error.hpp"

namespace uwe {

void SkillGraphs::validate() const {
  if (!skills) throw ValidationError("skill graphs: missing skill space");
  for (const auto g : kAllGraphs) {
    const auto& graph = (*this)[g];
    if (graph && graph->query_space_ptr() != skills) {
      throw ValidationError("graph '" + std::string(to_string(g)) +
                            "' does not use the shared skill space");
    }
  }
}

std::vector<GraphBatch> MiniBatch::graph_batches(const TextSpace& skill_space) const {
  std::vector<std::string> skill_texts;
  skill_texts.reserve(skills.size());
  for (const auto s : skills) skill_texts.push_back(skill_space.at(s).text);

  std::vector<GraphBatch> out;
  for (const auto g : kAllGraphs) {
    const auto& sample = graphs[static_cast<std::size_t>(g)];
    if (!sample) continue;
    out.push_back({g, skill_texts, sample->texts, sample->positives});
  }
  return out;
}

std::string augment_vacancy(std::string_view sentence,
                            std::span<const std::string_view> pool, double p, Rng& rng) {
  if (p > 0.0 && pool.empty()) {
    throw ValidationError("vacancy augmentation requested with an empty pool");
  }
  if (!rng.bernoulli(p)) return std::string(sentence);
  const auto extra = pool[rng.uniform_index(pool.size())];
  std::string out;
  out.reserve(sentence.size() + extra.size() + 1);
  if (rng.bernoulli(0.5)) {
    out.append(extra).append(" ").append(sentence);
  } else {
    out.append(sentence).append(" ").append(extra);
  }
  return out;
}

BatchSampler::BatchSampler(SkillGraphs graphs, SamplerConfig config)
    : graphs_(std::move(graphs)), config_(config) {
  graphs_.validate();
  if (config_.batch_skills == 0) throw ValidationError("batch size must be positive");
  if (!(config_.augment_probability >= 0.0 && config_.augment_probability <= 1.0)) {
    throw ValidationError("augmentation probability must lie in [0, 1]");
  }
  bool any = false;
  for (const auto g : kAllGraphs) {
    const auto index = static_cast<std::size_t>(g);
    if (!config_.enabled[index]) continue;
    if (!graphs_.graphs[index]) {
      throw ValidationError("graph '" + std::string(to_string(g)) +
                            "' is enabled but was not provided");
    }
    any = true;
  }
  if (!any) throw ValidationError("no graph enabled for sampling");

  for (std::size_t s = 0; s < graphs_.skills->size(); ++s) {
    bool eligible = true;
    for (const auto g : kAllGraphs) {
      const auto index = static_cast<std::size_t>(g);
      if (config_.enabled[index] && graphs_.graphs[index]->targets_of(s).empty()) {
        eligible = false;
        break;
      }
    }
    if (eligible) eligible_.push_back(s);
  }
  if (config_.batch_skills > eligible_.size()) {
    throw ValidationError("batch of " + std::to_string(config_.batch_skills) +
                          " skills exceeds the " + std::to_string(eligible_.size()) +
                          " eligible skills");
  }
}

std::size_t BatchSampler::steps_per_epoch() const {
  std::size_t max_edges = 0;
  for (const auto g : kAllGraphs) {
    const auto index = static_cast<std::size_t>(g);
    if (config_.enabled[index]) {
      max_edges = std::max(max_edges, graphs_.graphs[index]->edge_count());
    }
  }
  return (max_edges + config_.batch_skills - 1) / config_.batch_skills;
}

MiniBatch BatchSampler::sample(std::uint64_t step) const {
  Rng rng(config_.seed, step);
  MiniBatch batch;
  batch.step = step;

  // Partial Fisher-Yates over the eligible skills.
  std::vector<std::size_t> pool(eligible_.begin(), eligible_.end());
  const std::size_t n = config_.batch_skills;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.uniform_index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  batch.skills.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));

  std::vector<bool> in_batch(graphs_.skills->size(), false);
  for (const auto s : batch.skills) in_batch[s] = true;

  for (const auto g : kAllGraphs) {
    const auto index = static_cast<std::size_t>(g);
    if (!config_.enabled[index]) continue;
    const auto& graph = *graphs_.graphs[index];

    GraphSample sample;
    sample.targets.reserve(n);
    for (const auto s : batch.skills) {
      const auto candidates = graph.targets_of(s);
      sample.targets.push_back(candidates[rng.uniform_index(candidates.size())]);
    }
    sample.positives = PositiveMask::Zero(static_cast<Eigen::Index>(n),
                                          static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (graph.has_edge(batch.skills[i], sample.targets[j])) {
          sample.positives(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1;
        }
      }
    }

    const auto& targets = graph.target_space();
    sample.texts.reserve(n);
    if (g == GraphKind::kSentence && config_.augment_probability > 0.0) {
      // Sentences whose linked skills are all outside the batch.
      std::vector<std::string_view> augment_pool;
      for (std::size_t y = 0; y < targets.size(); ++y) {
        const auto linked = graph.queries_of(y);
        if (linked.empty()) continue;
        if (std::none_of(linked.begin(), linked.end(),
                         [&](std::size_t s) { return in_batch[s]; })) {
          augment_pool.push_back(targets.at(y).text);
        }
      }
      // Every sentence links to an in-batch skill: nothing safe to draw from.
      const double p = augment_pool.empty() ? 0.0 : config_.augment_probability;
      for (const auto y : sample.targets) {
        sample.texts.push_back(augment_vacancy(targets.at(y).text, augment_pool, p, rng));
      }
    } else {
      for (const auto y : sample.targets) sample.texts.push_back(targets.at(y).text);
    }
    batch.graphs[index] = std::move(sample);
  }
  return batch;
}

}  // namespace uwe

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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uwe/contrastive.hpp"
#include "uwe/corpus.hpp"
#include "uwe/random.hpp"

namespace uwe {

/// The skill-centric training graphs. All present graphs share the skill
/// space as their query side.
struct SkillGraphs {
  SpacePtr skills;
  std::array<std::optional<BipartiteGraph>, kGraphCount> graphs;

  const std::optional<BipartiteGraph>& operator[](GraphKind g) const {
    return graphs[static_cast<std::size_t>(g)];
  }
  /// Throws ValidationError when a graph's query space is not `skills`.
  void validate() const;
};

inline constexpr double kDefaultAugmentProbability = 0.8;

struct SamplerConfig {
  std::size_t batch_skills = 512;
  std::uint64_t seed = 0;
  std::array<bool, kGraphCount> enabled = {true, true, true};
  /// Probability of augmenting each vacancy sentence with a non-matching one.
  double augment_probability = kDefaultAugmentProbability;
};

struct GraphSample {
  std::vector<std::size_t> targets;   // target-space index per skill
  std::vector<std::string> texts;     // possibly augmented target text
  PositiveMask positives;             // skills x targets, all in-batch edges
};

struct MiniBatch {
  std::uint64_t step = 0;
  std::vector<std::size_t> skills;  // skill-space indices
  std::array<std::optional<GraphSample>, kGraphCount> graphs;

  /// Texts and edges in the form the objective consumes.
  std::vector<GraphBatch> graph_batches(const TextSpace& skill_space) const;
};

/// Prefixes or suffixes (fair coin) `sentence` with a uniformly drawn pool
/// sentence, with probability p. Throws ValidationError if p > 0 and the
/// pool is empty.
std::string augment_vacancy(std::string_view sentence,
                            std::span<const std::string_view> pool, double p, Rng& rng);

class BatchSampler {
 public:
  BatchSampler(SkillGraphs graphs, SamplerConfig config);

  /// Deterministic in (seed, step).
  MiniBatch sample(std::uint64_t step) const;

  /// Skills that have at least one edge in every enabled graph.
  std::span<const std::size_t> eligible_skills() const noexcept { return eligible_; }
  /// ceil(largest enabled edge count / batch size).
  std::size_t steps_per_epoch() const;
  const SkillGraphs& graphs() const noexcept { return graphs_; }
  const SamplerConfig& config() const noexcept { return config_; }

 private:
  SkillGraphs graphs_;
  SamplerConfig config_;
  std::vector<std::size_t> eligible_;
};

}  // namespace uwe

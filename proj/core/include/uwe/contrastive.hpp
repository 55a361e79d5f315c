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

#include "uwe/corpus.hpp"
#include "uwe/encoder.hpp"
#include "uwe/interaction.hpp"
#include "uwe/linalg.hpp"

namespace uwe {

enum class LossKind {
  kInfoNce,        // one positive per row on the diagonal
  kMtmAsymmetric,  // node-wise mean over queries and their positive sets
  kMtmSymmetric,   // asymmetric loss in both directions
  kMtmPairwise,    // every edge as an independent pair, both directions
};

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

using PositiveMask =
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Pairwise scores sim(q_i, y_j) of one bipartite mini-batch.
struct BatchSimilarityMatrix {
  Matrix values;
  PositiveMask positives;
  double temperature = 1.0;

  static BatchSimilarityMatrix diagonal(Matrix values, double temperature);
  static BatchSimilarityMatrix from_edges(Matrix values, double temperature,
                                          std::span<const Edge> edges);
  BatchSimilarityMatrix transposed() const;
};

struct LossResult {
  double loss = 0.0;
  Matrix d_values;  // dL / d values
};

/// Loss and its gradient with respect to the similarity matrix. Throws
/// ValidationError when the batch violates the loss's preconditions.
LossResult evaluate_loss(LossKind kind, const BatchSimilarityMatrix& batch);

double infonce(const BatchSimilarityMatrix& batch);
double mtm_asymmetric(const BatchSimilarityMatrix& batch);
double mtm_symmetric(const BatchSimilarityMatrix& batch);
double mtm_pairwise(const BatchSimilarityMatrix& batch);

// ---------------------------------------------------------------------------
// Multi-graph objective

/// The three skill-centric graphs: skill-job, skill-sentence, skill-alternative.
enum class GraphKind : std::size_t { kJob = 0, kSentence = 1, kAlternative = 2 };
inline constexpr std::size_t kGraphCount = 3;
inline constexpr std::array<GraphKind, kGraphCount> kAllGraphs = {
    GraphKind::kJob, GraphKind::kSentence, GraphKind::kAlternative};

std::string_view to_string(GraphKind graph);

struct LossWeights {
  double job = 1.0;
  double sentence = 0.5;
  double alternative = 0.5;

  double operator[](GraphKind graph) const;
  /// Non-negative and not all zero.
  void validate() const;
};

/// Per-graph loss temperatures: 0.05 for skill-job, 0.02 otherwise.
inline constexpr std::array<double, kGraphCount> kDefaultLossTemperatures = {0.05, 0.02,
                                                                             0.02};

using PerGraphBatches = std::array<std::optional<BatchSimilarityMatrix>, kGraphCount>;

/// Weighted sum of per-graph losses. Graphs with zero weight may be absent.
double mtm_total(const PerGraphBatches& per_graph, const LossWeights& weights,
                 LossKind kind = LossKind::kMtmSymmetric);

/// Texts and in-batch edges of one graph's mini-batch.
struct GraphBatch {
  GraphKind graph = GraphKind::kJob;
  std::vector<std::string> queries;
  std::vector<std::string> targets;
  PositiveMask positives;  // queries x targets
};

struct ObjectiveConfig {
  LossKind loss = LossKind::kMtmSymmetric;
  InteractionConfig interaction;
  LossWeights weights;
  std::array<double, kGraphCount> temperatures = kDefaultLossTemperatures;
  std::optional<std::size_t> max_tokens = kDefaultMaxTokens;

  void validate() const;
};

struct ObjectiveResult {
  double loss = 0.0;
  std::array<double, kGraphCount> per_graph{};
  ParamGrads grads;
};

/// Loss of the full tokenize -> encode -> score -> loss pipeline.
double objective_loss(const EncoderParams& params, std::span<const GraphBatch> batches,
                      const ObjectiveConfig& config);

/// Loss and exact gradients with respect to every parameter block. Throws
/// RuntimeError naming the block if a gradient is non-finite.
ObjectiveResult loss_gradients(const EncoderParams& params,
                               std::span<const GraphBatch> batches,
                               const ObjectiveConfig& config);

}  // namespace uwe

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

#include <string_view>

#include "uwe/linalg.hpp"

namespace uwe {

enum class ScorerKind {
  kSoftmaxToken,  // soft late interaction over both token sets
  kMaxSim,        // hard argmax selection per query token
  kMeanCosine,    // cosine of mean-pooled sentence vectors
  kSoftmaxYMean,  // soft late interaction against the mean target vector
};

std::string_view to_string(ScorerKind kind);
ScorerKind parse_scorer_kind(std::string_view name);

/// Selected by the hyper-parameter grid.
inline constexpr double kDefaultInteractionTemperature = 0.5;
/// Reported for the token-level ablation.
inline constexpr double kAblationInteractionTemperature = 0.1;

struct InteractionConfig {
  ScorerKind kind = ScorerKind::kSoftmaxToken;
  double temperature = kDefaultInteractionTemperature;

  /// Throws ValidationError for a non-positive temperature on softmax kinds.
  void validate() const;
};

/// Row-wise L2 normalization; zero rows stay zero.
Matrix normalize_rows(const Matrix& m);

struct TokenSimilarity {
  Matrix raw;         // S = E_q E_y^T
  Matrix normalized;  // same product over row-normalized embeddings
};

TokenSimilarity token_similarity(const Matrix& query, const Matrix& target);

// All scores average over query tokens, so they lie in [-1, 1].
double sim_softmax(const Matrix& query, const Matrix& target, double temperature);
double sim_maxsim(const Matrix& query, const Matrix& target);
double sim_mean_cosine(const Matrix& query, const Matrix& target);
double sim_softmax_ymean(const Matrix& query, const Matrix& target, double temperature);

struct SimilarityBreakdown {
  Matrix raw;
  Matrix normalized;
  Matrix interaction;  // empty for kMeanCosine
  double score = 0.0;
};

SimilarityBreakdown explain_similarity(const InteractionConfig& config,
                                       const Matrix& query, const Matrix& target);

/// Token matrix with the derived forms every scorer needs.
struct PreparedTokens {
  Matrix raw;
  Matrix normalized;
  RowVector mean;
  RowVector mean_normalized;
};

PreparedTokens prepare_tokens(Matrix raw);

double score(const InteractionConfig& config, const PreparedTokens& query,
             const PreparedTokens& target);
double score(const InteractionConfig& config, const Matrix& query,
             const Matrix& target);

struct ScoreGradient {
  double score = 0.0;
  Matrix d_query;
  Matrix d_target;
};

/// Score plus its derivative with respect to both raw token matrices.
/// kMaxSim is not differentiable and throws ValidationError.
ScoreGradient score_with_gradient(const InteractionConfig& config,
                                  const Matrix& query, const Matrix& target);

}  // namespace uwe

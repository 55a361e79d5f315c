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

#include "uwe/contrastive.hpp"

#include <cmath>
#include <string>

#include "uwe/error.hpp"

namespace uwe {
namespace {

void check_batch(const BatchSimilarityMatrix& batch) {
  if (!(batch.temperature > 0.0) || !std::isfinite(batch.temperature)) {
    throw ValidationError("loss temperature must be positive, got " +
                          std::to_string(batch.temperature));
  }
  if (batch.values.rows() == 0 || batch.values.cols() == 0) {
    throw ValidationError("empty similarity matrix");
  }
  if (batch.positives.rows() != batch.values.rows() ||
      batch.positives.cols() != batch.values.cols()) {
    throw ValidationError("positive mask shape does not match similarity matrix");
  }
  if (!batch.values.allFinite()) {
    throw ValidationError("similarity matrix has non-finite entries");
  }
}

/// Row-wise log-sum-exp of values / t and the matching softmax.
struct RowSoftmax {
  Vector lse;
  Matrix probs;
};

RowSoftmax row_softmax(const Matrix& values, double t) {
  RowSoftmax out{Vector(values.rows()), Matrix(values.rows(), values.cols())};
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    const double max = values.row(i).maxCoeff() / t;
    double sum = 0.0;
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      const double e = std::exp(values(i, j) / t - max);
      out.probs(i, j) = e;
      sum += e;
    }
    out.probs.row(i) /= sum;
    out.lse(i) = max + std::log(sum);
  }
  return out;
}

LossResult infonce_impl(const BatchSimilarityMatrix& batch) {
  const auto& v = batch.values;
  if (v.rows() != v.cols()) {
    throw ValidationError("infonce requires a square matrix, got " +
                          std::to_string(v.rows()) + "x" + std::to_string(v.cols()));
  }
  const double t = batch.temperature;
  const auto n = static_cast<double>(v.rows());
  const auto sm = row_softmax(v, t);
  LossResult out{0.0, sm.probs / (n * t)};
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    out.loss += sm.lse(i) - v(i, i) / t;
    out.d_values(i, i) -= 1.0 / (n * t);
  }
  out.loss /= n;
  return out;
}

LossResult asymmetric_impl(const Matrix& v, const PositiveMask& positives, double t,
                           const char* side) {
  const auto rows = static_cast<double>(v.rows());
  const auto sm = row_softmax(v, t);
  LossResult out{0.0, Matrix(v.rows(), v.cols())};
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    double count = 0.0;
    double row_loss = 0.0;
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      if (positives(i, j)) {
        count += 1.0;
        row_loss += sm.lse(i) - v(i, j) / t;
      }
    }
    if (count == 0.0) {
      throw ValidationError(std::string(side) + " node " + std::to_string(i) +
                            " has no in-batch positive");
    }
    out.loss += row_loss / count;
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      const double target = positives(i, j) ? 1.0 / count : 0.0;
      out.d_values(i, j) = (sm.probs(i, j) - target) / (rows * t);
    }
  }
  out.loss /= rows;
  return out;
}

LossResult symmetric_impl(const BatchSimilarityMatrix& batch) {
  auto forward = asymmetric_impl(batch.values, batch.positives, batch.temperature, "query");
  const Matrix vt = batch.values.transpose();
  const PositiveMask pt = batch.positives.transpose();
  const auto backward = asymmetric_impl(vt, pt, batch.temperature, "target");
  forward.loss += backward.loss;
  forward.d_values += backward.d_values.transpose();
  return forward;
}

LossResult pairwise_impl(const BatchSimilarityMatrix& batch) {
  const auto& v = batch.values;
  const double t = batch.temperature;
  const auto rows = row_softmax(v, t);
  const Matrix vt = v.transpose();
  const auto cols = row_softmax(vt, t);

  Vector row_edges = Vector::Zero(v.rows());
  Vector col_edges = Vector::Zero(v.cols());
  double edges = 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      if (!batch.positives(i, j)) continue;
      edges += 1.0;
      row_edges(i) += 1.0;
      col_edges(j) += 1.0;
      total += (rows.lse(i) - v(i, j) / t) + (cols.lse(j) - v(i, j) / t);
    }
  }
  if (edges == 0.0) throw ValidationError("pairwise loss needs at least one edge");

  LossResult out{total / edges, Matrix(v.rows(), v.cols())};
  const double scale = 1.0 / (edges * t);
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      double d = row_edges(i) * rows.probs(i, j) + col_edges(j) * cols.probs(j, i);
      if (batch.positives(i, j)) d -= 2.0;
      out.d_values(i, j) = d * scale;
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kInfoNce:
      return "infonce";
    case LossKind::kMtmAsymmetric:
      return "mtm_asymmetric";
    case LossKind::kMtmSymmetric:
      return "mtm_symmetric";
    case LossKind::kMtmPairwise:
      return "mtm_pairwise";
  }
  return "mtm_symmetric";
}

LossKind parse_loss_kind(std::string_view name) {
  for (const auto kind : {LossKind::kInfoNce, LossKind::kMtmAsymmetric,
                          LossKind::kMtmSymmetric, LossKind::kMtmPairwise}) {
    if (to_string(kind) == name) return kind;
  }
  throw ValidationError("unknown loss '" + std::string(name) + "'");
}

BatchSimilarityMatrix BatchSimilarityMatrix::diagonal(Matrix values, double temperature) {
  BatchSimilarityMatrix batch;
  batch.positives = PositiveMask::Zero(values.rows(), values.cols());
  for (Eigen::Index i = 0; i < std::min(values.rows(), values.cols()); ++i) {
    batch.positives(i, i) = 1;
  }
  batch.values = std::move(values);
  batch.temperature = temperature;
  return batch;
}

BatchSimilarityMatrix BatchSimilarityMatrix::from_edges(Matrix values, double temperature,
                                                        std::span<const Edge> edges) {
  BatchSimilarityMatrix batch;
  batch.positives = PositiveMask::Zero(values.rows(), values.cols());
  for (const auto& e : edges) {
    if (static_cast<Eigen::Index>(e.query) >= values.rows() ||
        static_cast<Eigen::Index>(e.target) >= values.cols()) {
      throw ValidationError("edge outside the similarity matrix");
    }
    batch.positives(static_cast<Eigen::Index>(e.query),
                    static_cast<Eigen::Index>(e.target)) = 1;
  }
  batch.values = std::move(values);
  batch.temperature = temperature;
  return batch;
}

BatchSimilarityMatrix BatchSimilarityMatrix::transposed() const {
  BatchSimilarityMatrix out;
  out.values = values.transpose();
  out.positives = positives.transpose();
  out.temperature = temperature;
  return out;
}

LossResult evaluate_loss(LossKind kind, const BatchSimilarityMatrix& batch) {
  check_batch(batch);
  switch (kind) {
    case LossKind::kInfoNce:
      return infonce_impl(batch);
    case LossKind::kMtmAsymmetric:
      return asymmetric_impl(batch.values, batch.positives, batch.temperature, "query");
    case LossKind::kMtmSymmetric:
      return symmetric_impl(batch);
    case LossKind::kMtmPairwise:
      return pairwise_impl(batch);
  }
  throw ValidationError("unknown loss kind");
}

double infonce(const BatchSimilarityMatrix& batch) {
  return evaluate_loss(LossKind::kInfoNce, batch).loss;
}

double mtm_asymmetric(const BatchSimilarityMatrix& batch) {
  return evaluate_loss(LossKind::kMtmAsymmetric, batch).loss;
}

double mtm_symmetric(const BatchSimilarityMatrix& batch) {
  return evaluate_loss(LossKind::kMtmSymmetric, batch).loss;
}

double mtm_pairwise(const BatchSimilarityMatrix& batch) {
  return evaluate_loss(LossKind::kMtmPairwise, batch).loss;
}

// ---------------------------------------------------------------------------

std::string_view to_string(GraphKind graph) {
  switch (graph) {
    case GraphKind::kJob:
      return "job";
    case GraphKind::kSentence:
      return "sentence";
    case GraphKind::kAlternative:
      return "alternative";
  }
  return "job";
}

double LossWeights::operator[](GraphKind graph) const {
  switch (graph) {
    case GraphKind::kJob:
      return job;
    case GraphKind::kSentence:
      return sentence;
    case GraphKind::kAlternative:
      return alternative;
  }
  return 0.0;
}

void LossWeights::validate() const {
  for (const double w : {job, sentence, alternative}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ValidationError("loss weights must be finite and non-negative");
    }
  }
  if (job == 0.0 && sentence == 0.0 && alternative == 0.0) {
    throw ValidationError("at least one loss weight must be positive");
  }
}

double mtm_total(const PerGraphBatches& per_graph, const LossWeights& weights,
                 LossKind kind) {
  weights.validate();
  double total = 0.0;
  for (const auto graph : kAllGraphs) {
    const double w = weights[graph];
    if (w == 0.0) continue;
    const auto& batch = per_graph[static_cast<std::size_t>(graph)];
    if (!batch) {
      throw ValidationError("graph '" + std::string(to_string(graph)) +
                            "' has positive weight but no batch");
    }
    total += w * evaluate_loss(kind, *batch).loss;
  }
  return total;
}

void ObjectiveConfig::validate() const {
  weights.validate();
  interaction.validate();
  if (interaction.kind == ScorerKind::kMaxSim) {
    throw ValidationError("maxsim cannot be trained through; choose softmax, "
                          "softmax_ymean or mean_cosine");
  }
  for (const double t : temperatures) {
    if (!(t > 0.0)) throw ValidationError("loss temperatures must be positive");
  }
}

namespace {

struct EncodedSide {
  std::vector<TokenSequence> tokens;
  std::vector<Matrix> embeddings;
};

EncodedSide encode_all(const EncoderParams& params, const std::vector<std::string>& texts,
                       std::optional<std::size_t> max_tokens) {
  const auto tokenizer = params.tokenizer();
  EncodedSide side;
  side.tokens.reserve(texts.size());
  side.embeddings.reserve(texts.size());
  for (const auto& text : texts) {
    side.tokens.push_back(tokenizer(text, max_tokens));
    side.embeddings.push_back(encode(params, side.tokens.back()));
  }
  return side;
}

void check_graph_batch(const GraphBatch& batch) {
  if (batch.positives.rows() != static_cast<Eigen::Index>(batch.queries.size()) ||
      batch.positives.cols() != static_cast<Eigen::Index>(batch.targets.size())) {
    throw ValidationError("graph batch '" + std::string(to_string(batch.graph)) +
                          "': positive mask does not match text counts");
  }
}

template <typename PerGraph>
double run_objective(const EncoderParams& params, std::span<const GraphBatch> batches,
                     const ObjectiveConfig& config, PerGraph&& per_graph) {
  config.validate();
  double total = 0.0;
  for (const auto& batch : batches) {
    const double weight = config.weights[batch.graph];
    if (weight == 0.0) continue;
    check_graph_batch(batch);
    const auto queries = encode_all(params, batch.queries, config.max_tokens);
    const auto targets = encode_all(params, batch.targets, config.max_tokens);
    BatchSimilarityMatrix sims;
    sims.values.resize(static_cast<Eigen::Index>(batch.queries.size()),
                       static_cast<Eigen::Index>(batch.targets.size()));
    for (std::size_t i = 0; i < batch.queries.size(); ++i) {
      for (std::size_t j = 0; j < batch.targets.size(); ++j) {
        sims.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            score(config.interaction, queries.embeddings[i], targets.embeddings[j]);
      }
    }
    if (!sims.values.allFinite()) {
      throw RuntimeError("non-finite similarity in graph '" + std::string(to_string(batch.graph)) + "'");
    }
    sims.positives = batch.positives;
    sims.temperature = config.temperatures[static_cast<std::size_t>(batch.graph)];
    const auto result = evaluate_loss(config.loss, sims);
    total += weight * result.loss;
    per_graph(batch, weight, result, queries, targets);
  }
  return total;
}

}  // namespace

double objective_loss(const EncoderParams& params, std::span<const GraphBatch> batches,
                      const ObjectiveConfig& config) {
  return run_objective(params, batches, config, [](auto&&...) {});
}

ObjectiveResult loss_gradients(const EncoderParams& params,
                               std::span<const GraphBatch> batches,
                               const ObjectiveConfig& config) {
  ObjectiveResult out;
  out.grads = ParamGrads::zeros_like(params);
  out.loss = run_objective(
      params, batches, config,
      [&](const GraphBatch& batch, double weight, const LossResult& result,
          const EncodedSide& queries, const EncodedSide& targets) {
        out.per_graph[static_cast<std::size_t>(batch.graph)] = result.loss;
        std::vector<Matrix> d_queries;
        std::vector<Matrix> d_targets;
        for (const auto& e : queries.embeddings) d_queries.push_back(Matrix::Zero(e.rows(), e.cols()));
        for (const auto& e : targets.embeddings) d_targets.push_back(Matrix::Zero(e.rows(), e.cols()));
        for (std::size_t i = 0; i < queries.embeddings.size(); ++i) {
          for (std::size_t j = 0; j < targets.embeddings.size(); ++j) {
            const double upstream = weight * result.d_values(static_cast<Eigen::Index>(i),
                                                             static_cast<Eigen::Index>(j));
            if (upstream == 0.0) continue;
            const auto g = score_with_gradient(config.interaction, queries.embeddings[i],
                                               targets.embeddings[j]);
            d_queries[i] += upstream * g.d_query;
            d_targets[j] += upstream * g.d_target;
          }
        }
        for (std::size_t i = 0; i < d_queries.size(); ++i) {
          encode_backward(params, queries.tokens[i], d_queries[i], out.grads);
        }
        for (std::size_t j = 0; j < d_targets.size(); ++j) {
          encode_backward(params, targets.tokens[j], d_targets[j], out.grads);
        }
      });
  if (!out.grads.table.allFinite()) throw RuntimeError("non-finite gradient in block 'table'");
  if (params.has_projection) {
    if (!out.grads.projection.allFinite()) {
      throw RuntimeError("non-finite gradient in block 'projection'");
    }
    if (!out.grads.bias.allFinite()) throw RuntimeError("non-finite gradient in block 'bias'");
  }
  return out;
}

}  // namespace uwe

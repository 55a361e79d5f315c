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

#include "uwe/interaction.hpp"

#include <cmath>
#include <string>

#include "uwe/error.hpp"

namespace uwe {
namespace {

void require_nonempty(const Matrix& query, const Matrix& target) {
  if (query.rows() == 0 || target.rows() == 0) {
    throw ValidationError("similarity of an empty token matrix");
  }
  if (query.cols() != target.cols()) {
    throw ValidationError("embedding dimension mismatch: " +
                          std::to_string(query.cols()) + " vs " +
                          std::to_string(target.cols()));
  }
}

void require_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ValidationError("interaction temperature must be positive, got " +
                          std::to_string(temperature));
  }
}

RowVector normalize(const RowVector& v) {
  const double norm = v.norm();
  return norm > 0.0 ? RowVector(v / norm) : RowVector::Zero(v.size());
}

/// Row-wise softmax of logits / temperature with max subtraction.
Matrix row_softmax(const Matrix& logits, double temperature) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double max = logits.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      const double e = std::exp((logits(i, j) - max) / temperature);
      out(i, j) = e;
      sum += e;
    }
    out.row(i) /= sum;
  }
  return out;
}

Matrix argmax_selection(const Matrix& logits) {
  Matrix out = Matrix::Zero(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < logits.cols(); ++j) {
      if (logits(i, j) > logits(i, best)) best = j;  // ties keep the lowest index
    }
    out(i, best) = 1.0;
  }
  return out;
}

double mean_frobenius(const Matrix& interaction, const Matrix& normalized) {
  return interaction.cwiseProduct(normalized).sum() /
         static_cast<double>(normalized.rows());
}

/// Backpropagates through x -> x / |x| row by row.
Matrix normalize_rows_backward(const Matrix& raw, const Matrix& normalized,
                               const Matrix& upstream) {
  Matrix out(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    const double norm = raw.row(i).norm();
    if (norm == 0.0) {
      out.row(i).setZero();
      continue;
    }
    const double projection = normalized.row(i).dot(upstream.row(i));
    out.row(i) = (upstream.row(i) - projection * normalized.row(i)) / norm;
  }
  return out;
}

RowVector normalize_backward(const RowVector& raw, const RowVector& normalized,
                             const RowVector& upstream) {
  const double norm = raw.norm();
  if (norm == 0.0) return RowVector::Zero(raw.size());
  return (upstream - normalized.dot(upstream) * normalized) / norm;
}

RowVector row_mean(const Matrix& m) { return m.colwise().mean(); }

}  // namespace

std::string_view to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kSoftmaxToken:
      return "softmax";
    case ScorerKind::kMaxSim:
      return "maxsim";
    case ScorerKind::kMeanCosine:
      return "mean_cosine";
    case ScorerKind::kSoftmaxYMean:
      return "softmax_ymean";
  }
  return "softmax";
}

ScorerKind parse_scorer_kind(std::string_view name) {
  if (name == "softmax" || name == "softmax_token") return ScorerKind::kSoftmaxToken;
  if (name == "maxsim") return ScorerKind::kMaxSim;
  if (name == "mean_cosine") return ScorerKind::kMeanCosine;
  if (name == "softmax_ymean") return ScorerKind::kSoftmaxYMean;
  throw ValidationError("unknown scorer '" + std::string(name) + "'");
}

void InteractionConfig::validate() const {
  if (kind == ScorerKind::kSoftmaxToken || kind == ScorerKind::kSoftmaxYMean) {
    require_temperature(temperature);
  }
}

Matrix normalize_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (norm > 0.0) {
      out.row(i) = m.row(i) / norm;
    } else {
      out.row(i).setZero();
    }
  }
  return out;
}

TokenSimilarity token_similarity(const Matrix& query, const Matrix& target) {
  if (query.cols() != target.cols()) {
    throw ValidationError("embedding dimension mismatch: " +
                          std::to_string(query.cols()) + " vs " +
                          std::to_string(target.cols()));
  }
  return {query * target.transpose(),
          normalize_rows(query) * normalize_rows(target).transpose()};
}

double sim_softmax(const Matrix& query, const Matrix& target, double temperature) {
  return score({ScorerKind::kSoftmaxToken, temperature}, query, target);
}

double sim_maxsim(const Matrix& query, const Matrix& target) {
  return score({ScorerKind::kMaxSim, 1.0}, query, target);
}

double sim_mean_cosine(const Matrix& query, const Matrix& target) {
  return score({ScorerKind::kMeanCosine, 1.0}, query, target);
}

double sim_softmax_ymean(const Matrix& query, const Matrix& target, double temperature) {
  return score({ScorerKind::kSoftmaxYMean, temperature}, query, target);
}

SimilarityBreakdown explain_similarity(const InteractionConfig& config,
                                       const Matrix& query, const Matrix& target) {
  require_nonempty(query, target);
  config.validate();
  SimilarityBreakdown out;
  switch (config.kind) {
    case ScorerKind::kSoftmaxToken: {
      auto sim = token_similarity(query, target);
      out.interaction = row_softmax(sim.raw, config.temperature);
      out.raw = std::move(sim.raw);
      out.normalized = std::move(sim.normalized);
      out.score = mean_frobenius(out.interaction, out.normalized);
      break;
    }
    case ScorerKind::kMaxSim: {
      auto sim = token_similarity(query, target);
      out.interaction = argmax_selection(sim.raw);
      out.raw = std::move(sim.raw);
      out.normalized = std::move(sim.normalized);
      out.score = mean_frobenius(out.interaction, out.normalized);
      break;
    }
    case ScorerKind::kMeanCosine: {
      auto sim = token_similarity(query, target);
      out.raw = std::move(sim.raw);
      out.normalized = std::move(sim.normalized);
      out.score = normalize(row_mean(query)).dot(normalize(row_mean(target)));
      break;
    }
    case ScorerKind::kSoftmaxYMean: {
      const Matrix pooled = row_mean(target);
      auto sim = token_similarity(query, pooled);
      out.interaction = row_softmax(sim.raw, config.temperature);
      out.raw = std::move(sim.raw);
      out.normalized = std::move(sim.normalized);
      out.score = mean_frobenius(out.interaction, out.normalized);
      break;
    }
  }
  return out;
}

PreparedTokens prepare_tokens(Matrix raw) {
  PreparedTokens out;
  out.normalized = normalize_rows(raw);
  out.mean = row_mean(raw);
  out.mean_normalized = normalize(out.mean);
  out.raw = std::move(raw);
  return out;
}

double score(const InteractionConfig& config, const PreparedTokens& query,
             const PreparedTokens& target) {
  require_nonempty(query.raw, target.raw);
  const auto n = static_cast<double>(query.raw.rows());
  switch (config.kind) {
    case ScorerKind::kSoftmaxToken: {
      require_temperature(config.temperature);
      const Matrix raw = query.raw * target.raw.transpose();
      const Matrix normalized = query.normalized * target.normalized.transpose();
      return mean_frobenius(row_softmax(raw, config.temperature), normalized);
    }
    case ScorerKind::kMaxSim: {
      const Matrix raw = query.raw * target.raw.transpose();
      double total = 0.0;
      for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < raw.cols(); ++j) {
          if (raw(i, j) > raw(i, best)) best = j;
        }
        total += query.normalized.row(i).dot(target.normalized.row(best));
      }
      return total / n;
    }
    case ScorerKind::kMeanCosine:
      return query.mean_normalized.dot(target.mean_normalized);
    case ScorerKind::kSoftmaxYMean:
      // A single pooled target row: every softmax row is exactly [1].
      require_temperature(config.temperature);
      return (query.normalized * target.mean_normalized.transpose()).sum() / n;
  }
  return 0.0;
}

double score(const InteractionConfig& config, const Matrix& query,
             const Matrix& target) {
  require_nonempty(query, target);
  return score(config, prepare_tokens(query), prepare_tokens(target));
}

ScoreGradient score_with_gradient(const InteractionConfig& config,
                                  const Matrix& query, const Matrix& target) {
  require_nonempty(query, target);
  config.validate();
  const auto n = static_cast<double>(query.rows());
  ScoreGradient out;
  switch (config.kind) {
    case ScorerKind::kSoftmaxToken: {
      const Matrix qn = normalize_rows(query);
      const Matrix tn = normalize_rows(target);
      const Matrix raw = query * target.transpose();
      const Matrix normalized = qn * tn.transpose();
      const Matrix attention = row_softmax(raw, config.temperature);
      out.score = mean_frobenius(attention, normalized);

      // score = (1/n) <A, S_hat>, A = softmax(S / t).
      const Matrix d_normalized = attention / n;
      const Matrix d_attention = normalized / n;
      Matrix d_raw(raw.rows(), raw.cols());
      for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        const double inner = attention.row(i).dot(d_attention.row(i));
        d_raw.row(i) = attention.row(i).cwiseProduct(
                           d_attention.row(i) - RowVector::Constant(raw.cols(), inner)) /
                       config.temperature;
      }
      out.d_query = d_raw * target +
                    normalize_rows_backward(query, qn, d_normalized * tn);
      out.d_target = d_raw.transpose() * query +
                     normalize_rows_backward(target, tn, d_normalized.transpose() * qn);
      break;
    }
    case ScorerKind::kMaxSim:
      throw ValidationError("maxsim is not differentiable; use it for ranking only");
    case ScorerKind::kMeanCosine: {
      const RowVector qm = row_mean(query);
      const RowVector tm = row_mean(target);
      const RowVector qmn = normalize(qm);
      const RowVector tmn = normalize(tm);
      out.score = qmn.dot(tmn);
      const RowVector d_qm = normalize_backward(qm, qmn, tmn);
      const RowVector d_tm = normalize_backward(tm, tmn, qmn);
      out.d_query = d_qm.replicate(query.rows(), 1) / n;
      out.d_target = d_tm.replicate(target.rows(), 1) /
                     static_cast<double>(target.rows());
      break;
    }
    case ScorerKind::kSoftmaxYMean: {
      const Matrix qn = normalize_rows(query);
      const RowVector tm = row_mean(target);
      const RowVector tmn = normalize(tm);
      out.score = (qn * tmn.transpose()).sum() / n;
      const Matrix d_qn = tmn.replicate(query.rows(), 1) / n;
      out.d_query = normalize_rows_backward(query, qn, d_qn);
      const RowVector d_tmn = qn.colwise().sum() / n;
      const RowVector d_tm = normalize_backward(tm, tmn, d_tmn);
      out.d_target = d_tm.replicate(target.rows(), 1) /
                     static_cast<double>(target.rows());
      break;
    }
  }
  return out;
}

}  // namespace uwe

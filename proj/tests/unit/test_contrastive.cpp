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
#include <cmath>
#include <numeric>

#include "gradient_check.hpp"
#include "support.hpp"
#include "uwe/contrastive.hpp"
#include "uwe/error.hpp"

namespace uwe {
namespace {

const double kLogOnePlusInvE = std::log1p(std::exp(-1.0));
const double kLogOnePlusE = std::log1p(std::exp(1.0));

Matrix m(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix out(rows.size(), rows.begin()->size());
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) out(i, j++) = v;
    ++i;
  }
  return out;
}

BatchSimilarityMatrix with_mask(Matrix values, PositiveMask mask, double tau) {
  BatchSimilarityMatrix b;
  b.values = std::move(values);
  b.positives = std::move(mask);
  b.temperature = tau;
  return b;
}

// Independent evaluation of the node-wise loss straight from the definition.
double reference_asymmetric(const Matrix& s, const PositiveMask& mask, double tau) {
  double total = 0;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    double denom = 0;
    for (Eigen::Index j = 0; j < s.cols(); ++j) denom += std::exp(s(i, j) / tau);
    double row = 0;
    int count = 0;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (!mask(i, j)) continue;
      row += -std::log(std::exp(s(i, j) / tau) / denom);
      ++count;
    }
    total += row / count;
  }
  return total / s.rows();
}

TEST(InfoNce, SinglePairIsZero) {
  EXPECT_EQ(infonce(BatchSimilarityMatrix::diagonal(m({{0.3}}), 0.05)), 0.0);
}

TEST(InfoNce, ClosedForm) {
  EXPECT_NEAR(infonce(BatchSimilarityMatrix::diagonal(m({{1, 0}, {0, 1}}), 1.0)), kLogOnePlusInvE, 1e-12);
  EXPECT_NEAR(kLogOnePlusInvE, 0.3133, 1e-4);
}

TEST(InfoNce, RowShiftInvariant) {
  Rng rng(1);
  const Matrix s = testing::random_matrix(rng, 4, 4);
  Matrix shifted = s;
  shifted.row(2).array() += 3.7;
  EXPECT_NEAR(infonce(BatchSimilarityMatrix::diagonal(s, 0.2)),
              infonce(BatchSimilarityMatrix::diagonal(shifted, 0.2)), 1e-12);
}

TEST(InfoNce, RejectsBadInput) {
  EXPECT_THROW(infonce(with_mask(m({{1, 0}}), PositiveMask::Ones(1, 2), 1.0)), ValidationError);
  EXPECT_THROW(infonce(BatchSimilarityMatrix::diagonal(m({{1}}), 0.0)), ValidationError);
}

TEST(MtmAsymmetric, ReducesToInfoNceOnDiagonal) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = 1 + rng.uniform_index(6);
    const auto b = BatchSimilarityMatrix::diagonal(testing::random_matrix(rng, n, n), 0.1);
    EXPECT_NEAR(mtm_asymmetric(b), infonce(b), 1e-12);
  }
}

TEST(MtmAsymmetric, TwoPositivesClosedForm) {
  const auto b = with_mask(m({{1, 0}}), PositiveMask::Ones(1, 2), 1.0);
  EXPECT_NEAR(mtm_asymmetric(b), 0.5 * (kLogOnePlusInvE + kLogOnePlusE), 1e-12);
  EXPECT_NEAR(mtm_asymmetric(b), 0.8133, 1e-4);
}

TEST(MtmAsymmetric, DuplicatedQueryRowLeavesLossUnchanged) {
  const auto b = with_mask(m({{1, 0, 0.5}, {0.2, 0.9, -1}}),
                           (PositiveMask(2, 3) << 1, 0, 1, 0, 1, 0).finished(), 0.3);
  const auto dup = with_mask(m({{1, 0, 0.5}, {1, 0, 0.5}, {0.2, 0.9, -1}, {0.2, 0.9, -1}}),
                             (PositiveMask(4, 3) << 1, 0, 1, 1, 0, 1, 0, 1, 0, 0, 1, 0).finished(),
                             0.3);
  EXPECT_NEAR(mtm_asymmetric(b), mtm_asymmetric(dup), 1e-12);
}

TEST(MtmAsymmetric, MatchesDefinition) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto r = 1 + rng.uniform_index(5), c = 1 + rng.uniform_index(5);
    const auto b = with_mask(testing::random_matrix(rng, r, c), testing::random_cover_mask(rng, r, c), 0.5);
    EXPECT_NEAR(mtm_asymmetric(b), reference_asymmetric(b.values, b.positives, 0.5), 1e-10);
  }
}

TEST(MtmAsymmetric, RowWithoutPositiveRejected) {
  EXPECT_THROW(mtm_asymmetric(with_mask(m({{1, 0}}), PositiveMask::Zero(1, 2), 1.0)), ValidationError);
}

TEST(MtmSymmetric, ClosedFormBothDirections) {
  const auto b = with_mask(m({{1, 0}}), PositiveMask::Ones(1, 2), 1.0);
  // Each column has a single candidate query, so the reverse direction is 0.
  EXPECT_NEAR(mtm_asymmetric(b.transposed()), 0.0, 1e-15);
  EXPECT_NEAR(mtm_symmetric(b), 0.8133, 1e-4);

  // Complete 2x2 graph: every node sees one positive at 1 and one at 0.
  const auto full = with_mask(m({{1, 0}, {0, 1}}), PositiveMask::Ones(2, 2), 1.0);
  EXPECT_NEAR(mtm_asymmetric(full.transposed()), 0.5 * (kLogOnePlusInvE + kLogOnePlusE), 1e-12);
  EXPECT_NEAR(mtm_symmetric(full), 1.6266, 1e-4);
}

TEST(MtmSymmetric, SymmetricInputDoublesAsymmetric) {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = 1 + rng.uniform_index(5);
    const Matrix a = testing::random_matrix(rng, n, n);
    const Matrix s = a + a.transpose();
    PositiveMask mask = testing::random_cover_mask(rng, n, n);
    mask = (mask + PositiveMask(mask.transpose())).cwiseMin(std::uint8_t{1});
    const auto b = with_mask(s, mask, 0.4);
    EXPECT_NEAR(mtm_symmetric(b), 2 * mtm_asymmetric(b), 1e-12);
  }
}

TEST(MtmSymmetric, TransposeInvariant) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto r = 1 + rng.uniform_index(5), c = 1 + rng.uniform_index(5);
    const auto b = with_mask(testing::random_matrix(rng, r, c), testing::random_cover_mask(rng, r, c), 0.2);
    EXPECT_NEAR(mtm_symmetric(b), mtm_symmetric(b.transposed()), 1e-12);
  }
}

TEST(MtmPairwise, EqualsSymmetricOnOneToOne) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = 1 + rng.uniform_index(6);
    const auto b = BatchSimilarityMatrix::diagonal(testing::random_matrix(rng, n, n), 0.07);
    EXPECT_NEAR(mtm_pairwise(b), mtm_symmetric(b), 1e-9);
    EXPECT_NEAR(mtm_symmetric(b), infonce(b) + infonce(b.transposed()), 1e-9);
  }
}

TEST(MtmPairwise, OtherPositiveActsAsNegative) {
  // q has positives y1, y2 with sims (1, 0); y1 and y2 each see only q.
  const auto b = with_mask(m({{1, 0}}), PositiveMask::Ones(1, 2), 1.0);
  const double expected = 0.5 * ((kLogOnePlusInvE + 0.0) + (kLogOnePlusE + 0.0));
  EXPECT_NEAR(mtm_pairwise(b), expected, 1e-12);
}

TEST(MtmPairwise, EmptyEdgeSetRejected) {
  EXPECT_THROW(mtm_pairwise(with_mask(m({{1}}), PositiveMask::Zero(1, 1), 1.0)), ValidationError);
}

TEST(Losses, PermutationInvariantAndNonNegative) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto r = 1 + rng.uniform_index(5), c = 1 + rng.uniform_index(5);
    const auto b = with_mask(testing::random_matrix(rng, r, c), testing::random_cover_mask(rng, r, c), 0.3);
    std::vector<int> rp(r), cp(c);
    std::iota(rp.begin(), rp.end(), 0);
    std::iota(cp.begin(), cp.end(), 0);
    std::reverse(rp.begin(), rp.end());
    std::rotate(cp.begin(), cp.begin() + 1, cp.end());
    BatchSimilarityMatrix p = b;
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        p.values(i, j) = b.values(rp[i], cp[j]);
        p.positives(i, j) = b.positives(rp[i], cp[j]);
      }
    }
    for (const auto kind : {LossKind::kMtmAsymmetric, LossKind::kMtmSymmetric, LossKind::kMtmPairwise}) {
      const double loss = evaluate_loss(kind, b).loss;
      EXPECT_GE(loss, 0.0);
      EXPECT_NEAR(evaluate_loss(kind, p).loss, loss, 1e-12);
    }
  }
}

TEST(Losses, RaisingAPositiveNeverIncreasesLossOneToOne) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 1 + rng.uniform_index(5);
    auto b = BatchSimilarityMatrix::diagonal(testing::random_matrix(rng, n, n), 0.5);
    for (const auto kind : {LossKind::kInfoNce, LossKind::kMtmAsymmetric, LossKind::kMtmSymmetric,
                            LossKind::kMtmPairwise}) {
      const double before = evaluate_loss(kind, b).loss;
      for (std::size_t i = 0; i < n; ++i) {
        auto raised = b;
        raised.values(i, i) += 0.25;
        EXPECT_LE(evaluate_loss(kind, raised).loss, before + 1e-12);
      }
    }
  }
}

TEST(Losses, RaisingADominantPositiveCanIncreaseMultiPositiveLoss) {
  // d/dv1 of the averaged row term is p1 - 1/2 > 0 once y1 holds most of the mass.
  const auto b = with_mask(m({{1, 0}}), PositiveMask::Ones(1, 2), 1.0);
  auto raised = b;
  raised.values(0, 0) += 0.25;
  EXPECT_GT(mtm_asymmetric(raised), mtm_asymmetric(b));
  // Raising every positive of the node together never hurts.
  raised.values(0, 1) += 0.25;
  EXPECT_LE(mtm_asymmetric(raised), mtm_asymmetric(b) + 1e-12);
}

TEST(Losses, SimilarityGradientMatchesFiniteDifferences) {
  Rng rng(9);
  for (const auto kind : {LossKind::kInfoNce, LossKind::kMtmAsymmetric, LossKind::kMtmSymmetric,
                          LossKind::kMtmPairwise}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto r = 1 + rng.uniform_index(4);
      const auto c = kind == LossKind::kInfoNce ? r : 1 + rng.uniform_index(4);
      const auto mask = kind == LossKind::kInfoNce ? PositiveMask(PositiveMask::Identity(r, r))
                                                   : testing::random_cover_mask(rng, r, c);
      auto b = with_mask(testing::random_matrix(rng, r, c), mask, 0.3);
      const auto result = evaluate_loss(kind, b);
      for (Eigen::Index i = 0; i < b.values.size(); ++i) {
        const double keep = b.values.data()[i];
        b.values.data()[i] = keep + 1e-6;
        const double up = evaluate_loss(kind, b).loss;
        b.values.data()[i] = keep - 1e-6;
        const double down = evaluate_loss(kind, b).loss;
        b.values.data()[i] = keep;
        EXPECT_NEAR(result.d_values.data()[i], (up - down) / 2e-6, 1e-6) << to_string(kind);
      }
    }
  }
}

TEST(MtmTotal, WeightsProjectAndScale) {
  Rng rng(10);
  PerGraphBatches batches;
  for (auto& b : batches) {
    b = with_mask(testing::random_matrix(rng, 3, 3), testing::random_cover_mask(rng, 3, 3), 0.1);
  }
  const double a = mtm_symmetric(*batches[0]);
  const double v = mtm_symmetric(*batches[1]);
  const double c = mtm_symmetric(*batches[2]);
  EXPECT_NEAR(mtm_total(batches, {1, 0, 0}), a, 1e-12);
  EXPECT_NEAR(mtm_total(batches, LossWeights{}), a + 0.5 * v + 0.5 * c, 1e-12);
  EXPECT_NEAR(mtm_total(batches, {2, 1, 1}), 2 * mtm_total(batches, LossWeights{}), 1e-12);
  EXPECT_THROW(mtm_total(batches, {0, 0, 0}), ValidationError);

  PerGraphBatches only_job;
  only_job[0] = batches[0];
  EXPECT_NEAR(mtm_total(only_job, {1, 0, 0}), a, 1e-12);
}

TEST(Objective, SinglePairHasZeroGradient) {
  const auto params = init_params(1, 64, 4, true);
  GraphBatch batch{GraphKind::kJob, {"data analysis"}, {"data scientist"}, PositiveMask::Ones(1, 1)};
  ObjectiveConfig config;
  config.loss = LossKind::kInfoNce;
  config.weights = {1, 0, 0};
  const auto result = loss_gradients(params, std::vector<GraphBatch>{batch}, config);
  EXPECT_EQ(result.loss, 0.0);
  EXPECT_EQ(result.grads.table.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(result.grads.projection.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(result.grads.bias.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Objective, MaxSimRejectedForTraining) {
  ObjectiveConfig config;
  config.interaction.kind = ScorerKind::kMaxSim;
  EXPECT_THROW(config.validate(), ValidationError);
}

TEST(Objective, GradientLinearInWeights) {
  auto inst = testing::random_gradient_instance(3, LossKind::kMtmSymmetric, ScorerKind::kSoftmaxToken, true);
  const auto base = loss_gradients(inst.params, inst.batches, inst.config);
  auto scaled = inst.config;
  scaled.weights.sentence *= 3;
  const auto more = loss_gradients(inst.params, inst.batches, scaled);
  auto only_sentence = inst.config;
  only_sentence.weights = {0, inst.config.weights.sentence, 0};
  const auto part = loss_gradients(inst.params, inst.batches, only_sentence);
  const Matrix expected = base.grads.table + 2 * part.grads.table;
  EXPECT_LT((more.grads.table - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Objective, DisabledGraphTextsGetNoGradient) {
  const auto params = init_params(2, 4096, 4, false);
  std::vector<GraphBatch> batches = {
      {GraphKind::kJob, {"alpha", "beta"}, {"gamma", "delta"}, PositiveMask::Identity(2, 2)},
      {GraphKind::kSentence, {"alpha", "beta"}, {"epsilon", "zeta"}, PositiveMask::Identity(2, 2)}};
  ObjectiveConfig config;
  config.weights = {1, 0, 0};
  const auto result = loss_gradients(params, batches, config);
  const auto tok = params.tokenizer();
  for (const char* word : {"epsilon", "zeta"}) {
    EXPECT_EQ(result.grads.table.row(tok.token_id(word)).norm(), 0.0) << word;
  }
  EXPECT_GT(result.grads.table.row(tok.token_id("gamma")).norm(), 0.0);
}

struct GradCase {
  LossKind loss;
  bool total;
  ScorerKind scorer;
};

class ObjectiveGradient : public ::testing::TestWithParam<GradCase> {};

TEST_P(ObjectiveGradient, MatchesFiniteDifferences) {
  const auto c = GetParam();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = testing::random_gradient_instance(seed, c.loss, c.scorer, c.total);
    const auto check = testing::check_gradients(inst);
    EXPECT_LT(check.max_relative_error, 1e-4) << "seed " << seed;
    EXPECT_TRUE(check.unused_rows_zero);
  }
}

std::vector<GradCase> all_cases() {
  std::vector<GradCase> out;
  for (const auto scorer : {ScorerKind::kSoftmaxToken, ScorerKind::kMeanCosine, ScorerKind::kSoftmaxYMean}) {
    for (const auto loss : {LossKind::kInfoNce, LossKind::kMtmAsymmetric, LossKind::kMtmSymmetric,
                            LossKind::kMtmPairwise}) {
      out.push_back({loss, false, scorer});
    }
    out.push_back({LossKind::kMtmSymmetric, true, scorer});
  }
  return out;
}

INSTANTIATE_TEST_SUITE_P(LossByScorer, ObjectiveGradient, ::testing::ValuesIn(all_cases()),
                         [](const auto& info) {
                           return std::string(info.param.total ? "mtm_total" : to_string(info.param.loss)) +
                                  "_" + std::string(to_string(info.param.scorer));
                         });

}  // namespace
}  // namespace uwe

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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uwe/contrastive.hpp"
#include "uwe/corpus.hpp"
#include "uwe/encoder.hpp"
#include "uwe/interaction.hpp"
#include "uwe/metrics.hpp"
#include "uwe/sampler.hpp"

namespace uwe {

/// Peak learning rate stated with the experimental setup.
inline constexpr double kPeakLearningRate = 8e-5;
/// Peak learning rate marked in the hyper-parameter grid.
inline constexpr double kPeakLearningRateGrid = 8e-4;

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

struct TrainConfig {
  std::size_t steps = 600;
  std::size_t batch_skills = 512;
  double peak_lr = kPeakLearningRate;
  double warmup_fraction = 0.1;
  std::size_t eval_every = 50;
  LossWeights weights;
  std::array<double, kGraphCount> temperatures = kDefaultLossTemperatures;
  LossKind loss = LossKind::kMtmSymmetric;
  InteractionConfig interaction;
  std::uint64_t seed = 0;
  AdamWConfig optimizer;
  double augment_probability = kDefaultAugmentProbability;
  std::optional<std::size_t> max_tokens = kDefaultMaxTokens;
  /// Return the best validation checkpoint; otherwise the final one.
  bool keep_best = true;

  void validate() const;
  ObjectiveConfig objective() const;
};

/// Linear warmup from 0 to peak over ceil(warmup_fraction * steps) steps,
/// then linear decay to 0 at `steps`.
double lr_at(std::size_t step, const TrainConfig& config);

struct ValidationResult {
  std::vector<TaskMetrics> tasks;
  double task_average_map = 0.0;
};

/// Ranks every validation task with freshly built caches and macro-averages
/// MAP over task groups.
ValidationResult evaluate_validation(const EncoderParams& params,
                                     const InteractionConfig& interaction,
                                     std::span<const TaskSpec> tasks,
                                     std::optional<std::size_t> max_tokens);

struct CheckpointRecord {
  std::size_t step = 0;
  EncoderParams params;
  ValidationResult validation;
};

struct HistoryRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
  std::optional<ValidationResult> eval;
};

struct TrainResult {
  CheckpointRecord initial;  // theta_0 and its validation
  CheckpointRecord best;     // best (or final) checkpoint
  EncoderParams final_params;
  std::vector<HistoryRecord> history;
  /// Objective on a fixed probe batch before and after training.
  double probe_loss_initial = 0.0;
  double probe_loss_final = 0.0;
};

using TrainObserver = std::function<void(const HistoryRecord&)>;

/// Runs `steps` AdamW updates on the weighted multi-graph objective.
/// Evaluation happens at step 0, every `eval_every` steps, and at the last
/// step. Throws RuntimeError with the step number on a non-finite loss.
TrainResult train(const TrainConfig& config, EncoderParams initial, const SkillGraphs& graphs,
                  std::span<const TaskSpec> validation, const TrainObserver& observer = {});

/// MAP after training minus MAP before.
double knowledge_gain(double map_after, double map_before);

/// One JSON object per line: {step, loss, lr, eval?, task_avg_map?}.
std::string history_record_json(const HistoryRecord& record);

}  // namespace uwe

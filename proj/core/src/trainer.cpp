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

#include "uwe/trainer.hpp"

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "uwe/error.hpp"
#include "uwe/ranker.hpp"

namespace uwe {
namespace {

struct AdamWState {
  ParamGrads first;
  ParamGrads second;
  std::size_t t = 0;
};

template <typename Block>
void adamw_block(Block& param, const Block& grad, Block& m, Block& v, double lr,
                 const AdamWConfig& opt, double bias1, double bias2) {
  m = opt.beta1 * m + (1.0 - opt.beta1) * grad;
  v = opt.beta2 * v + (1.0 - opt.beta2) * grad.cwiseProduct(grad);
  const auto m_hat = m.array() / bias1;
  const auto v_hat = v.array() / bias2;
  param.array() -= lr * (m_hat / (v_hat.sqrt() + opt.epsilon) + opt.weight_decay * param.array());
}

void adamw_step(EncoderParams& params, const ParamGrads& grads, AdamWState& state, double lr,
                const AdamWConfig& opt) {
  ++state.t;
  const double bias1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.t));
  const double bias2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.t));
  adamw_block(params.table, grads.table, state.first.table, state.second.table, lr, opt, bias1,
              bias2);
  if (params.has_projection) {
    adamw_block(params.projection, grads.projection, state.first.projection,
                state.second.projection, lr, opt, bias1, bias2);
    adamw_block(params.bias, grads.bias, state.first.bias, state.second.bias, lr, opt, bias1,
                bias2);
  }
}

SamplerConfig sampler_config(const TrainConfig& config) {
  SamplerConfig out;
  out.batch_skills = config.batch_skills;
  out.seed = config.seed;
  out.augment_probability = config.augment_probability;
  for (const auto g : kAllGraphs) {
    out.enabled[static_cast<std::size_t>(g)] = config.weights[g] > 0.0;
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (steps == 0) throw ValidationError("steps must be at least 1");
  if (eval_every == 0) throw ValidationError("eval_every must be at least 1");
  if (batch_skills == 0) throw ValidationError("batch_skills must be at least 1");
  if (!(peak_lr > 0.0)) throw ValidationError("peak_lr must be positive");
  if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0)) {
    throw ValidationError("warmup_fraction must lie in (0, 1)");
  }
  if (!(optimizer.weight_decay >= 0.0)) throw ValidationError("weight_decay must be >= 0");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) ||
      !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0) || !(optimizer.epsilon > 0.0)) {
    throw ValidationError("invalid AdamW coefficients");
  }
  objective().validate();
}

ObjectiveConfig TrainConfig::objective() const {
  ObjectiveConfig out;
  out.loss = loss;
  out.interaction = interaction;
  out.weights = weights;
  out.temperatures = temperatures;
  out.max_tokens = max_tokens;
  return out;
}

double lr_at(std::size_t step, const TrainConfig& config) {
  const auto total = config.steps;
  const auto warmup = static_cast<std::size_t>(
      std::ceil(config.warmup_fraction * static_cast<double>(total)));
  if (step >= total) return 0.0;
  if (step <= warmup) {
    return warmup == 0 ? config.peak_lr
                       : config.peak_lr * static_cast<double>(step) / static_cast<double>(warmup);
  }
  return config.peak_lr * static_cast<double>(total - step) /
         static_cast<double>(total - warmup);
}

ValidationResult evaluate_validation(const EncoderParams& params,
                                     const InteractionConfig& interaction,
                                     std::span<const TaskSpec> tasks,
                                     std::optional<std::size_t> max_tokens) {
  ValidationResult out;
  if (tasks.empty()) return out;
  const Ranker ranker(params, interaction, max_tokens);
  for (const auto& task : tasks) {
    const auto cache = build_cache(params, *task.target_space, max_tokens);
    out.tasks.push_back(evaluate_task(task, rank_task(task, ranker, cache)));
  }
  out.task_average_map = macro_aggregate(out.tasks).map;
  return out;
}

TrainResult train(const TrainConfig& config, EncoderParams initial, const SkillGraphs& graphs,
                  std::span<const TaskSpec> validation, const TrainObserver& observer) {
  config.validate();
  initial.validate();
  const BatchSampler sampler(graphs, sampler_config(config));
  const auto objective = config.objective();
  const auto& skills = *graphs.skills;

  TrainResult result;
  EncoderParams params = std::move(initial);
  const auto probe = sampler.sample(0).graph_batches(skills);
  const auto validate_at = [&] {
    return evaluate_validation(params, config.interaction, validation, config.max_tokens);
  };

  result.probe_loss_initial = objective_loss(params, probe, objective);
  result.initial = {0, params, validate_at()};
  {
    HistoryRecord record{0, result.probe_loss_initial, 0.0, result.initial.validation};
    if (observer) observer(record);
    result.history.push_back(std::move(record));
  }

  std::optional<CheckpointRecord> best;
  AdamWState state{ParamGrads::zeros_like(params), ParamGrads::zeros_like(params), 0};
  for (std::size_t step = 1; step <= config.steps; ++step) {
    const auto batch = sampler.sample(step).graph_batches(skills);
    ObjectiveResult objective_result;
    try {
      objective_result = loss_gradients(params, batch, objective);
    } catch (const RuntimeError& e) {
      throw RuntimeError("step " + std::to_string(step) + ": " + e.what());
    }
    if (!std::isfinite(objective_result.loss)) {
      throw RuntimeError("non-finite loss at step " + std::to_string(step));
    }
    const double lr = lr_at(step, config);
    adamw_step(params, objective_result.grads, state, lr, config.optimizer);
    if (!params.table.allFinite() || !params.projection.allFinite() || !params.bias.allFinite()) {
      throw RuntimeError("non-finite parameters after update at step " + std::to_string(step));
    }

    HistoryRecord record{step, objective_result.loss, lr, std::nullopt};
    if (step % config.eval_every == 0 || step == config.steps) {
      record.eval = validate_at();
      const bool better = !best || record.eval->task_average_map >
                                       best->validation.task_average_map;
      // Without keep_best the last evaluation, i.e. the final step, wins.
      if (better || !config.keep_best) best = CheckpointRecord{step, params, *record.eval};
    }
    if (observer) observer(record);
    result.history.push_back(std::move(record));
  }

  result.probe_loss_final = objective_loss(params, probe, objective);
  result.final_params = params;
  result.best = std::move(*best);
  return result;
}

double knowledge_gain(double map_after, double map_before) { return map_after - map_before; }

std::string history_record_json(const HistoryRecord& record) {
  nlohmann::ordered_json doc;
  doc["step"] = record.step;
  doc["loss"] = record.loss;
  doc["lr"] = record.lr;
  if (record.eval) {
    nlohmann::ordered_json eval = nlohmann::ordered_json::object();
    for (const auto& task : record.eval->tasks) {
      eval[task.task] = {{"map", task.map}, {"rp_at_10", task.rp_at_10}};
    }
    doc["eval"] = std::move(eval);
    doc["task_avg_map"] = record.eval->task_average_map;
  }
  return doc.dump();
}

}  // namespace uwe

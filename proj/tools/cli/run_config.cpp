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

#include "run_config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "uwe/error.hpp"

namespace uwe::cli {
namespace {

using nlohmann::json;

const json* find(const json& object, const char* key) {
  const auto it = object.find(key);
  return it == object.end() ? nullptr : &*it;
}

template <typename T>
void read(const json& object, const char* key, T& out) {
  if (const auto* value = find(object, key)) {
    try {
      out = value->get<T>();
    } catch (const json::exception&) {
      throw ValidationError(std::string("config field \"") + key + "\" has the wrong type");
    }
  }
}

std::filesystem::path read_path(const json& object, const char* key,
                                const std::filesystem::path& base, bool required) {
  const auto* value = find(object, key);
  if (!value) {
    if (required) throw ValidationError(std::string("config is missing path \"") + key + "\"");
    return {};
  }
  if (!value->is_string()) {
    throw ValidationError(std::string("config path \"") + key + "\" must be a string");
  }
  const std::filesystem::path path(value->get<std::string>());
  return path.is_absolute() ? path : base / path;
}

void read_per_graph(const json& object, const char* key, std::array<double, kGraphCount>& out) {
  const auto* block = find(object, key);
  if (!block) return;
  if (!block->is_object()) throw ValidationError(std::string("\"") + key + "\" must be an object");
  for (const auto g : kAllGraphs) {
    read(*block, std::string(to_string(g)).c_str(), out[static_cast<std::size_t>(g)]);
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  const json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw ValidationError("malformed run config");

  RunConfig config;
  auto& train = config.train;
  if (!find(doc, "seed")) throw ValidationError("run config requires \"seed\"");
  read(doc, "seed", train.seed);

  const auto* data = find(doc, "data");
  if (!data || !data->is_object()) throw ValidationError("run config requires a \"data\" object");

  if (const auto* loss = find(doc, "loss")) {
    std::string kind = std::string(to_string(train.loss));
    read(*loss, "kind", kind);
    train.loss = parse_loss_kind(kind);
    std::array<double, kGraphCount> weights = {train.weights.job, train.weights.sentence,
                                               train.weights.alternative};
    read_per_graph(*loss, "weights", weights);
    train.weights = {weights[0], weights[1], weights[2]};
    read_per_graph(*loss, "temperatures", train.temperatures);
  }

  config.skills = read_path(*data, "skills", base_dir, true);
  const bool need_job = train.weights.job > 0.0;
  const bool need_sentence = train.weights.sentence > 0.0;
  const bool need_alternative = train.weights.alternative > 0.0;
  config.jobs = read_path(*data, "jobs", base_dir, need_job);
  config.sentences = read_path(*data, "sentences", base_dir, need_sentence);
  config.alternatives = read_path(*data, "alternatives", base_dir, need_alternative);
  const auto* graphs = find(*data, "graphs");
  if (!graphs || !graphs->is_object()) throw ValidationError("\"data.graphs\" must be an object");
  config.job_graph = read_path(*graphs, "job", base_dir, need_job);
  config.sentence_graph = read_path(*graphs, "sentence", base_dir, need_sentence);
  config.alternative_graph = read_path(*graphs, "alternative", base_dir, need_alternative);
  if (const auto* validation = find(*data, "validation")) {
    if (!validation->is_array()) throw ValidationError("\"data.validation\" must be an array");
    for (const auto& entry : *validation) {
      if (!entry.is_string()) throw ValidationError("validation entries must be paths");
      const std::filesystem::path path(entry.get<std::string>());
      config.validation_tasks.push_back(path.is_absolute() ? path : base_dir / path);
    }
  }

  if (const auto* encoder = find(doc, "encoder")) {
    read(*encoder, "vocab_size", config.encoder.vocab_size);
    read(*encoder, "dim", config.encoder.dim);
    read(*encoder, "projection", config.encoder.projection);
    if (find(*encoder, "init_params")) {
      config.encoder.init_params = read_path(*encoder, "init_params", base_dir, true);
    }
  }

  if (const auto* block = find(doc, "train")) {
    read(*block, "steps", train.steps);
    read(*block, "batch_skills", train.batch_skills);
    read(*block, "peak_lr", train.peak_lr);
    read(*block, "warmup_fraction", train.warmup_fraction);
    read(*block, "eval_every", train.eval_every);
    read(*block, "keep_best", train.keep_best);
    read(*block, "augment_probability", train.augment_probability);
    if (const auto* max_tokens = find(*block, "max_tokens")) {
      if (max_tokens->is_null()) {
        train.max_tokens.reset();
      } else {
        std::size_t value = 0;
        read(*block, "max_tokens", value);
        train.max_tokens = value;
      }
    }
    if (const auto* opt = find(*block, "optimizer")) {
      read(*opt, "beta1", train.optimizer.beta1);
      read(*opt, "beta2", train.optimizer.beta2);
      read(*opt, "epsilon", train.optimizer.epsilon);
      read(*opt, "weight_decay", train.optimizer.weight_decay);
    }
  }

  if (const auto* interaction = find(doc, "interaction")) {
    std::string kind = std::string(to_string(train.interaction.kind));
    read(*interaction, "kind", kind);
    train.interaction.kind = parse_scorer_kind(kind);
    read(*interaction, "temperature", train.interaction.temperature);
  }

  config.output_dir = read_path(doc, "output_dir", base_dir, false);
  if (config.output_dir.empty()) config.output_dir = base_dir / "run";
  train.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_run_config(buffer.str(), path.parent_path());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

SkillGraphs load_skill_graphs(const RunConfig& config) {
  SkillGraphs graphs;
  graphs.skills = std::make_shared<const TextSpace>(load_space(config.skills, SpaceRole::kSkill));
  const auto load = [&](GraphKind g, const std::filesystem::path& space_path,
                        const std::filesystem::path& graph_path, SpaceRole role) {
    if (space_path.empty() || graph_path.empty()) return;
    auto targets = std::make_shared<const TextSpace>(load_space(space_path, role));
    graphs.graphs[static_cast<std::size_t>(g)] =
        load_graph(graph_path, graphs.skills, std::move(targets));
  };
  load(GraphKind::kJob, config.jobs, config.job_graph, SpaceRole::kJob);
  load(GraphKind::kSentence, config.sentences, config.sentence_graph,
       SpaceRole::kVacancySentence);
  load(GraphKind::kAlternative, config.alternatives, config.alternative_graph,
       SpaceRole::kSkillAlternative);
  return graphs;
}

}  // namespace uwe::cli

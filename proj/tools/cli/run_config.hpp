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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uwe/sampler.hpp"
#include "uwe/trainer.hpp"

namespace uwe::cli {

struct EncoderSettings {
  std::uint32_t vocab_size = 4096;
  std::uint32_t dim = 32;
  bool projection = false;
  std::optional<std::filesystem::path> init_params;  // start from a checkpoint
};

/// A single JSON document describing a training run. Paths are resolved
/// against the config file's directory.
struct RunConfig {
  std::filesystem::path skills;
  std::filesystem::path jobs;
  std::filesystem::path sentences;
  std::filesystem::path alternatives;
  std::filesystem::path job_graph;
  std::filesystem::path sentence_graph;
  std::filesystem::path alternative_graph;
  std::vector<std::filesystem::path> validation_tasks;
  EncoderSettings encoder;
  TrainConfig train;
  std::filesystem::path output_dir;
};

/// Throws ValidationError on missing or malformed fields; "seed" is required.
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Loads spaces and graphs; graphs with zero loss weight may be omitted from
/// the config.
SkillGraphs load_skill_graphs(const RunConfig& config);

}  // namespace uwe::cli

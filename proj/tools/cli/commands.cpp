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

#include "cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "run_config.hpp"
#include "uwe/corpus.hpp"
#include "uwe/encoder.hpp"
#include "uwe/error.hpp"
#include "uwe/interaction.hpp"
#include "uwe/metrics.hpp"
#include "uwe/ranker.hpp"
#include "uwe/trainer.hpp"

namespace uwe::cli {
namespace {

namespace fs = std::filesystem;

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::string format_score(double score) {
  if (score == kExcludedScore) return "-inf";
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.9g", score);
  return buffer;
}

struct ScorerOptions {
  std::string scorer = "softmax";
  double temperature = kDefaultInteractionTemperature;
  std::optional<std::size_t> max_tokens;

  void add_to(CLI::App& app) {
    app.add_option("--scorer", scorer, "softmax | maxsim | mean_cosine | softmax_ymean")
        ->capture_default_str();
    app.add_option("--tau", temperature, "Soft late-interaction temperature")
        ->capture_default_str();
    app.add_option("--max-tokens", max_tokens, "Token budget per text");
  }
  InteractionConfig config() const {
    InteractionConfig out{parse_scorer_kind(scorer), temperature};
    out.validate();
    return out;
  }
};

/// Caches aligned with tasks: none (built from params), one shared file, or
/// one file per task.
std::vector<TargetCache> caches_for(const std::vector<TaskSpec>& tasks,
                                    const std::vector<std::string>& cache_paths,
                                    const EncoderParams& params,
                                    std::optional<std::size_t> max_tokens) {
  if (!cache_paths.empty() && cache_paths.size() != 1 && cache_paths.size() != tasks.size()) {
    throw ValidationError("--cache must be given once or once per --task");
  }
  std::vector<TargetCache> caches;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& space = *tasks[i].target_space;
    if (cache_paths.empty()) {
      caches.push_back(build_cache(params, space, max_tokens));
    } else {
      const auto& path = cache_paths.size() == 1 ? cache_paths[0] : cache_paths[i];
      caches.push_back(import_cache(load_cache(path), space, params.dim));
    }
  }
  return caches;
}

std::vector<TaskSpec> load_tasks(const std::vector<std::string>& paths) {
  std::vector<TaskSpec> tasks;
  for (const auto& path : paths) tasks.push_back(load_task(path));
  return tasks;
}

/// Reads `query<TAB>target<TAB>score<TAB>rank` rows back into a full matrix.
RankingMatrix read_rankings(const fs::path& path, const TaskSpec& task) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rankings '" + path.string() + "'");
  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> rows;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line.front() == '#') continue;
    std::istringstream fields(line);
    std::string query, target, score, rank;
    if (!std::getline(fields, query, '\t') || !std::getline(fields, target, '\t') ||
        !std::getline(fields, score, '\t') || !std::getline(fields, rank, '\t')) {
      throw ValidationError(path.string() + ": line " + std::to_string(line_number) +
                            ": expected 4 tab-separated fields");
    }
    const auto index = task.target_space->index_of(target);
    if (!index) {
      throw ValidationError(path.string() + ": line " + std::to_string(line_number) +
                            ": unknown target '" + target + "'");
    }
    rows[query].emplace_back(std::stoul(rank), *index);
  }
  RankingMatrix matrix;
  matrix.task = task.name;
  for (auto& [query, entries] : rows) {
    std::sort(entries.begin(), entries.end());
    RankedOutput row;
    row.query_id = query;
    for (const auto& [rank, index] : entries) row.ranking.push_back(static_cast<std::uint32_t>(index));
    matrix.rows.push_back(std::move(row));
  }
  return matrix;
}

std::vector<TaskMetrics> read_precomputed(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  const auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("tasks") ||
      !doc["tasks"].is_array()) {
    throw ValidationError(path.string() + ": expected {\"tasks\": [...]}");
  }
  const double scale = doc.value("unit", std::string("fraction")) == "percent" ? 0.01 : 1.0;
  std::vector<TaskMetrics> out;
  for (const auto& entry : doc["tasks"]) {
    try {
      TaskMetrics metrics;
      metrics.task = entry.at("task").get<std::string>();
      metrics.task_group = entry.value("group", metrics.task);
      metrics.map = scale * entry.at("map").get<double>();
      metrics.rp_at_10 = scale * entry.value("rp_at_10", 0.0);
      metrics.queries = entry.value("queries", std::size_t{1});
      out.push_back(std::move(metrics));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_init(std::uint32_t vocab, std::uint32_t dim, bool projection, std::uint64_t seed,
             const fs::path& out_path, std::ostream& out) {
  const auto params = init_params(seed, vocab, dim, projection);
  auto file = open_output(out_path);
  write_params(params, file);
  out << "vocab_size=" << vocab << " dim=" << dim << " projection=" << projection << '\n';
  return kExitOk;
}

struct CacheArgs {
  std::string space;
  std::string role;
  std::string params;
  std::string import;
  std::string out;
  std::optional<std::uint32_t> dim;
  std::optional<std::size_t> max_tokens;
};

int cmd_cache(const CacheArgs& args, std::ostream& out) {
  std::optional<SpaceRole> role;
  if (!args.role.empty()) role = parse_space_role(args.role);
  const auto space = load_space(args.space, role);
  TargetCache cache;
  if (!args.import.empty()) {
    const auto external = load_cache(args.import);
    cache = import_cache(external, space, args.dim.value_or(external.dim()));
  } else {
    const auto params = load_params(args.params);
    if (args.dim && *args.dim != params.dim) {
      throw ValidationError("encoder dim " + std::to_string(params.dim) +
                            " does not match --dim " + std::to_string(*args.dim));
    }
    cache = build_cache(params, space, args.max_tokens);
  }
  auto file = open_output(args.out);
  write_cache(cache, file);
  out << "entries=" << cache.size() << " dim=" << cache.dim() << '\n';
  return kExitOk;
}

struct RankArgs {
  std::string task;
  std::string cache;
  std::string params;
  ScorerOptions scorer;
  std::optional<std::size_t> topk;
  std::string out;
  std::size_t threads = 1;
};

int cmd_rank(const RankArgs& args, std::ostream& out) {
  const auto task = load_task(args.task);
  const auto params = load_params(args.params);
  const auto config = args.scorer.config();
  const std::vector<TaskSpec> tasks{task};
  const auto caches = caches_for(tasks, args.cache.empty() ? std::vector<std::string>{}
                                                           : std::vector<std::string>{args.cache},
                                 params, args.scorer.max_tokens);
  const Ranker ranker(params, config, args.scorer.max_tokens);
  const auto matrix = rank_task(task, ranker, caches.front(), args.threads);

  std::ofstream file;
  std::ostream* sink = &out;
  if (!args.out.empty()) {
    file = open_output(args.out);
    sink = &file;
  }
  const auto& targets = *task.target_space;
  for (const auto& row : matrix.rows) {
    const std::size_t depth = std::min(args.topk.value_or(row.ranking.size()), row.ranking.size());
    for (std::size_t r = 0; r < depth; ++r) {
      const auto j = row.ranking[r];
      *sink << row.query_id << '\t' << targets.at(j).id << '\t' << format_score(row.scores[j])
            << '\t' << (r + 1) << '\n';
    }
  }
  return kExitOk;
}

struct EvalArgs {
  std::vector<std::string> tasks;
  std::vector<std::string> rankings;
  std::vector<std::string> caches;
  std::string params;
  std::string precomputed;
  ScorerOptions scorer;
  std::string rp_mode = "min";
  std::string json;
};

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  EvaluationOptions options;
  if (args.rp_mode == "strict") {
    options.rp_mode = RPrecisionMode::kPrecisionAtMinRk;
  } else if (args.rp_mode != "min") {
    throw ValidationError("--rp-mode must be 'min' or 'strict'");
  }

  std::vector<TaskMetrics> per_task;
  if (!args.precomputed.empty()) {
    per_task = read_precomputed(args.precomputed);
  } else {
    const auto tasks = load_tasks(args.tasks);
    if (tasks.empty()) throw ValidationError("eval needs --task or --precomputed");
    if (!args.rankings.empty()) {
      if (args.rankings.size() != tasks.size()) {
        throw ValidationError("--rankings must be given once per --task");
      }
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        per_task.push_back(evaluate_task(tasks[i], read_rankings(args.rankings[i], tasks[i]),
                                         options));
      }
    } else {
      if (args.params.empty()) throw ValidationError("eval needs --rankings or --params");
      const auto params = load_params(args.params);
      const auto caches = caches_for(tasks, args.caches, params, args.scorer.max_tokens);
      const Ranker ranker(params, args.scorer.config(), args.scorer.max_tokens);
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        per_task.push_back(
            evaluate_task(tasks[i], rank_task(tasks[i], ranker, caches[i]), options));
      }
    }
  }
  const auto aggregate = macro_aggregate(per_task);
  out << metric_report_table(per_task, aggregate);
  if (!args.json.empty()) {
    auto file = open_output(args.json);
    file << metric_report_json(per_task, aggregate) << '\n';
  }
  return kExitOk;
}

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::optional<double> peak_lr;
  std::string out_dir;
};

int cmd_train(const TrainArgs& args, std::ostream& out) {
  auto config = load_run_config(args.config);
  if (args.seed) config.train.seed = *args.seed;
  if (args.steps) config.train.steps = *args.steps;
  if (args.peak_lr) config.train.peak_lr = *args.peak_lr;
  if (!args.out_dir.empty()) config.output_dir = args.out_dir;
  config.train.validate();

  const auto graphs = load_skill_graphs(config);
  std::vector<TaskSpec> validation;
  for (const auto& path : config.validation_tasks) validation.push_back(load_task(path));
  auto initial = config.encoder.init_params
                     ? load_params(*config.encoder.init_params)
                     : init_params(config.train.seed, config.encoder.vocab_size,
                                   config.encoder.dim, config.encoder.projection);

  fs::create_directories(config.output_dir);
  auto history = open_output(config.output_dir / "history.jsonl");
  const auto result = train(config.train, std::move(initial), graphs, validation,
                            [&](const HistoryRecord& record) {
                              history << history_record_json(record) << '\n';
                            });
  history.close();

  save_params(result.initial.params, config.output_dir / "initial.uwep");
  save_params(result.best.params, config.output_dir / "best.uwep");
  save_params(result.final_params, config.output_dir / "final.uwep");

  const double gain = knowledge_gain(result.best.validation.task_average_map,
                                     result.initial.validation.task_average_map);
  nlohmann::ordered_json summary;
  summary["steps"] = config.train.steps;
  summary["seed"] = config.train.seed;
  summary["best_step"] = result.best.step;
  summary["initial_task_avg_map"] = result.initial.validation.task_average_map;
  summary["best_task_avg_map"] = result.best.validation.task_average_map;
  summary["knowledge_gain"] = gain;
  summary["probe_loss_initial"] = result.probe_loss_initial;
  summary["probe_loss_final"] = result.probe_loss_final;
  auto summary_file = open_output(config.output_dir / "summary.json");
  summary_file << summary.dump(2) << '\n';

  char line[256];
  std::snprintf(line, sizeof(line),
                "best_step=%zu task_avg_map=%.1f initial_map=%.1f knowledge_gain=%+.1f "
                "loss %.4f -> %.4f\n",
                result.best.step, 100.0 * result.best.validation.task_average_map,
                100.0 * result.initial.validation.task_average_map, 100.0 * gain,
                result.probe_loss_initial, result.probe_loss_final);
  out << line;
  return kExitOk;
}

struct BenchArgs {
  std::vector<std::string> tasks;
  std::vector<std::string> caches;
  std::string params;
  ScorerOptions scorer;
  BenchOptions options;
  std::string out;
};

int cmd_bench(const BenchArgs& args, std::ostream& out) {
  const auto tasks = load_tasks(args.tasks);
  const auto params = load_params(args.params);
  const Ranker ranker(params, args.scorer.config(), args.scorer.max_tokens);
  // Cache construction stays outside the timed region.
  const auto caches = caches_for(tasks, args.caches, params, args.scorer.max_tokens);
  std::map<const TaskSpec*, const TargetCache*> cache_of;
  for (std::size_t i = 0; i < tasks.size(); ++i) cache_of[&tasks[i]] = &caches[i];

  const auto report = bench_latency(
      [&](const TaskSpec& task, std::size_t query) {
        const auto& item = task.query_space->at(query);
        ranker.rank_query(item.id, item.text, *cache_of.at(&task), task.exclude_self);
      },
      tasks, args.options);
  out << report.to_table();
  if (!args.out.empty()) {
    auto file = open_output(args.out);
    file << report.to_json() << '\n';
  }
  return kExitOk;
}

int cmd_merge_titles(const std::string& in_path, const std::string& out_path,
                     std::size_t max_profile, std::ostream& out) {
  std::ifstream in(in_path);
  if (!in) throw IoError("cannot open '" + in_path + "'");
  const auto records = parse_vacancy_records(in);
  const auto merged = dedup_merge_jobs(records, max_profile);
  auto file = open_output(out_path);
  write_merged_profiles(merged, file);
  out << "records=" << records.size() << " titles=" << merged.size() << '\n';
  return kExitOk;
}

int cmd_validate(const std::string& query_space, const std::string& target_space,
                 const std::string& graph, std::ostream& out) {
  const auto queries = load_space(query_space);
  const auto targets = load_space(target_space);
  const auto report = validate_graph(queries, targets, read_edge_list(graph));
  if (report.empty()) {
    out << "ok\n";
    return kExitOk;
  }
  out << report.to_string();
  return kExitInvalid;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unified work embeddings: contrastive training, ranking and evaluation", "uwe"};
  app.require_subcommand(1);

  std::uint32_t init_vocab = 4096;
  std::uint32_t init_dim = 32;
  bool init_projection = false;
  std::uint64_t init_seed = 0;
  std::string init_out;
  auto* init = app.add_subcommand("init", "Write freshly initialised encoder parameters");
  init->add_option("--vocab-size", init_vocab)->capture_default_str();
  init->add_option("--dim", init_dim)->capture_default_str();
  init->add_flag("--projection", init_projection, "Add an affine map after the lookup");
  init->add_option("--seed", init_seed)->required();
  init->add_option("--out", init_out)->required();

  CacheArgs cache_args;
  auto* cache = app.add_subcommand("cache", "Build a target-space embedding cache");
  cache->add_option("--space", cache_args.space)->required();
  cache->add_option("--role", cache_args.role);
  auto* cache_params = cache->add_option("--params", cache_args.params, "Encoder checkpoint");
  auto* cache_import =
      cache->add_option("--import", cache_args.import, "Externally produced UWEC embeddings");
  cache_params->excludes(cache_import);
  cache->add_option("--dim", cache_args.dim, "Expected embedding dimension");
  cache->add_option("--max-tokens", cache_args.max_tokens);
  cache->add_option("--out", cache_args.out)->required();

  RankArgs rank_args;
  auto* rank = app.add_subcommand("rank", "Rank every query of a task");
  rank->add_option("--task", rank_args.task)->required();
  rank->add_option("--cache", rank_args.cache);
  rank->add_option("--params", rank_args.params)->required();
  rank_args.scorer.add_to(*rank);
  rank->add_option("--topk", rank_args.topk);
  rank->add_option("--out", rank_args.out);
  rank->add_option("--threads", rank_args.threads)->capture_default_str();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Compute MAP / RP@10 and the task average");
  eval->add_option("--task", eval_args.tasks);
  eval->add_option("--rankings", eval_args.rankings, "TSV from `rank`, one per task");
  eval->add_option("--cache", eval_args.caches);
  eval->add_option("--params", eval_args.params);
  eval->add_option("--precomputed", eval_args.precomputed, "JSON with per-task metrics");
  eval_args.scorer.add_to(*eval);
  eval->add_option("--rp-mode", eval_args.rp_mode, "min | strict")->capture_default_str();
  eval->add_option("--json", eval_args.json, "Write the JSON report here");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train the encoder from a run config");
  train_cmd->add_option("--config", train_args.config)->required();
  train_cmd->add_option("--seed", train_args.seed);
  train_cmd->add_option("--steps", train_args.steps);
  train_cmd->add_option("--peak-lr", train_args.peak_lr);
  train_cmd->add_option("--out-dir", train_args.out_dir);

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Measure per-query ranking latency");
  bench->add_option("--task", bench_args.tasks)->required();
  bench->add_option("--cache", bench_args.caches);
  bench->add_option("--params", bench_args.params)->required();
  bench_args.scorer.add_to(*bench);
  bench->add_option("--warmup", bench_args.options.warmup)->capture_default_str();
  bench->add_option("--n", bench_args.options.measured)->capture_default_str();
  bench->add_option("--seed", bench_args.options.seed)->capture_default_str();
  bench->add_option("--out", bench_args.out);

  std::string merge_in;
  std::string merge_out;
  std::size_t max_profile = kDefaultMaxProfile;
  auto* merge = app.add_subcommand("merge-titles", "Deduplicate job titles and merge skills");
  merge->add_option("--in", merge_in)->required();
  merge->add_option("--out", merge_out)->required();
  merge->add_option("--max-profile", max_profile)->capture_default_str();

  std::string validate_queries;
  std::string validate_targets;
  std::string validate_graph_path;
  auto* validate = app.add_subcommand("validate", "Report problems in a graph file");
  validate->add_option("--query-space", validate_queries)->required();
  validate->add_option("--target-space", validate_targets)->required();
  validate->add_option("--graph", validate_graph_path)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*init) return cmd_init(init_vocab, init_dim, init_projection, init_seed, init_out, out);
    if (*cache) {
      if (cache_args.params.empty() && cache_args.import.empty()) {
        throw ValidationError("cache needs --params or --import");
      }
      return cmd_cache(cache_args, out);
    }
    if (*rank) return cmd_rank(rank_args, out);
    if (*eval) return cmd_eval(eval_args, out);
    if (*train_cmd) return cmd_train(train_args, out);
    if (*bench) return cmd_bench(bench_args, out);
    if (*merge) return cmd_merge_titles(merge_in, merge_out, max_profile, out);
    if (*validate) {
      return cmd_validate(validate_queries, validate_targets, validate_graph_path, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::kValidation ? kExitInvalid : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitInvalid;
}

}  // namespace uwe::cli

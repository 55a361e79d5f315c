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

#include "uwe/ranker.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <numeric>
#include <thread>

#include "binary_io.hpp"
#include "uwe/error.hpp"

namespace uwe {
namespace {

Matrix round_to_float(const Matrix& m) {
  return m.cast<float>().cast<double>();
}

}  // namespace

RankedOutput make_ranked_output(std::string query_id, std::vector<double> scores,
                                std::span<const std::string> target_ids,
                                std::optional<std::size_t> excluded) {
  if (scores.size() != target_ids.size()) {
    throw ValidationError("score count does not match target count");
  }
  if (excluded) scores.at(*excluded) = kExcludedScore;
  RankedOutput out;
  out.query_id = std::move(query_id);
  out.ranking.resize(scores.size());
  std::iota(out.ranking.begin(), out.ranking.end(), 0u);
  std::sort(out.ranking.begin(), out.ranking.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return target_ids[a] < target_ids[b];
  });
  out.scores = std::move(scores);
  return out;
}

// ---------------------------------------------------------------------------

TargetCache::TargetCache(std::string space_name, std::uint32_t dim,
                         std::vector<std::pair<std::string, Matrix>> entries)
    : space_name_(std::move(space_name)), dim_(dim) {
  if (dim_ == 0) throw ValidationError("cache dimension must be positive");
  ids_.reserve(entries.size());
  tokens_.reserve(entries.size());
  for (auto& [id, matrix] : entries) {
    if (id.empty()) throw ValidationError("cache entry with an empty id");
    if (id.size() > UINT16_MAX) throw ValidationError("cache id longer than 65535 bytes");
    if (!index_.emplace(id, ids_.size()).second) throw ValidationError("duplicate cache id '" + id + "'");
    if (matrix.rows() == 0) throw ValidationError("cache entry '" + id + "' has no tokens");
    if (matrix.cols() != dim_) {
      throw ValidationError("cache entry '" + id + "' has dim " +
                            std::to_string(matrix.cols()) + ", expected " +
                            std::to_string(dim_));
    }
    if (!matrix.allFinite()) {
      throw ValidationError("cache entry '" + id + "' has non-finite values");
    }
    ids_.push_back(std::move(id));
    tokens_.push_back(prepare_tokens(round_to_float(matrix)));
  }
}

std::optional<std::size_t> TargetCache::index_of(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool operator==(const TargetCache& a, const TargetCache& b) {
  if (a.dim_ != b.dim_ || a.ids_ != b.ids_) return false;
  for (std::size_t i = 0; i < a.tokens_.size(); ++i) {
    const auto& x = a.tokens_[i].raw;
    const auto& y = b.tokens_[i].raw;
    if (x.rows() != y.rows() ||
        !std::equal(x.data(), x.data() + x.size(), y.data(),
                    [](double p, double q) { return std::bit_cast<std::uint64_t>(p) ==
                                                    std::bit_cast<std::uint64_t>(q); })) {
      return false;
    }
  }
  return true;
}

TargetCache build_cache(const EncoderParams& params, const TextSpace& space,
                        std::optional<std::size_t> max_tokens) {
  const auto tokenizer = params.tokenizer();
  std::vector<std::pair<std::string, Matrix>> entries;
  entries.reserve(space.size());
  for (const auto& item : space.items()) {
    entries.emplace_back(item.id, encode(params, tokenizer(item.text, max_tokens)));
  }
  return TargetCache(space.name(), params.dim, std::move(entries));
}

TargetCache import_cache(const TargetCache& external, const TextSpace& space,
                         std::uint32_t expected_dim) {
  if (external.dim() != expected_dim) {
    throw ValidationError("imported embeddings have dim " + std::to_string(external.dim()) +
                          " but dim " + std::to_string(expected_dim) + " was expected");
  }
  std::vector<std::pair<std::string, Matrix>> entries;
  entries.reserve(space.size());
  for (const auto& item : space.items()) {
    const auto index = external.index_of(item.id);
    if (!index) {
      throw ValidationError("imported embeddings lack target '" + item.id + "'");
    }
    entries.emplace_back(item.id, external.tokens(*index).raw);
  }
  return TargetCache(space.name(), expected_dim, std::move(entries));
}

void write_cache(const TargetCache& cache, std::ostream& out) {
  out.write("UWEC", 4);
  detail::write_le<std::uint32_t>(out, kCacheFormatVersion);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cache.size()));
  detail::write_le<std::uint32_t>(out, cache.dim());
  for (std::size_t i = 0; i < cache.size(); ++i) {
    const auto& id = cache.ids()[i];
    const auto& raw = cache.tokens(i).raw;
    detail::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(raw.rows()));
    for (Eigen::Index k = 0; k < raw.size(); ++k) {
      detail::write_le<float>(out, static_cast<float>(raw.data()[k]));
    }
  }
  if (!out) throw IoError("failed writing cache");
}

TargetCache read_cache(std::istream& in, std::string space_name) {
  detail::expect_magic(in, "UWEC");
  const auto version = detail::read_le<std::uint32_t>(in, "version");
  if (version != kCacheFormatVersion) {
    throw ValidationError("unsupported UWEC version " + std::to_string(version));
  }
  const auto count = detail::read_le<std::uint32_t>(in, "entry count");
  const auto dim = detail::read_le<std::uint32_t>(in, "dim");
  std::vector<std::pair<std::string, Matrix>> entries;
  entries.reserve(count);
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto id_length = detail::read_le<std::uint16_t>(in, "id length");
    std::string id(id_length, '\0');
    if (!in.read(id.data(), id_length)) throw ValidationError("truncated cache id");
    const auto tokens = detail::read_le<std::uint32_t>(in, "token count");
    Matrix raw(tokens, dim);
    for (Eigen::Index k = 0; k < raw.size(); ++k) {
      raw.data()[k] = detail::read_le<float>(in, "embeddings");
    }
    entries.emplace_back(std::move(id), std::move(raw));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ValidationError("trailing bytes after cache entries");
  }
  return TargetCache(std::move(space_name), dim, std::move(entries));
}

void save_cache(const TargetCache& cache, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_cache(cache, out);
}

TargetCache load_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  try {
    return read_cache(in, path.stem().string());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

Ranker::Ranker(const EncoderParams& params, InteractionConfig config,
               std::optional<std::size_t> max_tokens)
    : params_(&params), config_(config), max_tokens_(max_tokens) {
  config_.validate();
}

std::vector<double> Ranker::score_all(std::string_view query_text,
                                      const TargetCache& cache) const {
  if (cache.dim() != params_->dim) {
    throw ValidationError("cache dim " + std::to_string(cache.dim()) +
                          " does not match encoder dim " + std::to_string(params_->dim));
  }
  const auto query = prepare_tokens(encode_text(*params_, query_text, max_tokens_));
  encodes_.fetch_add(1, std::memory_order_relaxed);
  std::vector<double> scores(cache.size());
  for (std::size_t j = 0; j < cache.size(); ++j) {
    scores[j] = score(config_, query, cache.tokens(j));
  }
  return scores;
}

RankedOutput Ranker::rank_query(std::string_view query_id, std::string_view query_text,
                                const TargetCache& cache, bool exclude_self) const {
  std::optional<std::size_t> excluded;
  if (exclude_self) excluded = cache.index_of(query_id);
  return make_ranked_output(std::string(query_id), score_all(query_text, cache), cache.ids(),
                            excluded);
}

RankedOutput Ranker::rank_query_by_id(std::string_view query_id, const TextSpace& queries,
                                      const TargetCache& cache, bool exclude_self) const {
  const auto index = queries.index_of(query_id);
  if (!index) {
    throw ValidationError("unknown query id '" + std::string(query_id) + "' in space '" +
                          queries.name() + "'");
  }
  return rank_query(query_id, queries.at(*index).text, cache, exclude_self);
}

RankingMatrix rank_task(const TaskSpec& task, const Ranker& ranker, const TargetCache& cache,
                        std::size_t threads) {
  if (cache.size() != task.target_space->size()) {
    throw ValidationError("cache for task '" + task.name + "' has " +
                          std::to_string(cache.size()) + " entries, target space has " +
                          std::to_string(task.target_space->size()));
  }
  for (std::size_t j = 0; j < cache.size(); ++j) {
    if (cache.ids()[j] != task.target_space->at(j).id) {
      throw ValidationError("cache order does not match target space of task '" +
                            task.name + "'");
    }
  }
  const auto& queries = *task.query_space;
  RankingMatrix matrix;
  matrix.task = task.name;
  matrix.rows.resize(queries.size());
  const auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < queries.size(); i += stride) {
      const auto& item = queries.at(i);
      matrix.rows[i] = ranker.rank_query(item.id, item.text, cache, task.exclude_self);
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, queries.size()));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  return matrix;
}

std::vector<double> score_direct(const EncoderParams& params, const InteractionConfig& config,
                                 std::string_view query_text, const TextSpace& targets,
                                 std::optional<std::size_t> max_tokens) {
  const Matrix query = encode_text(params, query_text, max_tokens);
  std::vector<double> scores;
  scores.reserve(targets.size());
  for (const auto& item : targets.items()) {
    scores.push_back(score(config, query, encode_text(params, item.text, max_tokens)));
  }
  return scores;
}

}  // namespace uwe

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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "uwe/corpus.hpp"
#include "uwe/encoder.hpp"
#include "uwe/interaction.hpp"
#include "uwe/ranking.hpp"

namespace uwe {

/// Token embeddings for a whole target space, in target-space order.
/// Entries are stored at float32 precision so that the in-memory cache and
/// its file form are bitwise identical.
class TargetCache {
 public:
  TargetCache() = default;
  /// Throws ValidationError on duplicate ids, empty matrices or a column
  /// count different from `dim`.
  TargetCache(std::string space_name, std::uint32_t dim,
              std::vector<std::pair<std::string, Matrix>> entries);

  const std::string& space_name() const noexcept { return space_name_; }
  std::uint32_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  std::span<const std::string> ids() const noexcept { return ids_; }
  const PreparedTokens& tokens(std::size_t index) const { return tokens_.at(index); }
  std::optional<std::size_t> index_of(std::string_view id) const;

  /// Ids and raw matrices compare bitwise.
  friend bool operator==(const TargetCache& a, const TargetCache& b);

 private:
  std::string space_name_;
  std::uint32_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<PreparedTokens> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

TargetCache build_cache(const EncoderParams& params, const TextSpace& space,
                        std::optional<std::size_t> max_tokens = std::nullopt);

/// Re-keys externally produced embeddings onto `space`: every space id must
/// be present, order follows the space, and the dimension must equal
/// `expected_dim`.
TargetCache import_cache(const TargetCache& external, const TextSpace& space,
                         std::uint32_t expected_dim);

// Cache files: "UWEC", u32 version, u32 entry count, u32 dim; per entry
// u16 id length, id bytes, u32 token count, token_count * dim float32.
inline constexpr std::uint32_t kCacheFormatVersion = 1;

void write_cache(const TargetCache& cache, std::ostream& out);
TargetCache read_cache(std::istream& in, std::string space_name = {});
void save_cache(const TargetCache& cache, const std::filesystem::path& path);
TargetCache load_cache(const std::filesystem::path& path);

/// Query-time scoring against a cache: one encoder pass per query.
class Ranker {
 public:
  Ranker(const EncoderParams& params, InteractionConfig config,
         std::optional<std::size_t> max_tokens = std::nullopt);

  std::vector<double> score_all(std::string_view query_text, const TargetCache& cache) const;

  /// With exclude_self, the target whose id equals query_id is masked.
  RankedOutput rank_query(std::string_view query_id, std::string_view query_text,
                          const TargetCache& cache, bool exclude_self) const;
  /// Looks the query text up in `queries`; throws ValidationError for an
  /// unknown id.
  RankedOutput rank_query_by_id(std::string_view query_id, const TextSpace& queries,
                                const TargetCache& cache, bool exclude_self) const;

  const EncoderParams& params() const noexcept { return *params_; }
  const InteractionConfig& config() const noexcept { return config_; }

  /// Number of query-side encoder passes so far.
  std::size_t query_encodes() const noexcept { return encodes_.load(); }

 private:
  const EncoderParams* params_;
  InteractionConfig config_;
  std::optional<std::size_t> max_tokens_;
  mutable std::atomic<std::size_t> encodes_{0};
};

/// Full ranking matrix over every query of the task. Rows are independent,
/// so `threads` only changes scheduling, never results.
RankingMatrix rank_task(const TaskSpec& task, const Ranker& ranker, const TargetCache& cache,
                        std::size_t threads = 1);

/// Reference path without a cache: encodes every target on the fly.
std::vector<double> score_direct(const EncoderParams& params, const InteractionConfig& config,
                                 std::string_view query_text, const TextSpace& targets,
                                 std::optional<std::size_t> max_tokens = std::nullopt);

}  // namespace uwe

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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace uwe {

enum class SpaceRole {
  kSkill,
  kJob,
  kVacancySentence,
  kSkillAlternative,
  kGeneric,
};

std::string_view to_string(SpaceRole role);
SpaceRole parse_space_role(std::string_view name);

struct TextItem {
  std::string id;
  std::string text;

  friend bool operator==(const TextItem&, const TextItem&) = default;
};

/// Ordered, id-unique collection of texts. Immutable once constructed.
class TextSpace {
 public:
  TextSpace() = default;
  /// Throws ValidationError on empty or duplicate ids and on empty texts.
  TextSpace(std::string name, SpaceRole role, std::vector<TextItem> items);

  const std::string& name() const noexcept { return name_; }
  SpaceRole role() const noexcept { return role_; }
  std::span<const TextItem> items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const TextItem& at(std::size_t index) const { return items_.at(index); }

  std::optional<std::size_t> index_of(std::string_view id) const;
  bool contains(std::string_view id) const { return index_of(id).has_value(); }

  friend bool operator==(const TextSpace& a, const TextSpace& b) {
    return a.name_ == b.name_ && a.role_ == b.role_ && a.items_ == b.items_;
  }

 private:
  std::string name_;
  SpaceRole role_ = SpaceRole::kGeneric;
  std::vector<TextItem> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

using SpacePtr = std::shared_ptr<const TextSpace>;

/// Reads a space from line-delimited JSON records {"id", "text"}. An optional
/// first line "#!{...}" carries {"name", "role"}. `role`, when given,
/// overrides the header. `name` defaults to the header name, then to the
/// file stem.
TextSpace parse_space(std::istream& in, std::string_view default_name,
                      std::optional<SpaceRole> role = std::nullopt);
TextSpace load_space(const std::filesystem::path& path,
                     std::optional<SpaceRole> role = std::nullopt);

void serialize_space(const TextSpace& space, std::ostream& out);
void save_space(const TextSpace& space, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Bipartite graphs

struct Edge {
  std::size_t query;
  std::size_t target;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Edge list as read from disk, before validation. Line numbers are 1-based.
struct RawEdgeList {
  struct Line {
    std::string query_id;
    std::string target_id;
    std::size_t line_number = 0;
  };
  std::vector<Line> lines;
};

RawEdgeList parse_edge_list(std::istream& in);
RawEdgeList read_edge_list(const std::filesystem::path& path);

/// G = (Q ∪ Y, D) with D stored deduplicated and sorted.
class BipartiteGraph {
 public:
  BipartiteGraph(SpacePtr query_space, SpacePtr target_space,
                 std::vector<Edge> edges);

  const TextSpace& query_space() const noexcept { return *query_space_; }
  const TextSpace& target_space() const noexcept { return *target_space_; }
  const SpacePtr& query_space_ptr() const noexcept { return query_space_; }
  const SpacePtr& target_space_ptr() const noexcept { return target_space_; }

  std::span<const Edge> edges() const noexcept { return edges_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  /// Y_q: target indices linked to query q, ascending.
  std::span<const std::size_t> targets_of(std::size_t query) const {
    return forward_.at(query);
  }
  /// Query indices linked to target y, ascending.
  std::span<const std::size_t> queries_of(std::size_t target) const {
    return backward_.at(target);
  }
  bool has_edge(std::size_t query, std::size_t target) const;

  /// Swaps the roles of queries and targets.
  BipartiteGraph transposed() const;

 private:
  SpacePtr query_space_;
  SpacePtr target_space_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> forward_;
  std::vector<std::vector<std::size_t>> backward_;
};

/// Builds a graph from id pairs. Duplicates are dropped; a dangling endpoint
/// throws ValidationError naming the id and its line.
BipartiteGraph build_graph(const RawEdgeList& raw, SpacePtr query_space,
                           SpacePtr target_space);
BipartiteGraph load_graph(const std::filesystem::path& path,
                          SpacePtr query_space, SpacePtr target_space);

struct GraphReport {
  struct Duplicate {
    std::string query_id;
    std::string target_id;
    std::size_t first_line = 0;
    std::size_t duplicate_line = 0;
  };
  struct Dangling {
    std::string id;
    bool is_query = false;
    std::size_t line_number = 0;
  };

  std::vector<std::string> isolated_queries;
  std::vector<Duplicate> duplicate_edges;
  std::vector<Dangling> dangling_ids;

  bool empty() const noexcept {
    return isolated_queries.empty() && duplicate_edges.empty() &&
           dangling_ids.empty();
  }
  /// Human-readable, one finding per line, grouped by category.
  std::string to_string() const;
};

GraphReport validate_graph(const TextSpace& query_space,
                           const TextSpace& target_space,
                           const RawEdgeList& raw);
/// Structural violations cannot exist in a built graph; only isolated
/// query nodes are reported.
GraphReport validate_graph(const BipartiteGraph& graph);

// ---------------------------------------------------------------------------
// Tasks

enum class LabelType { kOne, kMulti };

/// Query id -> relevant target ids. Relevance is binary.
using Qrels = std::map<std::string, std::vector<std::string>, std::less<>>;

Qrels parse_qrels(std::istream& in);
Qrels load_qrels(const std::filesystem::path& path);

/// A ranking task T(Q, Y) and its relevance labels.
struct TaskSpec {
  std::string name;
  SpacePtr query_space;
  SpacePtr target_space;
  Qrels qrels;
  LabelType label_type = LabelType::kMulti;
  bool exclude_self = false;
  std::string task_group;

  /// Throws ValidationError when a qrels id is not in its space or a
  /// single-label task has a query with != 1 relevant target.
  void validate() const;
};

/// Loads a JSON task manifest. Relative paths resolve against the
/// manifest's directory.
TaskSpec load_task(const std::filesystem::path& manifest);

// ---------------------------------------------------------------------------
// Job title deduplication

struct SkillPrediction {
  std::string skill_id;
  double confidence = 0.0;
};

struct RawVacancyRecord {
  std::string title;
  std::vector<SkillPrediction> skills;
};

struct MergedJobProfile {
  std::string title;
  /// Retained skills with their mean confidence over the duplicates that
  /// contain them; descending confidence, ties by skill id.
  std::vector<SkillPrediction> skills;
  std::size_t duplicate_count = 0;
};

inline constexpr std::size_t kDefaultMaxProfile = 200;

/// Merges records whose titles agree after case folding and whitespace
/// collapsing. A skill survives when it occurs in at least half of the
/// duplicates. Output follows first-seen order of the merged titles.
std::vector<MergedJobProfile> dedup_merge_jobs(
    std::span<const RawVacancyRecord> records,
    std::size_t max_profile = kDefaultMaxProfile);

/// Line-delimited JSON: {"title": str, "skills": [{"id": str, "confidence": x}]}
std::vector<RawVacancyRecord> parse_vacancy_records(std::istream& in);
void write_merged_profiles(std::span<const MergedJobProfile> profiles,
                           std::ostream& out);

}  // namespace uwe

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
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uwe {

/// Score carried by a target masked out of its own query's ranking.
inline constexpr double kExcludedScore = std::numeric_limits<double>::lowest();

/// One row of a ranking matrix.
struct RankedOutput {
  std::string query_id;
  std::vector<double> scores;          // target-space order
  std::vector<std::uint32_t> ranking;  // target indices, best first
};

/// Orders targets by descending score, ties by ascending target id. The
/// excluded index, if any, receives kExcludedScore.
RankedOutput make_ranked_output(std::string query_id, std::vector<double> scores,
                                std::span<const std::string> target_ids,
                                std::optional<std::size_t> excluded = std::nullopt);

struct RankingMatrix {
  std::string task;
  std::vector<RankedOutput> rows;  // query-space order
};

}  // namespace uwe

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
#include <string>
#include <vector>

#include "uwe/linalg.hpp"
#include "uwe/random.hpp"

namespace uwe::testing {

inline std::filesystem::path toy_dir() { return UWE_TOY_DATA_DIR; }

/// Scratch directory unique to the calling test binary, emptied on creation.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("uwe_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Entries uniform in [-1, 1).
inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = 2.0 * rng.uniform01() - 1.0;
  }
  return m;
}

inline const std::vector<std::string>& word_list() {
  static const std::vector<std::string> words = {
      "data",     "analysis", "python",  "cloud",    "design",  "sales",
      "nurse",    "care",     "finance", "account",  "welding", "metal",
      "teacher",  "lesson",   "driver",  "truck",    "chef",    "kitchen",
      "software", "test",     "legal",   "contract", "market",  "research"};
  return words;
}

/// Space-separated phrase of 1..max_words random words.
inline std::string random_phrase(Rng& rng, std::size_t max_words) {
  const auto& words = word_list();
  const std::size_t n = 1 + rng.uniform_index(max_words);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += words[rng.uniform_index(words.size())];
  }
  return out;
}

}  // namespace uwe::testing

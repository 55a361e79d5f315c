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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uwe/linalg.hpp"

namespace uwe {

/// Reserved id produced for texts without any token.
inline constexpr std::uint32_t kEmptyTokenId = 0;
/// Token budget used during training.
inline constexpr std::size_t kDefaultMaxTokens = 64;

struct TokenSequence {
  std::vector<std::uint32_t> ids;
  bool truncated = false;

  std::size_t size() const noexcept { return ids.size(); }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

/// Splits lowercased text into word tokens and single punctuation tokens.
/// Bytes >= 0x80 are treated as word characters.
std::vector<std::string> split_tokens(std::string_view text);

/// Hashed-vocabulary tokenizer. Id 0 is reserved for the empty sentinel, so
/// regular tokens map into [1, vocab_size).
class Tokenizer {
 public:
  explicit Tokenizer(std::uint32_t vocab_size);

  std::uint32_t vocab_size() const noexcept { return vocab_size_; }
  std::uint32_t token_id(std::string_view token) const noexcept;

  TokenSequence operator()(std::string_view text,
                           std::optional<std::size_t> max_tokens = std::nullopt) const;

 private:
  std::uint32_t vocab_size_;
};

/// Parameters of the reference encoder: a lookup table and an optional
/// affine map applied to every looked-up row (row = W x + b).
struct EncoderParams {
  std::uint32_t vocab_size = 0;
  std::uint32_t dim = 0;
  Matrix table;           // vocab_size x dim
  bool has_projection = false;
  Matrix projection;      // dim x dim, empty without projection
  Vector bias;            // dim, empty without projection

  Tokenizer tokenizer() const { return Tokenizer(vocab_size); }
  /// Throws ValidationError on inconsistent shapes or non-finite entries.
  void validate() const;

  friend bool operator==(const EncoderParams&, const EncoderParams&);
};

/// Table entries are i.i.d. N(0, 1/dim) drawn from a seeded generator. The
/// projection, when requested, starts at the identity with zero bias.
EncoderParams init_params(std::uint64_t seed, std::uint32_t vocab_size,
                          std::uint32_t dim, bool with_projection);

/// n x dim token matrix for a length-n sequence.
Matrix encode(const EncoderParams& params, const TokenSequence& tokens);
Matrix encode_text(const EncoderParams& params, std::string_view text,
                   std::optional<std::size_t> max_tokens = std::nullopt);

/// Gradient buffers with the same layout as EncoderParams.
struct ParamGrads {
  Matrix table;
  Matrix projection;
  Vector bias;

  static ParamGrads zeros_like(const EncoderParams& params);
  ParamGrads& operator+=(const ParamGrads& other);
  ParamGrads& operator*=(double factor);
};

/// Accumulates dL/dparams given dL/dE for one encoded sequence.
void encode_backward(const EncoderParams& params, const TokenSequence& tokens,
                     const Matrix& d_embeddings, ParamGrads& grads);

// Checkpoints: "UWEP", u32 version, u32 vocab_size, u32 dim, u8 projection
// flag, then little-endian float32 values (table, projection, bias).
inline constexpr std::uint32_t kParamsFormatVersion = 1;

void write_params(const EncoderParams& params, std::ostream& out);
EncoderParams read_params(std::istream& in);
void save_params(const EncoderParams& params, const std::filesystem::path& path);
EncoderParams load_params(const std::filesystem::path& path);

}  // namespace uwe

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

#include "uwe/encoder.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "binary_io.hpp"
#include "uwe/error.hpp"
#include "uwe/random.hpp"
#include "uwe/text_fold.hpp"

namespace uwe {
namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         c == '_' || c >= 0x80;
}

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

std::vector<std::string> split_tokens(std::string_view text) {
  const std::string folded = fold_case(text);
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : folded) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current.push_back(ch);
      continue;
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
    if (!is_space_byte(c) && c >= 0x21) tokens.emplace_back(1, ch);
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Tokenizer::Tokenizer(std::uint32_t vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size < 2) {
    throw ValidationError("vocab_size must be at least 2 (id 0 is reserved), got " +
                          std::to_string(vocab_size));
  }
}

std::uint32_t Tokenizer::token_id(std::string_view token) const noexcept {
  return 1 + static_cast<std::uint32_t>(fnv1a64(token) % (vocab_size_ - 1));
}

TokenSequence Tokenizer::operator()(std::string_view text,
                                    std::optional<std::size_t> max_tokens) const {
  if (max_tokens && *max_tokens == 0) {
    throw ValidationError("max_tokens must be positive");
  }
  TokenSequence sequence;
  for (const auto& token : split_tokens(text)) {
    if (max_tokens && sequence.ids.size() == *max_tokens) {
      sequence.truncated = true;
      break;
    }
    sequence.ids.push_back(token_id(token));
  }
  if (sequence.ids.empty()) sequence.ids.push_back(kEmptyTokenId);
  return sequence;
}

// ---------------------------------------------------------------------------

void EncoderParams::validate() const {
  if (vocab_size < 2 || dim < 1) {
    throw ValidationError("encoder params: invalid dimensions vocab=" +
                          std::to_string(vocab_size) + " dim=" + std::to_string(dim));
  }
  if (table.rows() != vocab_size || table.cols() != dim) {
    throw ValidationError("encoder params: table shape mismatch");
  }
  if (has_projection &&
      (projection.rows() != dim || projection.cols() != dim || bias.size() != dim)) {
    throw ValidationError("encoder params: projection shape mismatch");
  }
  if (!all_finite(table) || (has_projection && (!all_finite(projection) ||
                                                !bias.allFinite()))) {
    throw ValidationError("encoder params: non-finite entries");
  }
}

bool operator==(const EncoderParams& a, const EncoderParams& b) {
  if (a.vocab_size != b.vocab_size || a.dim != b.dim ||
      a.has_projection != b.has_projection || a.table != b.table) {
    return false;
  }
  return !a.has_projection || (a.projection == b.projection && a.bias == b.bias);
}

EncoderParams init_params(std::uint64_t seed, std::uint32_t vocab_size,
                          std::uint32_t dim, bool with_projection) {
  if (vocab_size < 2 || dim < 1) {
    throw ValidationError("init_params: invalid dimensions vocab=" +
                          std::to_string(vocab_size) + " dim=" + std::to_string(dim));
  }
  EncoderParams params;
  params.vocab_size = vocab_size;
  params.dim = dim;
  params.table.resize(vocab_size, dim);

  // Box-Muller on the hand-mapped uniforms keeps draws platform independent.
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  double* data = params.table.data();
  const auto count = static_cast<std::size_t>(params.table.size());
  for (std::size_t i = 0; i < count; i += 2) {
    const double u1 = 1.0 - rng.uniform01();  // (0, 1]
    const double u2 = rng.uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    data[i] = scale * radius * std::cos(angle);
    if (i + 1 < count) data[i + 1] = scale * radius * std::sin(angle);
  }

  params.has_projection = with_projection;
  if (with_projection) {
    params.projection = Matrix::Identity(dim, dim);
    params.bias = Vector::Zero(dim);
  }
  return params;
}

Matrix encode(const EncoderParams& params, const TokenSequence& tokens) {
  Matrix out(static_cast<Eigen::Index>(tokens.size()), params.dim);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto id = tokens.ids[i];
    if (id >= params.vocab_size) {
      throw ValidationError("token id " + std::to_string(id) +
                            " out of range for vocab_size " +
                            std::to_string(params.vocab_size));
    }
    out.row(static_cast<Eigen::Index>(i)) = params.table.row(id);
  }
  if (params.has_projection) {
    out = (out * params.projection.transpose()).eval();
    out.rowwise() += params.bias.transpose();
  }
  return out;
}

Matrix encode_text(const EncoderParams& params, std::string_view text,
                   std::optional<std::size_t> max_tokens) {
  return encode(params, params.tokenizer()(text, max_tokens));
}

ParamGrads ParamGrads::zeros_like(const EncoderParams& params) {
  ParamGrads grads;
  grads.table = Matrix::Zero(params.vocab_size, params.dim);
  if (params.has_projection) {
    grads.projection = Matrix::Zero(params.dim, params.dim);
    grads.bias = Vector::Zero(params.dim);
  }
  return grads;
}

ParamGrads& ParamGrads::operator+=(const ParamGrads& other) {
  table += other.table;
  if (projection.size() > 0) {
    projection += other.projection;
    bias += other.bias;
  }
  return *this;
}

ParamGrads& ParamGrads::operator*=(double factor) {
  table *= factor;
  projection *= factor;
  bias *= factor;
  return *this;
}

void encode_backward(const EncoderParams& params, const TokenSequence& tokens,
                     const Matrix& d_embeddings, ParamGrads& grads) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const auto id = tokens.ids[i];
    if (params.has_projection) {
      const RowVector g = d_embeddings.row(row);
      grads.table.row(id) += g * params.projection;
      grads.projection += g.transpose() * params.table.row(id);
      grads.bias += g.transpose();
    } else {
      grads.table.row(id) += d_embeddings.row(row);
    }
  }
}

// ---------------------------------------------------------------------------

void write_params(const EncoderParams& params, std::ostream& out) {
  params.validate();
  out.write("UWEP", 4);
  detail::write_le<std::uint32_t>(out, kParamsFormatVersion);
  detail::write_le<std::uint32_t>(out, params.vocab_size);
  detail::write_le<std::uint32_t>(out, params.dim);
  detail::write_le<std::uint8_t>(out, params.has_projection ? 1 : 0);
  const auto write_block = [&](const double* data, Eigen::Index count) {
    for (Eigen::Index i = 0; i < count; ++i) {
      detail::write_le<float>(out, static_cast<float>(data[i]));
    }
  };
  write_block(params.table.data(), params.table.size());
  if (params.has_projection) {
    write_block(params.projection.data(), params.projection.size());
    write_block(params.bias.data(), params.bias.size());
  }
  if (!out) throw IoError("failed writing parameter checkpoint");
}

EncoderParams read_params(std::istream& in) {
  detail::expect_magic(in, "UWEP");
  const auto version = detail::read_le<std::uint32_t>(in, "version");
  if (version != kParamsFormatVersion) {
    throw ValidationError("unsupported UWEP version " + std::to_string(version));
  }
  EncoderParams params;
  params.vocab_size = detail::read_le<std::uint32_t>(in, "vocab_size");
  params.dim = detail::read_le<std::uint32_t>(in, "dim");
  const auto flag = detail::read_le<std::uint8_t>(in, "projection flag");
  if (flag > 1) throw ValidationError("invalid projection flag");
  params.has_projection = flag == 1;
  if (params.vocab_size < 2 || params.dim < 1) {
    throw ValidationError("invalid checkpoint dimensions");
  }
  const auto read_block = [&](double* data, Eigen::Index count) {
    for (Eigen::Index i = 0; i < count; ++i) {
      data[i] = detail::read_le<float>(in, "parameters");
    }
  };
  params.table.resize(params.vocab_size, params.dim);
  read_block(params.table.data(), params.table.size());
  if (params.has_projection) {
    params.projection.resize(params.dim, params.dim);
    params.bias.resize(params.dim);
    read_block(params.projection.data(), params.projection.size());
    read_block(params.bias.data(), params.bias.size());
  }
  params.validate();
  return params;
}

void save_params(const EncoderParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_params(params, out);
}

EncoderParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  try {
    return read_params(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace uwe

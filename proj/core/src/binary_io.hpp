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

// Little-endian binary helpers shared by the checkpoint and cache formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "uwe/error.hpp"

namespace uwe::detail {

template <typename T>
T byteswap_if_big(T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
      std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

template <typename T>
void write_le(std::ostream& out, T value) {
  value = byteswap_if_big(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ValidationError(std::string("truncated file while reading ") + what);
  }
  return byteswap_if_big(value);
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  char buffer[4];
  if (!in.read(buffer, 4) || std::memcmp(buffer, magic, 4) != 0) {
    throw ValidationError(std::string("bad magic, expected \"") + magic + "\"");
  }
}

}  // namespace uwe::detail

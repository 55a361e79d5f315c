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

#include <string>
#include <string_view>

namespace uwe {

/// Applies Unicode simple case folding to every code point of a UTF-8
/// string. Invalid byte sequences are copied through unchanged.
std::string fold_case(std::string_view utf8);

/// Trims leading/trailing whitespace and collapses internal runs of
/// whitespace into a single ASCII space.
std::string collapse_whitespace(std::string_view text);

/// Key under which job titles are merged: whitespace-collapsed and
/// case-folded.
std::string title_key(std::string_view title);

}  // namespace uwe

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

#include <stdexcept>
#include <string>

namespace uwe {

/// Failure categories; the CLI maps them onto exit codes.
enum class ErrorKind {
  kValidation,  // malformed or inconsistent input (exit 2)
  kIo,          // filesystem failures (exit 1)
  kRuntime,     // failures during a run, e.g. non-finite loss (exit 1)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorKind::kValidation, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorKind::kIo, message) {}
};

class RuntimeError : public Error {
 public:
  explicit RuntimeError(const std::string& message)
      : Error(ErrorKind::kRuntime, message) {}
};

}  // namespace uwe

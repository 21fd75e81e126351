/*
 * Copyright 2026 The antinoise Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace antinoise {

/// Base class for every error raised by the library. `code()` is a stable,
/// machine-readable identifier (snake_case) used in CLI error records.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& message) : Error("shape_mismatch", message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message, std::string code = "invalid_config")
      : Error(std::move(code), message) {}
};

/// A tap violates the H' mod 8H / channel divisibility rules of the restoration chain.
class DivisibilityError : public ConfigError {
 public:
  explicit DivisibilityError(const std::string& message)
      : ConfigError(message, "divisibility_violation") {}
};

class LabelError : public Error {
 public:
  explicit LabelError(const std::string& message) : Error("label_out_of_range", message) {}
};

/// Raised when an optimization step produces a NaN/Inf loss.
class NonFiniteLossError : public Error {
 public:
  NonFiniteLossError(int step_index, double value);

  int step_index() const noexcept { return step_index_; }

 private:
  int step_index_;
};

class DatasetError : public Error {
 public:
  DatasetError(std::string code, const std::string& message) : Error(std::move(code), message) {}
};

class CheckpointError : public Error {
 public:
  CheckpointError(std::string code, const std::string& message)
      : Error(std::move(code), message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io_error", message) {}
};

}  // namespace antinoise

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

#include "antinoise/error.hpp"

#include <sstream>

namespace antinoise {

namespace {

std::string non_finite_message(int step_index, double value) {
  std::ostringstream os;
  os << "non-finite loss (" << value << ") at optimization step " << step_index;
  return os.str();
}

}  // namespace

NonFiniteLossError::NonFiniteLossError(int step_index, double value)
    : Error("non_finite_loss", non_finite_message(step_index, value)), step_index_(step_index) {}

}  // namespace antinoise

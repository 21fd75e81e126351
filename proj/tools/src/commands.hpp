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

#include <ostream>
#include <string>
#include <vector>

namespace antinoise::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,     // runtime failure (non-finite loss, I/O, internal)
  kExitInputError = 2,  // bad usage, config, dataset, checkpoint or shape mismatch
};

/// Runs one command line (args excludes the program name). Human-readable
/// progress goes to `out`; on failure a one-line JSON error record
/// {"error": code, "message": ..., "exit_code": n} goes to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace antinoise::cli

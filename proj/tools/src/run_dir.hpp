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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <antinoise/pmal.hpp>

namespace antinoise::cli {

/// Output root: explicit flag, else $ANTINOISE_OUTPUT_ROOT, else `fallback`.
std::filesystem::path output_root(const std::string& flag, const std::string& fallback);

/// Creates <root>/<command>_<YYYYmmdd-HHMMSS>_s<seed>, adding a numeric
/// suffix when the name is taken.
std::filesystem::path make_run_dir(const std::filesystem::path& root, const std::string& command,
                                   std::uint64_t seed);

/// Per-epoch CSV: epoch, phase, lr, one column per loss key, train_acc, val_acc.
/// Columns are fixed by the first row; keys missing later are left empty.
class MetricsCsv {
 public:
  MetricsCsv(const std::filesystem::path& path, bool append);
  void write(const EpochMetrics& m);

 private:
  std::filesystem::path path_;
  std::vector<std::string> keys_;
  bool header_written_ = false;
};

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace antinoise::cli

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

#include "run_dir.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <sstream>

#include <antinoise/error.hpp>

namespace antinoise::cli {

namespace fs = std::filesystem;

fs::path output_root(const std::string& flag, const std::string& fallback) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("ANTINOISE_OUTPUT_ROOT"); env && *env) return env;
  return fallback.empty() ? fs::path("runs") : fs::path(fallback);
}

fs::path make_run_dir(const fs::path& root, const std::string& command, std::uint64_t seed) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream name;
  name << command << '_' << std::put_time(&tm, "%Y%m%d-%H%M%S") << "_s" << seed;
  fs::path dir = root / name.str();
  for (int i = 1; fs::exists(dir); ++i) dir = root / (name.str() + "_" + std::to_string(i));
  fs::create_directories(dir);
  return dir;
}

MetricsCsv::MetricsCsv(const fs::path& path, bool append) : path_(path) {
  if (append && fs::exists(path)) {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    std::stringstream ss(header);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() >= 5) {
      keys_.assign(cols.begin() + 3, cols.end() - 2);
      header_written_ = true;
    }
  } else {
    std::ofstream(path, std::ios::trunc);
  }
}

void MetricsCsv::write(const EpochMetrics& m) {
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("cannot write " + path_.string());
  out << std::setprecision(10);
  if (!header_written_) {
    for (const auto& [k, v] : m.losses) keys_.push_back(k);
    out << "epoch,phase,lr";
    for (const auto& k : keys_) out << ',' << k;
    out << ",train_acc,val_acc\n";
    header_written_ = true;
  }
  out << m.epoch << ',' << m.phase << ',' << m.lr;
  for (const auto& k : keys_) {
    out << ',';
    for (const auto& [name, v] : m.losses) {
      if (name == k) {
        out << v;
        break;
      }
    }
  }
  out << ',' << m.train_acc << ',';
  if (!std::isnan(m.val_acc)) out << m.val_acc;
  out << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

}  // namespace antinoise::cli

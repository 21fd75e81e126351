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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <antinoise/pmal.hpp>
#include <antinoise/toy_data.hpp>

namespace antinoise::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("antinoise_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// 32x32 input, widths 8/8/16/32/64, taps 3..5 (4x4, 2x2, 1x1), D/D'/D'' = 16/8/4.
inline ModelSpec tiny_spec(std::int64_t num_classes, std::vector<int> taps = {3, 4, 5}) {
  ModelSpec s;
  s.widths = {8, 8, 16, 32, 64};
  s.input_height = 32;
  s.input_width = 32;
  s.taps = std::move(taps);
  s.descriptor_dim = 16;
  s.restore_channels = 8;
  s.skip_channels = 4;
  s.num_classes = num_classes;
  return s;
}

inline LabeledDataset tiny_toy(std::int64_t classes = 3, std::int64_t per_class = 6,
                               std::uint64_t seed = 5) {
  return make_toy_dataset(classes, per_class, 32, seed);
}

inline bool same_tensors(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!torch::equal(a[i], b[i])) return false;
  }
  return true;
}

inline std::vector<torch::Tensor> snapshot(const std::vector<torch::Tensor>& params) {
  std::vector<torch::Tensor> out;
  for (const auto& p : params) out.push_back(p.detach().clone());
  return out;
}

}  // namespace antinoise::testing

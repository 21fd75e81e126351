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

#include "antinoise/data.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <random>

#include "antinoise/error.hpp"
#include "antinoise/image_io.hpp"
#include "antinoise/seeding.hpp"

namespace antinoise {

namespace fs = std::filesystem;

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kAll: return "all";
  }
  return "unknown";
}

LabeledDataset LabeledDataset::subset(const std::vector<std::int64_t>& indices, Split s) const {
  LabeledDataset out;
  out.class_names = class_names;
  out.split = s;
  auto idx = torch::tensor(indices, torch::kLong);
  if (indices.empty()) {
    out.images = torch::empty({0, images.size(1), images.size(2), images.size(3)});
    out.labels = torch::empty({0}, torch::kLong);
    return out;
  }
  out.images = images.index_select(0, idx);
  out.labels = labels.index_select(0, idx);
  for (auto i : indices) out.sources.push_back(sources.at(static_cast<std::size_t>(i)));
  return out;
}

void SplitSpec::validate() const {
  if (train < 0 || val < 0 || test < 0 || std::abs(train + val + test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must be non-negative and sum to 1");
  }
}

DatasetSplits split_dataset(const LabeledDataset& all, const SplitSpec& spec) {
  spec.validate();
  std::map<std::int64_t, std::vector<std::int64_t>> per_class;
  auto labels = all.labels.accessor<std::int64_t, 1>();
  for (std::int64_t i = 0; i < all.size(); ++i) per_class[labels[i]].push_back(i);

  std::vector<std::int64_t> train, val, test;
  for (auto& [cls, members] : per_class) {
    std::vector<std::pair<std::uint64_t, std::int64_t>> keyed;
    for (auto i : members) {
      const auto& name = all.sources.at(static_cast<std::size_t>(i));
      keyed.emplace_back(fnv1a64(name.data(), name.size()), i);
    }
    std::sort(keyed.begin(), keyed.end());
    const auto n = static_cast<std::int64_t>(keyed.size());
    const auto n_train = static_cast<std::int64_t>(std::llround(spec.train * n));
    const auto n_val = std::min(n - n_train, static_cast<std::int64_t>(std::llround(spec.val * n)));
    for (std::int64_t j = 0; j < n; ++j) {
      auto& target = j < n_train ? train : (j < n_train + n_val ? val : test);
      target.push_back(keyed[static_cast<std::size_t>(j)].second);
    }
  }
  for (auto* v : {&train, &val, &test}) std::sort(v->begin(), v->end());
  return {all.subset(train, Split::kTrain), all.subset(val, Split::kVal),
          all.subset(test, Split::kTest), 0};
}

DatasetSplits load_folder_dataset(const fs::path& root, std::int64_t height, std::int64_t width,
                                  const SplitSpec& split) {
  if (!fs::is_directory(root)) {
    throw DatasetError("dataset_not_found", "dataset root not found: " + root.string());
  }
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  if (class_dirs.empty()) {
    throw DatasetError("no_classes", "no class folders under " + root.string());
  }
  std::sort(class_dirs.begin(), class_dirs.end());

  LabeledDataset all;
  std::vector<torch::Tensor> images;
  std::vector<std::int64_t> labels;
  std::int64_t skipped = 0;
  for (std::size_t c = 0; c < class_dirs.size(); ++c) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(class_dirs[c])) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::int64_t loaded = 0;
    for (const auto& f : files) {
      auto img = read_image(f, height, width);
      if (!img) {
        ++skipped;
        continue;
      }
      images.push_back(*img);
      labels.push_back(static_cast<std::int64_t>(c));
      all.sources.push_back(class_dirs[c].filename().string() + "/" + f.filename().string());
      ++loaded;
    }
    if (loaded == 0) {
      throw DatasetError("empty_class", "class folder has no decodable images: " +
                                            class_dirs[c].string());
    }
    all.class_names.push_back(class_dirs[c].filename().string());
  }
  if (skipped > 0) {
    std::cerr << "warning: skipped " << skipped << " undecodable file(s) under " << root << "\n";
  }
  all.images = torch::stack(images);
  all.labels = torch::tensor(labels, torch::kLong);
  auto splits = split_dataset(all, split);
  splits.skipped = skipped;
  return splits;
}

void write_folder_dataset(const LabeledDataset& dataset, const fs::path& root) {
  for (const auto& name : dataset.class_names) fs::create_directories(root / name);
  auto labels = dataset.labels.accessor<std::int64_t, 1>();
  std::map<std::int64_t, int> counter;
  for (std::int64_t i = 0; i < dataset.size(); ++i) {
    const auto cls = labels[i];
    char file[32];
    std::snprintf(file, sizeof(file), "%05d.png", counter[cls]++);
    write_png(root / dataset.class_names.at(static_cast<std::size_t>(cls)) / file, dataset.images[i]);
  }
}

std::vector<std::vector<std::int64_t>> epoch_batches(std::int64_t num_samples,
                                                     std::int64_t batch_size, std::uint64_t seed,
                                                     std::int64_t epoch) {
  if (batch_size <= 0) throw ConfigError("batch size must be positive");
  std::vector<std::int64_t> order(static_cast<std::size_t>(num_samples));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, SeedStream::kDataOrder, static_cast<std::uint64_t>(epoch)));
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle implementation.
  for (std::int64_t i = num_samples - 1; i > 0; --i) {
    const auto j = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  std::vector<std::vector<std::int64_t>> batches;
  for (std::int64_t start = 0; start < num_samples; start += batch_size) {
    const auto end = std::min(num_samples, start + batch_size);
    if (end - start < 2 && num_samples > 1) break;
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

Batch make_batch(const LabeledDataset& dataset, const std::vector<std::int64_t>& indices,
                 std::optional<std::uint64_t> flip_seed) {
  auto idx = torch::tensor(indices, torch::kLong);
  Batch b{dataset.images.index_select(0, idx), dataset.labels.index_select(0, idx)};
  if (flip_seed) {
    std::mt19937_64 rng(*flip_seed);
    std::vector<std::uint8_t> flip(indices.size());
    for (auto& f : flip) f = static_cast<std::uint8_t>(rng() >> 63);
    auto mask = torch::tensor(std::vector<int64_t>(flip.begin(), flip.end()), torch::kLong)
                    .to(torch::kBool)
                    .view({-1, 1, 1, 1});
    b.images = torch::where(mask, b.images.flip({3}), b.images);
  }
  return b;
}

}  // namespace antinoise

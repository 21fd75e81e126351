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
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace antinoise {

enum class Split { kTrain, kVal, kTest, kAll };

std::string to_string(Split split);

/// Images with dense class labels. Images are stored as one [N, 3, H, W]
/// float tensor with values in [0, 1].
struct LabeledDataset {
  torch::Tensor images;                 // [N, 3, H, W] float32
  torch::Tensor labels;                 // [N] int64 in [0, num_classes)
  std::vector<std::string> sources;     // file name or generator tag per sample
  std::vector<std::string> class_names; // index -> name
  Split split = Split::kAll;

  std::int64_t size() const { return labels.defined() ? labels.size(0) : 0; }
  std::int64_t num_classes() const { return static_cast<std::int64_t>(class_names.size()); }
  std::int64_t height() const { return images.size(2); }
  std::int64_t width() const { return images.size(3); }

  /// Samples at `indices`, same class list.
  LabeledDataset subset(const std::vector<std::int64_t>& indices, Split split) const;
};

/// Fractions of each class assigned to train/val/test. Must sum to 1.
struct SplitSpec {
  double train = 0.8;
  double val = 0.2;
  double test = 0.0;

  void validate() const;
};

struct DatasetSplits {
  LabeledDataset train;
  LabeledDataset val;
  LabeledDataset test;
  std::int64_t skipped = 0;  // undecodable files
};

/// Per class, samples are ordered by FNV-1a hash of their source name and the
/// first round(train * n) go to train, the next round(val * n) to val, the rest
/// to test. Deterministic and independent of directory enumeration order.
DatasetSplits split_dataset(const LabeledDataset& all, const SplitSpec& spec);

/// Folder-per-class layout: root/<class_name>/<image files>. Classes are indexed
/// alphabetically; images are decoded to RGB, resized to height x width and
/// scaled to [0, 1]. Throws DatasetError for a missing root ("dataset_not_found"),
/// zero classes ("no_classes") or an empty class folder ("empty_class").
DatasetSplits load_folder_dataset(const std::filesystem::path& root, std::int64_t height,
                                  std::int64_t width, const SplitSpec& split);

/// Writes a dataset in the folder-per-class layout as PNG files.
void write_folder_dataset(const LabeledDataset& dataset, const std::filesystem::path& root);

struct Batch {
  torch::Tensor images;  // clean, [B, 3, H, W]
  torch::Tensor labels;  // [B]
};

/// Shuffled mini-batch index lists for one epoch; fixed per (seed, epoch).
/// A trailing batch with a single sample is dropped (batch statistics need two).
std::vector<std::vector<std::int64_t>> epoch_batches(std::int64_t num_samples,
                                                     std::int64_t batch_size, std::uint64_t seed,
                                                     std::int64_t epoch);

/// Gathers a batch, horizontally flipping each sample with probability 1/2
/// when `flip_seed` is given.
Batch make_batch(const LabeledDataset& dataset, const std::vector<std::int64_t>& indices,
                 std::optional<std::uint64_t> flip_seed = std::nullopt);

}  // namespace antinoise

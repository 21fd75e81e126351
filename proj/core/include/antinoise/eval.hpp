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
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "antinoise/data.hpp"
#include "antinoise/pmal.hpp"

namespace antinoise {

/// Maps a batch of images to class logits in eval mode.
using Scorer = std::function<torch::Tensor(const torch::Tensor& images)>;

/// Averaged K+1 score of a PMAL model (the backbone score alone when K = 0).
Scorer pmal_scorer(PmalModel model);
/// Backbone score of a plain network.
Scorer backbone_scorer(std::shared_ptr<StagedBackbone> backbone);

/// Per-sample top-1 predictions on the dataset with N(0, sigma^2) noise added
/// to each image. Noise is drawn image by image, in dataset order, from a
/// generator seeded with `seed`, so results do not depend on batching.
std::vector<std::int64_t> predict(const Scorer& scorer, const LabeledDataset& dataset, double sigma,
                                  std::uint64_t seed, std::int64_t batch_size = 64);

/// Top-1 accuracy under noise level sigma (sigma == 0: clean). Throws
/// DatasetError("empty_dataset") on an empty dataset.
double evaluate_accuracy(const Scorer& scorer, const LabeledDataset& dataset, double sigma,
                         std::uint64_t seed);

inline const std::vector<double>& default_sigma_sweep() {
  static const std::vector<double> sweep = {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
  return sweep;
}

struct RobustnessCurve {
  std::string model_id;
  std::vector<double> sigmas;
  std::vector<double> accuracies;

  /// Throws ConfigError unless the lists match and sigmas increase strictly from 0.
  void validate() const;
};

/// Accuracy at every sigma, all levels sharing `seed`.
RobustnessCurve robustness_curve(const Scorer& scorer, const LabeledDataset& dataset,
                                 const std::vector<double>& sigmas, std::uint64_t seed,
                                 const std::string& model_id);

/// Long-format CSV: model_id,sigma,accuracy.
void write_curves_csv(const std::filesystem::path& path, std::span<const RobustnessCurve> curves);
void write_curves_plot(const std::filesystem::path& path, std::span<const RobustnessCurve> curves);

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(peak^2 / MSE) in dB; identical inputs give kPsnrCap.
double psnr(const torch::Tensor& a, const torch::Tensor& b, double peak = 1.0);

struct DenoiseRecord {
  std::string source;
  double psnr_noisy = 0.0;
  std::vector<double> psnr_denoised;  // one per head, shallow -> deep
};

struct DenoiseReport {
  std::vector<int> stages;
  std::vector<DenoiseRecord> records;
  std::vector<std::filesystem::path> files;

  double mean_psnr_noisy() const;
  std::vector<double> mean_psnr_denoised() const;
};

/// For each image: adds noise, runs every denoising sub-head on its own tap of
/// the noisy image (eval mode) and writes, under out_dir/<index>/, clean.png,
/// noisy.png and denoised_s<stage>.png, plus a side-by-side strip
/// out_dir/<index>_strip.png and out_dir/psnr.csv. Images are clamped to [0,1]
/// only when written; PSNR uses the unclamped tensors.
DenoiseReport export_denoised(PmalModel& model, const LabeledDataset& images, double sigma,
                              std::uint64_t seed, const std::filesystem::path& out_dir);

/// Same PSNR measurements without writing files.
DenoiseReport measure_denoising(PmalModel& model, const LabeledDataset& images, double sigma,
                                std::uint64_t seed);

struct ConfidenceInterval {
  double mean = 0.0;
  double half_width = 0.0;  // 95% Student-t; 0 for fewer than two values
  std::size_t n = 0;
};

ConfidenceInterval mean_ci95(std::span<const double> values);

/// One configuration of an ablation grid: key/value overrides applied on top
/// of a base experiment configuration.
struct AblationCell {
  std::string name;
  std::vector<std::pair<std::string, std::string>> overrides;
};

struct AblationResult {
  std::string name;
  std::vector<double> accuracies;  // one per successful repeat
  std::vector<std::string> errors; // one per failed repeat
  ConfidenceInterval ci;
};

/// Rows of the standard ablation table: plain baseline, K = 1..3, single-step
/// K = 3 and K = 3 with SAM. SAM is off in every row but the last.
std::vector<AblationCell> default_ablation_grid();

/// Runs `run_cell(cell, repeat)` for each cell and repeat 0..repeats-1 (the
/// runner derives matched seeds from the repeat index). A throwing repeat is
/// recorded and the grid continues.
std::vector<AblationResult> run_ablation(
    const std::vector<AblationCell>& grid, int repeats,
    const std::function<double(const AblationCell&, int repeat)>& run_cell);

/// name,repeats,failures,mean_acc,ci95_half_width,accuracies
void write_ablation_csv(const std::filesystem::path& path, std::span<const AblationResult> results);

}  // namespace antinoise

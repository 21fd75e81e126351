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
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "antinoise/backbone.hpp"
#include "antinoise/data.hpp"
#include "antinoise/drh.hpp"
#include "antinoise/noise.hpp"
#include "antinoise/sam.hpp"

namespace antinoise {

/// Structural description of a model: everything needed to rebuild it.
struct ModelSpec {
  std::string backbone_id = "reference";
  std::vector<std::int64_t> widths = {32, 64, 128, 256, 512};
  std::int64_t input_height = 64;
  std::int64_t input_width = 64;
  std::vector<int> taps = {3, 4, 5};  // empty: plain backbone
  std::int64_t descriptor_dim = 256;
  std::int64_t restore_channels = 64;
  std::int64_t skip_channels = 16;
  std::int64_t num_classes = 0;

  bool operator==(const ModelSpec&) const = default;
};

/// Backbone plus one DRH per tapped stage (shallow -> deep).
class PmalModelImpl : public torch::nn::Module {
 public:
  PmalModelImpl(std::shared_ptr<StagedBackbone> backbone, const ModelSpec& spec);

  StagedBackbone& backbone() { return *backbone_; }
  std::shared_ptr<StagedBackbone> backbone_ptr() { return backbone_; }
  Drh& head(std::size_t k) { return heads_.at(k); }
  int num_heads() const { return static_cast<int>(heads_.size()); }
  const std::vector<int>& taps() const { return spec_.taps; }
  const std::vector<StageTapSpec>& tap_specs() const { return tap_specs_; }
  const ModelSpec& spec() const { return spec_; }
  std::int64_t num_classes() const { return spec_.num_classes; }

  /// Total denoise() invocations over all heads.
  std::int64_t denoise_calls() const;

 private:
  std::shared_ptr<StagedBackbone> backbone_;
  std::vector<Drh> heads_;
  ModelSpec spec_;
  std::vector<StageTapSpec> tap_specs_;
};
TORCH_MODULE(PmalModel);

/// Builds the reference backbone and heads from `spec`, seeding parameter
/// initialization with `init_seed`. Validates tap divisibility first.
PmalModel make_pmal_model(const ModelSpec& spec, std::uint64_t init_seed);

/// Named loss values of one optimization step.
struct StepReport {
  int step_index = 0;  // 1..K+1 (K+1 is the whole-backbone step)
  std::vector<std::pair<std::string, double>> losses;
  double grad_norm = 0.0;
};

/// Step order within one iteration.
enum class StepOrder {
  kProgressive,  // heads shallow -> deep, then the whole backbone
  kShuffled,     // random permutation per iteration (ablation only)
};

struct PmalIterationOptions {
  bool single_step = false;          // one combined update of all K+1 losses
  std::vector<int> step_order;       // permutation of 1..K+1; empty = progressive
};

/// Per-step optimizers: entry k-1 updates backbone stages 1..tap(k) plus head k,
/// entry K updates the whole backbone. In single-step mode a single optimizer
/// covers every parameter.
std::vector<SamOptimizer> make_pmal_optimizers(PmalModel& model, const SamOptions& options,
                                               bool single_step);

/// One batch of progressive multi-task anti-noise training: K head steps on
/// freshly noised images (recognition, MSE and denoised-recognition losses),
/// then a cross-entropy step of the whole backbone on fresh noise. Each step's
/// update is visible to the following step.
std::vector<StepReport> pmal_train_iteration(PmalModel& model, const Batch& batch,
                                             std::vector<SamOptimizer>& optimizers,
                                             NoiseGenerator& noise, double lr,
                                             const PmalIterationOptions& options = {});

struct PmalPrediction {
  torch::Tensor final_score;         // mean of the K+1 scores, [B, N]
  std::vector<torch::Tensor> parts;  // K head scores then the backbone score
};

/// Inference on original images: one eval-mode backbone pass, K recognition
/// sub-head scores and the backbone score, averaged. Denoising sub-heads are
/// not evaluated.
PmalPrediction pmal_infer(PmalModel& model, const torch::Tensor& images);

/// Top-1 accuracy of the averaged score on clean images.
double pmal_accuracy(PmalModel& model, const LabeledDataset& dataset, std::int64_t batch_size = 64);

struct PmalTrainOptions {
  int epochs = 60;
  std::int64_t batch_size = 8;
  double lr = 0.002;  // cosine-annealed over `epochs`
  double sigma = kDefaultNoiseSigma;
  SamOptions sam;
  bool single_step = false;
  StepOrder order = StepOrder::kProgressive;
  bool flip_augment = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  std::string phase;  // "pmal", "distill", "finetune"
  std::vector<std::pair<std::string, double>> losses;  // mean over the epoch's batches
  double train_acc = 0.0;
  double val_acc = 0.0;  // NaN without a validation set
};

/// Called after every epoch; `improved` is true when val_acc is the best so far
/// (or, without a validation set, on every epoch).
using EpochCallback = std::function<void(const EpochMetrics&, bool improved)>;

/// Stateful PMAL trainer; supports resuming at an epoch boundary.
class PmalTrainer {
 public:
  PmalTrainer(PmalModel model, PmalTrainOptions options);

  EpochMetrics train_epoch(const LabeledDataset& train, const LabeledDataset* val);

  /// Runs the remaining epochs.
  std::vector<EpochMetrics> fit(const LabeledDataset& train, const LabeledDataset* val,
                                const EpochCallback& on_epoch = {});

  PmalModel& model() { return model_; }
  std::vector<SamOptimizer>& optimizers() { return optimizers_; }
  int completed_epochs() const { return completed_epochs_; }
  void set_completed_epochs(int e) { completed_epochs_ = e; }
  double best_val_acc() const { return best_val_; }
  void set_best_val_acc(double v) { best_val_ = v; }
  const PmalTrainOptions& options() const { return options_; }

 private:
  PmalModel model_;
  PmalTrainOptions options_;
  std::vector<SamOptimizer> optimizers_;
  int completed_epochs_ = 0;
  double best_val_ = -1.0;
};

/// Convenience wrapper: constructs a trainer and runs every epoch.
std::vector<EpochMetrics> pmal_train(PmalModel& model, const LabeledDataset& train,
                                     const LabeledDataset* val, const PmalTrainOptions& options,
                                     const EpochCallback& on_epoch = {});

/// Mean of per-batch named losses, preserving first-seen key order.
class LossAccumulator {
 public:
  void add(const std::vector<StepReport>& reports);
  std::vector<std::pair<std::string, double>> means() const;

 private:
  std::vector<std::string> keys_;
  std::vector<double> sums_;
  std::vector<std::int64_t> counts_;
};

}  // namespace antinoise

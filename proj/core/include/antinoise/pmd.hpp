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
#include <memory>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "antinoise/pmal.hpp"

namespace antinoise {

inline constexpr double kDefaultFeatureLossScale = 100.0;

/// Frozen PMAL teacher and plain student with identical stage structure.
struct DistillPair {
  PmalModel teacher;
  std::shared_ptr<StagedBackbone> student;
  double alpha = kDefaultFeatureLossScale;

  /// Throws ShapeError listing every differing stage/tap when the student
  /// cannot mirror the teacher's taps.
  void validate() const;
};

/// Human-readable list of structural differences between teacher and student
/// (empty when compatible).
std::vector<std::string> distill_mismatches(PmalModel& teacher, StagedBackbone& student);

struct PmdIterationOptions {
  bool baseline_kd = false;  // score step only
  bool single_step = false;  // all losses in one update
};

/// Per-step student optimizers: entry k-1 updates student stages 1..tap(k), the
/// last entry the whole student. Baseline-KD and single-step use one optimizer
/// over the whole student.
std::vector<SamOptimizer> make_pmd_optimizers(DistillPair& pair, const SamOptions& options,
                                              const PmdIterationOptions& mode);

/// One batch of progressive multi-task distillation on clean images:
/// K feature-matching steps (alpha * MSE between student and teacher taps) and
/// a score step (MSE of the student score against every teacher score plus
/// cross-entropy). Teacher outputs are computed once, in eval mode, without
/// gradients.
std::vector<StepReport> pmd_train_iteration(DistillPair& pair, const Batch& batch,
                                            std::vector<SamOptimizer>& optimizers, double lr,
                                            const PmdIterationOptions& options = {});

/// Plain cross-entropy step of a backbone (fine-tuning phase).
StepReport plain_train_iteration(StagedBackbone& backbone, const Batch& batch,
                                 SamOptimizer& optimizer, double lr);

/// Clean top-1 accuracy of a plain backbone.
double backbone_accuracy(StagedBackbone& backbone, const LabeledDataset& dataset,
                         std::int64_t batch_size = 64);

struct PmdTrainOptions {
  int epochs = 60;           // first half distillation, second half fine-tuning
  std::int64_t batch_size = 8;
  double lr = 0.002;
  SamOptions sam;
  PmdIterationOptions mode;
  bool flip_augment = true;
  std::uint64_t seed = 0;

  int distill_epochs() const { return epochs / 2; }
  void validate() const;
};

class PmdTrainer {
 public:
  PmdTrainer(DistillPair pair, PmdTrainOptions options);

  EpochMetrics train_epoch(const LabeledDataset& train, const LabeledDataset* val);
  std::vector<EpochMetrics> fit(const LabeledDataset& train, const LabeledDataset* val,
                                const EpochCallback& on_epoch = {});

  DistillPair& pair() { return pair_; }
  std::vector<SamOptimizer>& optimizers() { return optimizers_; }
  int completed_epochs() const { return completed_epochs_; }
  void set_completed_epochs(int e) { completed_epochs_ = e; }
  double best_val_acc() const { return best_val_; }
  void set_best_val_acc(double v) { best_val_ = v; }

 private:
  DistillPair pair_;
  PmdTrainOptions options_;
  std::vector<SamOptimizer> optimizers_;
  int completed_epochs_ = 0;
  double best_val_ = -1.0;
};

std::vector<EpochMetrics> pmd_train(DistillPair& pair, const LabeledDataset& train,
                                    const LabeledDataset* val, const PmdTrainOptions& options,
                                    const EpochCallback& on_epoch = {});

}  // namespace antinoise

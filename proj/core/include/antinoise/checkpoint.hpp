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

#include <filesystem>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "antinoise/config.hpp"
#include "antinoise/pmal.hpp"

namespace antinoise {

/// Metadata stored next to the parameter arrays of a checkpoint.
struct CheckpointMeta {
  std::string kind = "pmal";  // "pmal" (with heads) or "plain"
  ModelSpec spec;
  std::vector<std::string> class_names;
  std::string structural_hash;
  std::string config_hash;
  int epoch = 0;
  double best_val_acc = -1.0;
};

/// Single torch archive: named parameters/buffers of the model, a JSON
/// metadata record under "meta" and, optionally, per-optimizer momentum
/// buffers under "optim" for resuming.
void save_checkpoint(const std::filesystem::path& path, PmalModel& model, const CheckpointMeta& meta,
                     std::vector<SamOptimizer>* optimizers = nullptr);

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

struct LoadedCheckpoint {
  PmalModel model{nullptr};
  CheckpointMeta meta;
};

/// Rebuilds the model described by the metadata and loads its parameters.
/// When `optimizers` is given, their momentum buffers are restored as well.
/// Throws CheckpointError("checkpoint_not_found" / "checkpoint_corrupt").
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 std::vector<SamOptimizer>* optimizers = nullptr);

/// Restores momentum buffers into optimizers built for an already loaded model.
void load_optimizer_state(const std::filesystem::path& path, std::vector<SamOptimizer>& optimizers);

/// Structural fields (backbone, widths, input size, taps, D/D'/D'') on which a
/// checkpoint and a config disagree; empty when compatible.
std::vector<std::string> structural_conflicts(const CheckpointMeta& meta,
                                              const ExperimentConfig& cfg);

}  // namespace antinoise

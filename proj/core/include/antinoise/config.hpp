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
#include <string>
#include <vector>

#include "antinoise/data.hpp"
#include "antinoise/pmal.hpp"
#include "antinoise/pmd.hpp"

namespace antinoise {

/// Every knob of an experiment. Serialized as JSON with the field names below;
/// any key can be overridden from the command line as key=value.
struct ExperimentConfig {
  // Model structure.
  std::string backbone = "reference";
  std::vector<std::int64_t> widths = {32, 64, 128, 256, 512};
  std::int64_t input_height = 64;
  std::int64_t input_width = 64;
  int k = 3;                // number of DRHs
  std::vector<int> taps;    // explicit tap stages; empty = last k stages
  std::int64_t descriptor_dim = 256;   // D
  std::int64_t restore_channels = 64;  // D'
  std::int64_t skip_channels = 16;     // D''

  // Optimization.
  double alpha = kDefaultFeatureLossScale;
  double sigma = kDefaultNoiseSigma;
  double rho = 0.05;
  double weight_decay = 5e-4;
  double lr = 0.002;
  double momentum = 0.9;
  int epochs = 60;
  std::int64_t batch_size = 8;
  std::uint64_t seed = 0;

  // Mode flags.
  bool single_step = false;
  bool no_sam = false;
  bool baseline_kd = false;
  bool shuffled_steps = false;
  bool flip_augment = true;

  // Data and outputs.
  std::string data_root;
  double split_train = 0.8;
  double split_val = 0.2;
  double split_test = 0.0;
  std::string output_dir = "runs";
  std::string teacher_checkpoint;
  std::vector<double> eval_sigmas = {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
  int ablation_repeats = 8;

  /// Tap stages after resolving `taps`/`k` against the backbone layout.
  std::vector<int> resolved_taps() const;
  BackboneLayout layout() const;
  SplitSpec split() const { return {split_train, split_val, split_test}; }

  /// Whole-config check: positive dimensions, K within the stage count, tap
  /// divisibility, hyperparameter ranges. Throws ConfigError.
  void validate() const;
};

/// Desk-scale defaults (reference backbone, 64x64 input, D/D'/D'' = 256/64/16).
ExperimentConfig desk_defaults();
/// Full-scale hyperparameters: ResNet50 stage layout at 448x448, D/D'/D'' =
/// 1024/256/64, alpha 100, weight decay 5e-4, rho 0.05, sigma 0.05, 200 epochs.
ExperimentConfig paper_scale_defaults();

std::string to_json(const ExperimentConfig& cfg, int indent = 2);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// Sets one field from its textual form. Values are parsed as JSON when
/// possible (numbers, booleans, arrays) and as strings otherwise.
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);
/// Parses "key=value".
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

/// FNV-1a hash (hex) of the structural fields that determine parameter shapes.
std::string structural_hash(const ExperimentConfig& cfg);
/// FNV-1a hash (hex) of the whole serialized config.
std::string config_hash(const ExperimentConfig& cfg);

ModelSpec model_spec(const ExperimentConfig& cfg, std::int64_t num_classes);
SamOptions sam_options(const ExperimentConfig& cfg);
PmalTrainOptions pmal_options(const ExperimentConfig& cfg);
PmdTrainOptions pmd_options(const ExperimentConfig& cfg);

}  // namespace antinoise

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
#include <span>
#include <vector>

#include <torch/torch.h>

namespace antinoise {

/// lr(t) = base_lr * (1 + cos(pi * t / total)) / 2, clamped to t in [0, total].
struct CosineSchedule {
  double base_lr = 0.002;
  double total = 1.0;

  double lr_at(double t) const;
};

struct SamOptions {
  double rho = 0.05;
  double weight_decay = 5e-4;  // decoupled; applied at the update
  double momentum = 0.9;
  bool enabled = true;         // false: single-pass SGD with momentum

  void validate() const;
};

/// Which point the loss closure is evaluated at.
enum class SamPass {
  kAtWeights,    // w
  kAtPerturbed,  // w + eps
};

/// Builds the loss for the current batch. Must be callable twice per step on
/// the same batch; the optimizer calls backward() on the returned scalar.
using LossClosure = std::function<torch::Tensor(SamPass)>;

/// sqrt(sum of squared elements) over all tensors; undefined tensors count as zero.
double global_norm(std::span<const torch::Tensor> tensors);

/// eps = rho * g / ||g||_2 with one norm over every tensor jointly; all zeros when g == 0.
std::vector<torch::Tensor> compute_perturbation(std::span<const torch::Tensor> gradients,
                                                double rho);

struct SamStepResult {
  double loss = 0.0;            // at w
  double perturbed_loss = 0.0;  // at w + eps (== loss when SAM is off)
  double grad_norm = 0.0;       // ||g|| at w
};

/// Sharpness-aware minimization over a fixed parameter set with an SGD+momentum
/// base update:
///   g1 = grad L(w); eps = rho g1/||g1||; g2 = grad L(w + eps);
///   v = momentum v + g2; w = w - lr (v + weight_decay w).
/// Parameters never retain the perturbation after step() returns or throws.
class SamOptimizer {
 public:
  SamOptimizer(std::vector<torch::Tensor> params, SamOptions options, int step_index = 0);

  /// Throws NonFiniteLossError carrying step_index() if either pass is NaN/Inf.
  SamStepResult step(const LossClosure& closure, double lr);

  const std::vector<torch::Tensor>& params() const { return params_; }
  std::vector<torch::Tensor>& momentum_buffers() { return momentum_; }
  const SamOptions& options() const { return options_; }
  int step_index() const { return step_index_; }
  std::int64_t updates() const { return updates_; }

 private:
  void zero_grads();
  std::vector<torch::Tensor> grads() const;
  double evaluate(const LossClosure& closure, SamPass pass);

  std::vector<torch::Tensor> params_;
  std::vector<torch::Tensor> momentum_;
  SamOptions options_;
  int step_index_;
  std::int64_t updates_ = 0;
};

}  // namespace antinoise

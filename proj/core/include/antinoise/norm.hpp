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

#include <torch/torch.h>

namespace antinoise {

/// How normalization layers behave during a forward pass.
enum class NormMode {
  kTrain,             // batch statistics; running statistics updated
  kTrainFrozenStats,  // batch statistics; running statistics untouched
  kEval,              // running statistics
};

inline bool uses_batch_stats(NormMode mode) { return mode != NormMode::kEval; }

/// Applies a BatchNorm1d/2d module under an explicit NormMode instead of the
/// module's train()/eval() flag. Gradients flow in every mode.
template <typename BatchNormImpl>
torch::Tensor apply_norm(BatchNormImpl& bn, const torch::Tensor& x, NormMode mode) {
  const auto& opts = bn.options;
  const bool batch_stats = uses_batch_stats(mode);
  const bool track = mode != NormMode::kTrainFrozenStats;
  const double momentum = opts.momentum().value_or(0.1);
  return torch::batch_norm(x, bn.weight, bn.bias, track ? bn.running_mean : torch::Tensor(),
                           track ? bn.running_var : torch::Tensor(), batch_stats, momentum,
                           opts.eps(), /*cudnn_enabled=*/false);
}

}  // namespace antinoise

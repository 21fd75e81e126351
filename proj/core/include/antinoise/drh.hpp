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
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "antinoise/backbone.hpp"
#include "antinoise/norm.hpp"

namespace antinoise {

/// Channel hyperparameters of one Denoising-Recognition Head.
struct DrhConfig {
  std::int64_t in_channels = 0;        // C of the tapped feature map
  std::int64_t descriptor_dim = 256;   // D
  std::int64_t restore_channels = 64;  // D'
  std::int64_t skip_channels = 16;     // D''
  std::int64_t num_classes = 0;        // N
  std::int64_t first_scale_h = 1;      // H'/(8H)
  std::int64_t first_scale_w = 1;      // W'/(8W)

  /// Throws ConfigError/DivisibilityError on an inconsistent configuration.
  void validate() const;

  static DrhConfig for_tap(const StageTapSpec& tap, std::int64_t descriptor_dim,
                           std::int64_t restore_channels, std::int64_t skip_channels,
                           std::int64_t num_classes);
};

struct DenoiseOutput {
  torch::Tensor denoised;  // restored + skip
  torch::Tensor restored;
  torch::Tensor skip;
};

/// Recognition sub-head (encoder + recognizer) and denoising sub-head
/// (restoration chain + skip block) attached to one backbone tap.
///
/// Encoder:     conv[C, D/2, 1x1]+BN+ReLU -> conv[D/2, D, 3x3]+BN+ReLU -> global max pool
/// Recognizer:  BN(d) -> FC[D, D/2]+BN+ELU -> FC[D/2, N]
/// Restoration: 4 x (pixelshuffle -> conv3x3 -> ReLU); first scale (sh, sw), then 2x2.
///              Conv widths: C/(sh*sw) -> D', D'/4 -> D', D'/4 -> D', D'/4 -> 3.
/// Skip:        conv[3, D'', 3x3]+ReLU -> conv[D'', 3, 3x3]
class DrhImpl : public torch::nn::Module {
 public:
  explicit DrhImpl(const DrhConfig& config);

  torch::Tensor encode(const torch::Tensor& x, NormMode mode);
  torch::Tensor recognize(const torch::Tensor& descriptor, NormMode mode);
  /// recognize(encode(x)).
  torch::Tensor score(const torch::Tensor& x, NormMode mode);
  DenoiseOutput denoise(const torch::Tensor& x, const torch::Tensor& noisy);

  std::vector<torch::Tensor> recognition_parameters();
  std::vector<torch::Tensor> denoising_parameters();

  const DrhConfig& config() const { return config_; }

  /// Number of denoise() invocations since construction (instrumentation).
  std::int64_t denoise_calls() const { return denoise_calls_.load(); }

 private:
  void check_features(const torch::Tensor& x) const;

  DrhConfig config_;
  torch::nn::Conv2d enc_conv1_{nullptr}, enc_conv2_{nullptr};
  torch::nn::BatchNorm2d enc_bn1_{nullptr}, enc_bn2_{nullptr};
  torch::nn::BatchNorm1d rec_bn_in_{nullptr}, rec_bn_hidden_{nullptr};
  torch::nn::Linear rec_fc1_{nullptr}, rec_fc2_{nullptr};
  std::vector<torch::nn::Conv2d> up_convs_;
  torch::nn::Conv2d skip_conv1_{nullptr}, skip_conv2_{nullptr};
  std::atomic<std::int64_t> denoise_calls_{0};
};
TORCH_MODULE(Drh);

struct DrhLosses {
  torch::Tensor rec;           // CE(p, g)
  torch::Tensor mse;           // MSE(I_den, I)
  torch::Tensor den_softmax;   // CE(p_den, g)
  torch::Tensor total;         // unweighted sum
};

/// Three-term head loss. Scores are [B, N] logits, images [B, 3, H', W'],
/// labels [B] int64 in [0, N).
DrhLosses drh_loss(const torch::Tensor& score, const torch::Tensor& denoised,
                   const torch::Tensor& denoised_score, const torch::Tensor& clean,
                   const torch::Tensor& labels);

/// Mean softmax cross-entropy with label range checking.
torch::Tensor softmax_loss(const torch::Tensor& score, const torch::Tensor& labels);

}  // namespace antinoise

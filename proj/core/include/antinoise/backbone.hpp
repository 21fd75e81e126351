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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "antinoise/norm.hpp"

namespace antinoise {

/// One stage of a backbone: output channel count and cumulative stride
/// relative to the input image.
struct StageDescriptor {
  std::int64_t channels = 0;
  std::int64_t stride = 1;
};

/// Static description of a staged backbone, usable without instantiating it.
struct BackboneLayout {
  std::string id;
  std::vector<StageDescriptor> stages;

  int num_stages() const { return static_cast<int>(stages.size()); }
};

/// Shape of the feature map tapped at the end of one stage for a given input size.
struct StageTapSpec {
  int stage_index = 0;  // 1-based
  std::int64_t channels = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int64_t input_height = 0;
  std::int64_t input_width = 0;

  /// Pixelshuffle scale of the first restoration module: (H'/(8H), W'/(8W)).
  std::pair<std::int64_t, std::int64_t> first_upsample_scale() const;

  bool operator==(const StageTapSpec&) const = default;
};

/// Throws DivisibilityError unless H' % 8H == 0, W' % 8W == 0 and
/// channels % (sh * sw * 4) == 0.
void validate_tap(const StageTapSpec& spec);

/// Five stages, channel widths 32/64/128/256/512 by default, stride 2 per stage.
BackboneLayout reference_layout(std::vector<std::int64_t> widths = {32, 64, 128, 256, 512});

/// Standard ResNet50 stage outputs (conv1, conv2_x .. conv5_x). Shape description only.
BackboneLayout resnet50_layout();

/// Tap shapes the backbone produces for an input of size input_h x input_w.
/// Throws ConfigError for out-of-range or non-increasing tap indices and
/// DivisibilityError when a tap cannot feed a denoising sub-head.
std::vector<StageTapSpec> stage_shapes(const BackboneLayout& layout, std::int64_t input_h,
                                       std::int64_t input_w, std::span<const int> taps);

/// The last `k` stages of a layout, e.g. {3, 4, 5} for k = 3 on five stages.
std::vector<int> last_stages(const BackboneLayout& layout, int k);

/// Intermediate activation tapped from a backbone stage.
struct FeatureMap {
  torch::Tensor values;  // [B, C, H, W]
  int stage_index = 0;
};

struct BackboneOutput {
  std::vector<FeatureMap> taps;  // shallow -> deep
  torch::Tensor score;           // [B, N] logits
};

/// Contract for a staged feature extractor with a classifier on top. Any
/// backbone that can describe its layout and run stage by stage can be trained
/// with the PMAL/PMD trainers.
class StagedBackbone : public torch::nn::Module {
 public:
  StagedBackbone(std::int64_t input_height, std::int64_t input_width, std::int64_t num_classes)
      : input_height_(input_height), input_width_(input_width), num_classes_(num_classes) {}

  virtual const BackboneLayout& layout() const = 0;

  /// Applies stage `stage` (1-based) to the output of the previous stage.
  virtual torch::Tensor forward_stage(int stage, const torch::Tensor& x, NormMode mode) = 0;

  /// Classifier over the last stage output.
  virtual torch::Tensor classify(const torch::Tensor& last_stage, NormMode mode) = 0;

  virtual std::vector<torch::Tensor> stage_parameters(int stage) = 0;
  virtual std::vector<torch::Tensor> classifier_parameters() = 0;

  int num_stages() const { return layout().num_stages(); }
  std::int64_t input_height() const { return input_height_; }
  std::int64_t input_width() const { return input_width_; }
  std::int64_t num_classes() const { return num_classes_; }

  /// Runs stages 1..stage and returns that stage's output.
  torch::Tensor forward_to(const torch::Tensor& images, int stage, NormMode mode);

  /// Single pass through every stage and the classifier, collecting `taps`.
  BackboneOutput forward_with_taps(const torch::Tensor& images, std::span<const int> taps,
                                   NormMode mode);

  /// Classification score only.
  torch::Tensor forward_score(const torch::Tensor& images, NormMode mode);

  /// Parameters of stages 1..stage (the computational path to that tap).
  std::vector<torch::Tensor> parameters_up_to(int stage);

  /// Every backbone parameter including the classifier.
  std::vector<torch::Tensor> all_parameters();

  void check_input(const torch::Tensor& images) const;

 private:
  std::int64_t input_height_;
  std::int64_t input_width_;
  std::int64_t num_classes_;
};

/// Desk-scale backbone: per stage conv3x3 -> BN -> ReLU -> 2x2 max-pool;
/// global average pooling and a linear classifier.
class ReferenceBackbone : public StagedBackbone {
 public:
  ReferenceBackbone(std::int64_t input_height, std::int64_t input_width, std::int64_t num_classes,
                    std::vector<std::int64_t> widths = {32, 64, 128, 256, 512});

  const BackboneLayout& layout() const override { return layout_; }
  torch::Tensor forward_stage(int stage, const torch::Tensor& x, NormMode mode) override;
  torch::Tensor classify(const torch::Tensor& last_stage, NormMode mode) override;
  std::vector<torch::Tensor> stage_parameters(int stage) override;
  std::vector<torch::Tensor> classifier_parameters() override;

  const std::vector<std::int64_t>& widths() const { return widths_; }

 private:
  struct Stage {
    torch::nn::Conv2d conv{nullptr};
    torch::nn::BatchNorm2d norm{nullptr};
  };

  std::vector<std::int64_t> widths_;
  BackboneLayout layout_;
  std::vector<Stage> stages_;
  torch::nn::Linear classifier_{nullptr};
};

/// He fan-in initialization for conv/linear weights, zero biases, identity BN affine.
void init_he_fan_in(torch::nn::Module& module);

}  // namespace antinoise

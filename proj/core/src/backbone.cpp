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

#include "antinoise/backbone.hpp"

#include <sstream>

#include "antinoise/error.hpp"

namespace antinoise {

std::pair<std::int64_t, std::int64_t> StageTapSpec::first_upsample_scale() const {
  return {input_height / (8 * height), input_width / (8 * width)};
}

void validate_tap(const StageTapSpec& spec) {
  std::ostringstream os;
  os << "tap at stage " << spec.stage_index << " (" << spec.channels << "x" << spec.height << "x"
     << spec.width << ", input " << spec.input_height << "x" << spec.input_width << "): ";
  if (spec.channels <= 0 || spec.height <= 0 || spec.width <= 0) {
    throw DivisibilityError(os.str() + "empty feature map");
  }
  if (spec.input_height % (8 * spec.height) != 0 || spec.input_width % (8 * spec.width) != 0) {
    throw DivisibilityError(os.str() + "input size must be a multiple of 8x the tap size");
  }
  const auto [sh, sw] = spec.first_upsample_scale();
  if (spec.channels % (sh * sw * 4) != 0) {
    os << "channels must be divisible by " << sh * sw * 4;
    throw DivisibilityError(os.str());
  }
}

BackboneLayout reference_layout(std::vector<std::int64_t> widths) {
  BackboneLayout layout{"reference", {}};
  std::int64_t stride = 1;
  for (auto w : widths) {
    stride *= 2;
    layout.stages.push_back({w, stride});
  }
  return layout;
}

BackboneLayout resnet50_layout() {
  return {"resnet50", {{64, 2}, {256, 4}, {512, 8}, {1024, 16}, {2048, 32}}};
}

std::vector<StageTapSpec> stage_shapes(const BackboneLayout& layout, std::int64_t input_h,
                                       std::int64_t input_w, std::span<const int> taps) {
  if (input_h <= 0 || input_w <= 0) {
    throw ConfigError("input size must be positive");
  }
  std::vector<StageTapSpec> specs;
  int previous = 0;
  for (int stage : taps) {
    if (stage < 1 || stage > layout.num_stages()) {
      throw ConfigError("tap stage " + std::to_string(stage) + " outside backbone '" + layout.id +
                        "' with " + std::to_string(layout.num_stages()) + " stages");
    }
    if (stage <= previous) {
      throw ConfigError("tap stages must be strictly increasing (shallow to deep)");
    }
    previous = stage;
    const auto& d = layout.stages[static_cast<std::size_t>(stage - 1)];
    StageTapSpec spec{stage, d.channels, input_h / d.stride, input_w / d.stride, input_h, input_w};
    validate_tap(spec);
    specs.push_back(spec);
  }
  return specs;
}

std::vector<int> last_stages(const BackboneLayout& layout, int k) {
  if (k < 0 || k > layout.num_stages()) {
    throw ConfigError("cannot tap " + std::to_string(k) + " stages of a " +
                      std::to_string(layout.num_stages()) + "-stage backbone");
  }
  std::vector<int> taps;
  for (int s = layout.num_stages() - k + 1; s <= layout.num_stages(); ++s) taps.push_back(s);
  return taps;
}

void StagedBackbone::check_input(const torch::Tensor& images) const {
  if (images.dim() != 4 || images.size(1) != 3 || images.size(2) != input_height_ ||
      images.size(3) != input_width_) {
    std::ostringstream os;
    os << "expected images [B, 3, " << input_height_ << ", " << input_width_ << "], got "
       << images.sizes();
    throw ShapeError(os.str());
  }
}

torch::Tensor StagedBackbone::forward_to(const torch::Tensor& images, int stage, NormMode mode) {
  check_input(images);
  if (stage < 1 || stage > num_stages()) {
    throw ConfigError("stage " + std::to_string(stage) + " out of range");
  }
  torch::Tensor x = images;
  for (int s = 1; s <= stage; ++s) x = forward_stage(s, x, mode);
  return x;
}

BackboneOutput StagedBackbone::forward_with_taps(const torch::Tensor& images,
                                                 std::span<const int> taps, NormMode mode) {
  check_input(images);
  for (int t : taps) {
    if (t < 1 || t > num_stages()) {
      throw ConfigError("requested tap " + std::to_string(t) + " exceeds backbone stage count " +
                        std::to_string(num_stages()));
    }
  }
  BackboneOutput out;
  torch::Tensor x = images;
  auto next_tap = taps.begin();
  for (int s = 1; s <= num_stages(); ++s) {
    x = forward_stage(s, x, mode);
    while (next_tap != taps.end() && *next_tap == s) {
      out.taps.push_back({x, s});
      ++next_tap;
    }
  }
  out.score = classify(x, mode);
  return out;
}

torch::Tensor StagedBackbone::forward_score(const torch::Tensor& images, NormMode mode) {
  return classify(forward_to(images, num_stages(), mode), mode);
}

std::vector<torch::Tensor> StagedBackbone::parameters_up_to(int stage) {
  std::vector<torch::Tensor> params;
  for (int s = 1; s <= stage; ++s) {
    auto p = stage_parameters(s);
    params.insert(params.end(), p.begin(), p.end());
  }
  return params;
}

std::vector<torch::Tensor> StagedBackbone::all_parameters() {
  auto params = parameters_up_to(num_stages());
  auto c = classifier_parameters();
  params.insert(params.end(), c.begin(), c.end());
  return params;
}

ReferenceBackbone::ReferenceBackbone(std::int64_t input_height, std::int64_t input_width,
                                     std::int64_t num_classes, std::vector<std::int64_t> widths)
    : StagedBackbone(input_height, input_width, num_classes),
      widths_(std::move(widths)),
      layout_(reference_layout(widths_)) {
  if (widths_.empty()) throw ConfigError("reference backbone needs at least one stage");
  if (num_classes <= 0) throw ConfigError("num_classes must be positive");
  std::int64_t in = 3;
  for (std::size_t i = 0; i < widths_.size(); ++i) {
    const auto name = "stage" + std::to_string(i + 1);
    Stage st;
    st.conv = register_module(
        name + "_conv",
        torch::nn::Conv2d(torch::nn::Conv2dOptions(in, widths_[i], 3).padding(1).bias(false)));
    st.norm = register_module(name + "_bn", torch::nn::BatchNorm2d(widths_[i]));
    stages_.push_back(st);
    in = widths_[i];
  }
  classifier_ = register_module("classifier", torch::nn::Linear(in, num_classes));
  init_he_fan_in(*this);
}

torch::Tensor ReferenceBackbone::forward_stage(int stage, const torch::Tensor& x, NormMode mode) {
  auto& st = stages_.at(static_cast<std::size_t>(stage - 1));
  auto y = torch::relu(apply_norm(*st.norm, st.conv->forward(x), mode));
  return torch::max_pool2d(y, 2);
}

torch::Tensor ReferenceBackbone::classify(const torch::Tensor& last_stage, NormMode /*mode*/) {
  return classifier_->forward(last_stage.mean({2, 3}));
}

std::vector<torch::Tensor> ReferenceBackbone::stage_parameters(int stage) {
  auto& st = stages_.at(static_cast<std::size_t>(stage - 1));
  return {st.conv->weight, st.norm->weight, st.norm->bias};
}

std::vector<torch::Tensor> ReferenceBackbone::classifier_parameters() {
  return {classifier_->weight, classifier_->bias};
}

void init_he_fan_in(torch::nn::Module& module) {
  torch::NoGradGuard no_grad;
  for (auto& m : module.modules(/*include_self=*/false)) {
    if (auto* conv = m->as<torch::nn::Conv2d>()) {
      torch::nn::init::kaiming_normal_(conv->weight, 0.0, torch::kFanIn, torch::kReLU);
      if (conv->bias.defined()) conv->bias.zero_();
    } else if (auto* fc = m->as<torch::nn::Linear>()) {
      torch::nn::init::kaiming_normal_(fc->weight, 0.0, torch::kFanIn, torch::kReLU);
      if (fc->bias.defined()) fc->bias.zero_();
    } else if (auto* bn2 = m->as<torch::nn::BatchNorm2d>()) {
      bn2->weight.fill_(1.0);
      bn2->bias.zero_();
    } else if (auto* bn1 = m->as<torch::nn::BatchNorm1d>()) {
      bn1->weight.fill_(1.0);
      bn1->bias.zero_();
    }
  }
}

}  // namespace antinoise

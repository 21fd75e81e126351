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

#include "antinoise/drh.hpp"

#include <sstream>

#include "antinoise/error.hpp"
#include "antinoise/pixel_shuffle.hpp"

namespace antinoise {

namespace {

torch::nn::Conv2dOptions conv3x3(std::int64_t in, std::int64_t out, bool bias) {
  return torch::nn::Conv2dOptions(in, out, 3).padding(1).bias(bias);
}

}  // namespace

void DrhConfig::validate() const {
  if (in_channels <= 0 || num_classes <= 0) {
    throw ConfigError("DRH needs positive in_channels and num_classes");
  }
  if (descriptor_dim <= 0 || descriptor_dim % 2 != 0) {
    throw ConfigError("descriptor dimension D must be positive and even");
  }
  if (restore_channels <= 0 || restore_channels % 4 != 0) {
    throw ConfigError("restoration width D' must be a positive multiple of 4");
  }
  if (skip_channels <= 0) throw ConfigError("skip width D'' must be positive");
  if (first_scale_h < 1 || first_scale_w < 1) {
    throw DivisibilityError("first upsampling scale must be at least 1x1");
  }
  if (in_channels % (first_scale_h * first_scale_w) != 0) {
    std::ostringstream os;
    os << "in_channels " << in_channels << " not divisible by first upsampling scale "
       << first_scale_h << "x" << first_scale_w;
    throw DivisibilityError(os.str());
  }
}

DrhConfig DrhConfig::for_tap(const StageTapSpec& tap, std::int64_t descriptor_dim,
                             std::int64_t restore_channels, std::int64_t skip_channels,
                             std::int64_t num_classes) {
  validate_tap(tap);
  const auto [sh, sw] = tap.first_upsample_scale();
  DrhConfig cfg{tap.channels, descriptor_dim, restore_channels, skip_channels, num_classes, sh, sw};
  cfg.validate();
  return cfg;
}

DrhImpl::DrhImpl(const DrhConfig& config) : config_(config) {
  config_.validate();
  const auto c = config_.in_channels;
  const auto d = config_.descriptor_dim;
  const auto dr = config_.restore_channels;
  const auto ds = config_.skip_channels;

  enc_conv1_ = register_module(
      "enc_conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(c, d / 2, 1).bias(false)));
  enc_bn1_ = register_module("enc_bn1", torch::nn::BatchNorm2d(d / 2));
  enc_conv2_ = register_module("enc_conv2", torch::nn::Conv2d(conv3x3(d / 2, d, false)));
  enc_bn2_ = register_module("enc_bn2", torch::nn::BatchNorm2d(d));

  rec_bn_in_ = register_module("rec_bn_in", torch::nn::BatchNorm1d(d));
  rec_fc1_ = register_module("rec_fc1", torch::nn::Linear(d, d / 2));
  rec_bn_hidden_ = register_module("rec_bn_hidden", torch::nn::BatchNorm1d(d / 2));
  rec_fc2_ = register_module("rec_fc2", torch::nn::Linear(d / 2, config_.num_classes));

  const std::int64_t first_in = c / (config_.first_scale_h * config_.first_scale_w);
  const std::int64_t widths_in[4] = {first_in, dr / 4, dr / 4, dr / 4};
  const std::int64_t widths_out[4] = {dr, dr, dr, 3};
  for (int i = 0; i < 4; ++i) {
    up_convs_.push_back(register_module("up" + std::to_string(i + 1) + "_conv",
                                        torch::nn::Conv2d(conv3x3(widths_in[i], widths_out[i], true))));
  }
  skip_conv1_ = register_module("skip_conv1", torch::nn::Conv2d(conv3x3(3, ds, true)));
  skip_conv2_ = register_module("skip_conv2", torch::nn::Conv2d(conv3x3(ds, 3, true)));

  init_he_fan_in(*this);
}

void DrhImpl::check_features(const torch::Tensor& x) const {
  if (x.dim() != 4 || x.size(1) != config_.in_channels) {
    std::ostringstream os;
    os << "DRH expects features with " << config_.in_channels << " channels, got " << x.sizes();
    throw ShapeError(os.str());
  }
}

torch::Tensor DrhImpl::encode(const torch::Tensor& x, NormMode mode) {
  check_features(x);
  auto y = torch::relu(apply_norm(*enc_bn1_, enc_conv1_->forward(x), mode));
  y = torch::relu(apply_norm(*enc_bn2_, enc_conv2_->forward(y), mode));
  return y.amax({2, 3});
}

torch::Tensor DrhImpl::recognize(const torch::Tensor& descriptor, NormMode mode) {
  if (descriptor.dim() != 2 || descriptor.size(1) != config_.descriptor_dim) {
    std::ostringstream os;
    os << "descriptor must be [B, " << config_.descriptor_dim << "], got " << descriptor.sizes();
    throw ShapeError(os.str());
  }
  auto h = apply_norm(*rec_bn_in_, descriptor, mode);
  h = torch::elu(apply_norm(*rec_bn_hidden_, rec_fc1_->forward(h), mode));
  return rec_fc2_->forward(h);
}

torch::Tensor DrhImpl::score(const torch::Tensor& x, NormMode mode) {
  return recognize(encode(x, mode), mode);
}

DenoiseOutput DrhImpl::denoise(const torch::Tensor& x, const torch::Tensor& noisy) {
  check_features(x);
  const auto h = x.size(2), w = x.size(3);
  const auto out_h = h * config_.first_scale_h * 8;
  const auto out_w = w * config_.first_scale_w * 8;
  if (noisy.dim() != 4 || noisy.size(1) != 3 || noisy.size(2) != out_h || noisy.size(3) != out_w ||
      noisy.size(0) != x.size(0)) {
    std::ostringstream os;
    os << "noisy image " << noisy.sizes() << " inconsistent with features " << x.sizes()
       << " (expected spatial " << out_h << "x" << out_w << ")";
    throw ShapeError(os.str());
  }
  ++denoise_calls_;

  auto y = pixel_shuffle(x, config_.first_scale_h, config_.first_scale_w);
  y = torch::relu(up_convs_[0]->forward(y));
  for (std::size_t i = 1; i < up_convs_.size(); ++i) {
    y = torch::relu(up_convs_[i]->forward(pixel_shuffle(y, 2, 2)));
  }
  auto skip = skip_conv2_->forward(torch::relu(skip_conv1_->forward(noisy)));
  return {y + skip, y, skip};
}

std::vector<torch::Tensor> DrhImpl::recognition_parameters() {
  std::vector<torch::Tensor> p;
  for (auto* m : std::initializer_list<torch::nn::Module*>{
           enc_conv1_.get(), enc_bn1_.get(), enc_conv2_.get(), enc_bn2_.get(), rec_bn_in_.get(),
           rec_fc1_.get(), rec_bn_hidden_.get(), rec_fc2_.get()}) {
    auto mp = m->parameters();
    p.insert(p.end(), mp.begin(), mp.end());
  }
  return p;
}

std::vector<torch::Tensor> DrhImpl::denoising_parameters() {
  std::vector<torch::Tensor> p;
  for (auto& conv : up_convs_) {
    auto mp = conv->parameters();
    p.insert(p.end(), mp.begin(), mp.end());
  }
  for (auto* m : {skip_conv1_.get(), skip_conv2_.get()}) {
    auto mp = m->parameters();
    p.insert(p.end(), mp.begin(), mp.end());
  }
  return p;
}

torch::Tensor softmax_loss(const torch::Tensor& score, const torch::Tensor& labels) {
  if (score.dim() != 2 || labels.dim() != 1 || score.size(0) != labels.size(0)) {
    std::ostringstream os;
    os << "score " << score.sizes() << " and labels " << labels.sizes() << " disagree";
    throw ShapeError(os.str());
  }
  if (labels.numel() > 0) {
    const auto lo = labels.min().item<std::int64_t>();
    const auto hi = labels.max().item<std::int64_t>();
    if (lo < 0 || hi >= score.size(1)) {
      throw LabelError("label outside [0, " + std::to_string(score.size(1)) + ")");
    }
  }
  return torch::cross_entropy_loss(score, labels);
}

DrhLosses drh_loss(const torch::Tensor& score, const torch::Tensor& denoised,
                   const torch::Tensor& denoised_score, const torch::Tensor& clean,
                   const torch::Tensor& labels) {
  if (!denoised.sizes().equals(clean.sizes())) {
    std::ostringstream os;
    os << "denoised " << denoised.sizes() << " vs clean " << clean.sizes();
    throw ShapeError(os.str());
  }
  if (!score.sizes().equals(denoised_score.sizes())) {
    throw ShapeError("score and denoised score must have the same shape");
  }
  DrhLosses l;
  l.rec = softmax_loss(score, labels);
  l.mse = torch::mse_loss(denoised, clean);
  l.den_softmax = softmax_loss(denoised_score, labels);
  l.total = l.rec + l.mse + l.den_softmax;
  return l;
}

}  // namespace antinoise

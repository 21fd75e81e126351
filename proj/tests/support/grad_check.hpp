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

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include <antinoise/drh.hpp>

namespace antinoise::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "param[index]" of the largest error
  std::int64_t checked = 0;
};

/// Central-difference check of d loss / d p for every element of every named
/// parameter. Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheckResult finite_difference_check(
    const std::vector<std::pair<std::string, torch::Tensor>>& params,
    const std::function<torch::Tensor()>& loss_fn, double h = 1e-5, double floor = 1e-6) {
  for (const auto& [name, p] : params) {
    if (p.grad().defined()) p.mutable_grad().zero_();
  }
  loss_fn().backward();
  GradCheckResult r;
  torch::NoGradGuard no_grad;
  for (const auto& [name, p] : params) {
    auto analytic = p.grad().contiguous();
    auto* a = analytic.data_ptr<double>();
    auto* v = p.data_ptr<double>();
    for (std::int64_t i = 0; i < p.numel(); ++i) {
      const double orig = v[i];
      v[i] = orig + h;
      const double up = loss_fn().item<double>();
      v[i] = orig - h;
      const double down = loss_fn().item<double>();
      v[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double rel =
          std::abs(a[i] - numeric) / std::max({std::abs(a[i]), std::abs(numeric), floor});
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        r.worst = name + "[" + std::to_string(i) + "]";
      }
      ++r.checked;
    }
  }
  return r;
}

/// Tiny head in double precision: C=8, D=16, D'=8, D''=4, N=3 on 16x16 images.
/// Features come from a fixed linear patch projection of the image standing in
/// for a backbone (kernel = stride = 16 / H), so the denoised-image score path
/// is differentiable end to end. `feature_hw` is 2 (first scale 1) or 1
/// (first scale 2).
struct TinyDrhProblem {
  Drh head{nullptr};
  torch::Tensor projection;  // [8, 3, k, k]
  torch::Tensor clean, noisy, labels;

  explicit TinyDrhProblem(std::int64_t feature_hw, std::uint64_t seed = 7) {
    torch::manual_seed(seed);
    const std::int64_t scale = 16 / (8 * feature_hw);
    DrhConfig cfg{8, 16, 8, 4, 3, scale, scale};
    head = Drh(cfg);
    head->to(torch::kDouble);
    head->eval();
    const auto dbl = torch::TensorOptions().dtype(torch::kDouble);
    const std::int64_t k = 16 / feature_hw;
    projection = torch::randn({8, 3, k, k}, dbl) / static_cast<double>(k);
    clean = torch::rand({2, 3, 16, 16}, dbl);
    noisy = clean + 0.1 * torch::randn({2, 3, 16, 16}, dbl);
    labels = torch::tensor({0, 2}, torch::kLong);
    // Non-trivial normalization statistics and biases so no term is degenerate.
    for (auto& item : head->named_buffers()) {
      torch::NoGradGuard g;
      const auto& name = item.key();
      auto& b = item.value();
      if (name.find("running_mean") != std::string::npos) b.uniform_(-0.2, 0.2);
      if (name.find("running_var") != std::string::npos) b.uniform_(0.5, 1.5);
    }
    for (auto& item : head->named_parameters()) {
      torch::NoGradGuard g;
      const auto& name = item.key();
      auto& p = item.value();
      if (name.find("bias") != std::string::npos) p.uniform_(-0.1, 0.1);
    }
  }

  torch::Tensor features(const torch::Tensor& image) const {
    return torch::conv2d(image, projection, {}, projection.size(2));
  }

  DrhLosses losses() {
    auto x = features(noisy);
    auto p = head->score(x, NormMode::kEval);
    auto den = head->denoise(x, noisy).denoised;
    auto p_den = head->score(features(den), NormMode::kEval);
    return drh_loss(p, den, p_den, clean, labels);
  }
};

}  // namespace antinoise::testing

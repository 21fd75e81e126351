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
#include <optional>

#include <torch/torch.h>

namespace antinoise {

inline constexpr double kDefaultNoiseSigma = 0.05;

/// Additive white Gaussian noise in normalized-pixel units.
struct NoiseSpec {
  double sigma = kDefaultNoiseSigma;
  std::optional<std::uint64_t> seed;

  void validate() const;
};

/// image + N(0, sigma^2) per element. The result is not clamped to [0, 1].
/// With a seed the output is bit-reproducible; without one the global torch
/// generator is used. sigma == 0 returns an exact copy.
torch::Tensor add_noise(const torch::Tensor& image, const NoiseSpec& spec);

/// Stateful noise source for training: every call draws fresh noise from a
/// generator seeded once at construction.
class NoiseGenerator {
 public:
  NoiseGenerator(double sigma, std::uint64_t seed);

  torch::Tensor operator()(const torch::Tensor& clean);

  double sigma() const { return sigma_; }
  std::int64_t draws() const { return draws_; }

 private:
  double sigma_;
  torch::Generator generator_;
  std::int64_t draws_ = 0;
};

}  // namespace antinoise

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

#include "antinoise/noise.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>

#include "antinoise/error.hpp"

namespace antinoise {

namespace {

torch::Tensor perturb(const torch::Tensor& image, double sigma,
                      std::optional<torch::Generator> generator) {
  if (sigma == 0.0) return image.clone();
  auto eta = torch::randn(image.sizes(), generator, image.options().requires_grad(false));
  return image + eta.mul_(sigma);
}

}  // namespace

void NoiseSpec::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("noise sigma must be a finite non-negative number");
  }
}

torch::Tensor add_noise(const torch::Tensor& image, const NoiseSpec& spec) {
  spec.validate();
  std::optional<torch::Generator> gen;
  if (spec.seed) gen = at::make_generator<at::CPUGeneratorImpl>(*spec.seed);
  return perturb(image, spec.sigma, gen);
}

NoiseGenerator::NoiseGenerator(double sigma, std::uint64_t seed)
    : sigma_(sigma), generator_(at::make_generator<at::CPUGeneratorImpl>(seed)) {
  NoiseSpec{sigma, seed}.validate();
}

torch::Tensor NoiseGenerator::operator()(const torch::Tensor& clean) {
  ++draws_;
  return perturb(clean, sigma_, generator_);
}

}  // namespace antinoise

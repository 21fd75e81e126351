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

#include "antinoise/sam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "antinoise/error.hpp"

namespace antinoise {

double CosineSchedule::lr_at(double t) const {
  const double progress = total > 0 ? std::clamp(t / total, 0.0, 1.0) : 1.0;
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void SamOptions::validate() const {
  if (enabled && !(rho > 0.0)) throw ConfigError("SAM rho must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
}

double global_norm(std::span<const torch::Tensor> tensors) {
  double sq = 0.0;
  for (const auto& t : tensors) {
    if (t.defined()) sq += t.to(torch::kDouble).pow(2).sum().item<double>();
  }
  return std::sqrt(sq);
}

std::vector<torch::Tensor> compute_perturbation(std::span<const torch::Tensor> gradients,
                                                double rho) {
  const double norm = global_norm(gradients);
  std::vector<torch::Tensor> eps;
  eps.reserve(gradients.size());
  for (const auto& g : gradients) {
    if (!g.defined()) {
      eps.emplace_back();
    } else if (norm == 0.0) {
      eps.push_back(torch::zeros_like(g));
    } else {
      eps.push_back(g * (rho / norm));
    }
  }
  return eps;
}

SamOptimizer::SamOptimizer(std::vector<torch::Tensor> params, SamOptions options, int step_index)
    : params_(std::move(params)), options_(options), step_index_(step_index) {
  options_.validate();
  momentum_.resize(params_.size());
}

void SamOptimizer::zero_grads() {
  for (auto& p : params_) {
    if (p.grad().defined()) p.mutable_grad() = torch::Tensor();
  }
}

std::vector<torch::Tensor> SamOptimizer::grads() const {
  std::vector<torch::Tensor> g;
  g.reserve(params_.size());
  for (const auto& p : params_) g.push_back(p.grad());
  return g;
}

double SamOptimizer::evaluate(const LossClosure& closure, SamPass pass) {
  zero_grads();
  auto loss = closure(pass);
  const double value = loss.item<double>();
  if (!std::isfinite(value)) throw NonFiniteLossError(step_index_, value);
  if (loss.requires_grad()) loss.backward();
  return value;
}

SamStepResult SamOptimizer::step(const LossClosure& closure, double lr) {
  SamStepResult result;
  result.loss = evaluate(closure, SamPass::kAtWeights);
  auto g = grads();
  result.grad_norm = global_norm(g);
  result.perturbed_loss = result.loss;

  if (options_.enabled && result.grad_norm > 0.0) {
    auto eps = compute_perturbation(g, options_.rho);
    {
      torch::NoGradGuard no_grad;
      for (std::size_t i = 0; i < params_.size(); ++i) {
        if (eps[i].defined()) params_[i].add_(eps[i]);
      }
    }
    auto restore = [&] {
      torch::NoGradGuard no_grad;
      for (std::size_t i = 0; i < params_.size(); ++i) {
        if (eps[i].defined()) params_[i].sub_(eps[i]);
      }
    };
    try {
      result.perturbed_loss = evaluate(closure, SamPass::kAtPerturbed);
    } catch (...) {
      restore();
      throw;
    }
    restore();
    g = grads();
  }

  torch::NoGradGuard no_grad;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    auto grad = g[i].defined() ? g[i] : torch::zeros_like(p);
    auto& v = momentum_[i];
    if (!v.defined()) {
      v = grad.clone();
    } else {
      v.mul_(options_.momentum).add_(grad);
    }
    if (options_.weight_decay != 0.0) p.mul_(1.0 - lr * options_.weight_decay);
    p.sub_(v, lr);
  }
  zero_grads();
  ++updates_;
  return result;
}

}  // namespace antinoise

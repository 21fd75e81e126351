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

#include <torch/torch.h>

namespace antinoise {

/// Sub-pixel rearrangement with independent vertical/horizontal scales:
/// [B, C*sh*sw, H, W] -> [B, C, H*sh, W*sw], where
///   out[b, c, h*sh + i, w*sw + j] = in[b, (c*sh + i)*sw + j, h, w].
/// Matches torch::pixel_shuffle when sh == sw. Differentiable.
torch::Tensor pixel_shuffle(const torch::Tensor& x, std::int64_t scale_h, std::int64_t scale_w);

}  // namespace antinoise

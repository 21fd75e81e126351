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

#include <array>
#include <cstdint>

#include "antinoise/data.hpp"

namespace antinoise {

/// Knobs of the procedural fine-grained dataset. Defaults are the calibrated
/// desk-scale setting.
struct ToyDataOptions {
  double badge_contrast_min = 0.30;  // |badge - body| intensity, lower bound
  double badge_contrast_max = 0.50;
  double position_jitter = 0.12;     // body centre offset, fraction of image size
  std::int64_t badge_cell = 0;       // badge cell side in pixels; 0 = 3 * image_size / 64
};

/// Renders `num_classes * per_class` images of a common "vehicle" silhouette
/// (random body colour, size, position, background and lighting). Classes
/// differ only in a small left-right symmetric badge pattern on the body, so
/// recognition hinges on a few low-contrast pixels. Deterministic per seed.
LabeledDataset make_toy_dataset(std::int64_t num_classes, std::int64_t per_class,
                                std::int64_t image_size, std::uint64_t seed,
                                const ToyDataOptions& options = {});

/// The class badge as a 3x3 0/1 grid (row-major), symmetric under horizontal flip.
std::array<int, 9> toy_badge_pattern(std::int64_t class_index);

}  // namespace antinoise

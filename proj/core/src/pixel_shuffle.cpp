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

#include "antinoise/pixel_shuffle.hpp"

#include <sstream>

#include "antinoise/error.hpp"

namespace antinoise {

torch::Tensor pixel_shuffle(const torch::Tensor& x, std::int64_t scale_h, std::int64_t scale_w) {
  if (x.dim() != 4) throw ShapeError("pixel_shuffle expects a 4-D tensor");
  if (scale_h < 1 || scale_w < 1) throw ShapeError("pixel_shuffle scales must be >= 1");
  const auto b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  if (c % (scale_h * scale_w) != 0) {
    std::ostringstream os;
    os << "pixel_shuffle: " << c << " channels not divisible by " << scale_h << "x" << scale_w;
    throw ShapeError(os.str());
  }
  if (scale_h == 1 && scale_w == 1) return x;
  const auto oc = c / (scale_h * scale_w);
  return x.reshape({b, oc, scale_h, scale_w, h, w})
      .permute({0, 1, 4, 2, 5, 3})
      .reshape({b, oc, h * scale_h, w * scale_w});
}

}  // namespace antinoise

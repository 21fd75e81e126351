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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace antinoise {

/// Decodes an image file to a [3, height, width] float tensor in [0, 1] (RGB).
/// Returns nullopt when the file cannot be decoded.
std::optional<torch::Tensor> read_image(const std::filesystem::path& path, std::int64_t height,
                                        std::int64_t width);

/// Writes a [3, H, W] tensor as an 8-bit RGB PNG; values are clamped to [0, 1].
void write_png(const std::filesystem::path& path, const torch::Tensor& image);

/// Concatenates [3, H, W] panels left to right with a `gap`-pixel white separator.
torch::Tensor hstack_panels(std::span<const torch::Tensor> panels, std::int64_t gap = 2);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Simple line chart (axes, ticks, legend) written as PNG.
void write_line_plot(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     std::span<const PlotSeries> series, double y_min = 0.0, double y_max = 1.0);

}  // namespace antinoise

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

#include "antinoise/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "antinoise/error.hpp"

namespace antinoise {

namespace fs = std::filesystem;

std::optional<torch::Tensor> read_image(const fs::path& path, std::int64_t height,
                                        std::int64_t width) {
  cv::Mat bgr;
  try {
    bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  } catch (const cv::Exception&) {
    return std::nullopt;
  }
  if (bgr.empty()) return std::nullopt;
  if (bgr.rows != height || bgr.cols != width) {
    cv::Mat resized;
    cv::resize(bgr, resized, cv::Size(static_cast<int>(width), static_cast<int>(height)), 0, 0,
               cv::INTER_AREA);
    bgr = resized;
  }
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  auto hwc = torch::from_blob(rgb.data, {height, width, 3}, torch::kUInt8).clone();
  return hwc.permute({2, 0, 1}).to(torch::kFloat).div_(255.0).contiguous();
}

void write_png(const fs::path& path, const torch::Tensor& image) {
  if (image.dim() != 3 || image.size(0) != 3) {
    throw ShapeError("write_png expects a [3, H, W] tensor");
  }
  auto hwc = image.detach()
                 .to(torch::kFloat)
                 .clamp(0.0, 1.0)
                 .mul(255.0)
                 .round()
                 .to(torch::kUInt8)
                 .permute({1, 2, 0})
                 .contiguous();
  cv::Mat rgb(static_cast<int>(hwc.size(0)), static_cast<int>(hwc.size(1)), CV_8UC3,
              hwc.data_ptr<std::uint8_t>());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), bgr)) throw IoError("failed to write " + path.string());
}

torch::Tensor hstack_panels(std::span<const torch::Tensor> panels, std::int64_t gap) {
  std::vector<torch::Tensor> parts;
  for (std::size_t i = 0; i < panels.size(); ++i) {
    if (i > 0 && gap > 0) {
      parts.push_back(torch::ones({3, panels[i].size(1), gap}, panels[i].options()));
    }
    parts.push_back(panels[i].detach());
  }
  return torch::cat(parts, 2);
}

void write_line_plot(const fs::path& path, const std::string& title, const std::string& x_label,
                     const std::string& y_label, std::span<const PlotSeries> series, double y_min,
                     double y_max) {
  constexpr int kW = 720, kH = 480, kLeft = 80, kRight = 24, kTop = 48, kBottom = 64;
  cv::Mat canvas(kH, kW, CV_8UC3, cv::Scalar(255, 255, 255));
  const cv::Scalar black(0, 0, 0), grid(220, 220, 220);
  const std::vector<cv::Scalar> palette = {{200, 80, 30}, {40, 40, 200},  {40, 150, 40},
                                           {150, 40, 150}, {30, 140, 200}, {90, 90, 90}};

  double x_min = 0.0, x_max = 1.0;
  bool any = false;
  for (const auto& s : series) {
    for (double x : s.x) {
      if (!any) x_min = x_max = x;
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      any = true;
    }
  }
  if (x_max <= x_min) x_max = x_min + 1.0;
  if (y_max <= y_min) y_max = y_min + 1.0;

  const int pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + static_cast<int>(std::lround((x - x_min) / (x_max - x_min) * pw)); };
  auto py = [&](double y) { return kTop + ph - static_cast<int>(std::lround((y - y_min) / (y_max - y_min) * ph)); };

  const auto font = cv::FONT_HERSHEY_SIMPLEX;
  for (int i = 0; i <= 5; ++i) {
    const double yv = y_min + (y_max - y_min) * i / 5.0;
    cv::line(canvas, {kLeft, py(yv)}, {kLeft + pw, py(yv)}, grid, 1);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", yv);
    cv::putText(canvas, buf, {8, py(yv) + 5}, font, 0.45, black, 1, cv::LINE_AA);
    const double xv = x_min + (x_max - x_min) * i / 5.0;
    std::snprintf(buf, sizeof(buf), "%.2f", xv);
    cv::putText(canvas, buf, {px(xv) - 16, kTop + ph + 20}, font, 0.45, black, 1, cv::LINE_AA);
  }
  cv::rectangle(canvas, {kLeft, kTop}, {kLeft + pw, kTop + ph}, black, 1);
  cv::putText(canvas, title, {kLeft, 30}, font, 0.6, black, 1, cv::LINE_AA);
  cv::putText(canvas, x_label, {kLeft + pw / 2 - 20, kH - 16}, font, 0.5, black, 1, cv::LINE_AA);
  cv::putText(canvas, y_label, {8, kTop - 10}, font, 0.5, black, 1, cv::LINE_AA);

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& color = palette[s % palette.size()];
    const auto& ser = series[s];
    for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
      const cv::Point p(px(ser.x[i]), py(ser.y[i]));
      cv::circle(canvas, p, 3, color, cv::FILLED, cv::LINE_AA);
      if (i > 0) cv::line(canvas, {px(ser.x[i - 1]), py(ser.y[i - 1])}, p, color, 2, cv::LINE_AA);
    }
    const int ly = kTop + 18 + 18 * static_cast<int>(s);
    cv::line(canvas, {kLeft + pw - 170, ly - 4}, {kLeft + pw - 146, ly - 4}, color, 2);
    cv::putText(canvas, ser.label, {kLeft + pw - 140, ly}, font, 0.45, black, 1, cv::LINE_AA);
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), canvas)) throw IoError("failed to write " + path.string());
}

}  // namespace antinoise

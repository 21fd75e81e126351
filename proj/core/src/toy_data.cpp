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

#include "antinoise/toy_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <vector>

#include "antinoise/error.hpp"
#include "antinoise/seeding.hpp"

namespace antinoise {

namespace {

using Pattern = std::array<int, 9>;

Pattern pattern_from_code(int code) {
  Pattern p{};
  for (int r = 0; r < 3; ++r) {
    const int side = (code >> r) & 1;
    const int mid = (code >> (3 + r)) & 1;
    p[r * 3 + 0] = side;
    p[r * 3 + 1] = mid;
    p[r * 3 + 2] = side;
  }
  return p;
}

int distance(const Pattern& a, const Pattern& b) {
  int d = 0;
  for (int i = 0; i < 9; ++i) d += a[i] != b[i];
  return d;
}

/// Greedy code book: codes 1..63 in order, preferring pairwise distance >= 3.
const std::vector<Pattern>& code_book() {
  static const std::vector<Pattern> book = [] {
    std::vector<Pattern> chosen;
    std::vector<bool> used(64, false);
    for (int min_dist = 3; min_dist >= 1; --min_dist) {
      for (int code = 1; code < 64; ++code) {
        if (used[code]) continue;
        auto p = pattern_from_code(code);
        bool ok = std::all_of(chosen.begin(), chosen.end(),
                              [&](const Pattern& q) { return distance(p, q) >= min_dist; });
        if (ok) {
          chosen.push_back(p);
          used[code] = true;
        }
      }
    }
    return chosen;
  }();
  return book;
}

struct Canvas {
  std::int64_t size;
  std::vector<float> px;  // [3, size, size]

  explicit Canvas(std::int64_t s) : size(s), px(static_cast<std::size_t>(3 * s * s), 0.0f) {}

  float& at(int c, std::int64_t y, std::int64_t x) {
    return px[static_cast<std::size_t>((c * size + y) * size + x)];
  }

  void put(std::int64_t y, std::int64_t x, const std::array<float, 3>& rgb) {
    if (y < 0 || x < 0 || y >= size || x >= size) return;
    for (int c = 0; c < 3; ++c) at(c, y, x) = rgb[static_cast<std::size_t>(c)];
  }
};

std::array<float, 3> scaled(const std::array<float, 3>& rgb, double f) {
  return {static_cast<float>(rgb[0] * f), static_cast<float>(rgb[1] * f),
          static_cast<float>(rgb[2] * f)};
}

}  // namespace

std::array<int, 9> toy_badge_pattern(std::int64_t class_index) {
  const auto& book = code_book();
  if (class_index < 0 || class_index >= static_cast<std::int64_t>(book.size())) {
    throw ConfigError("toy dataset supports at most " + std::to_string(book.size()) + " classes");
  }
  return book[static_cast<std::size_t>(class_index)];
}

LabeledDataset make_toy_dataset(std::int64_t num_classes, std::int64_t per_class,
                                std::int64_t image_size, std::uint64_t seed,
                                const ToyDataOptions& options) {
  if (num_classes <= 0 || per_class <= 0 || image_size < 16) {
    throw ConfigError("toy dataset needs positive counts and image_size >= 16");
  }
  std::mt19937_64 rng(derive_seed(seed, SeedStream::kToyData));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  const double s = static_cast<double>(image_size);
  const std::int64_t cell =
      options.badge_cell > 0 ? options.badge_cell : std::max<std::int64_t>(1, image_size * 3 / 64);

  LabeledDataset ds;
  std::vector<torch::Tensor> images;
  std::vector<std::int64_t> labels;
  for (std::int64_t c = 0; c < num_classes; ++c) {
    char name[32];
    std::snprintf(name, sizeof(name), "class_%02lld", static_cast<long long>(c));
    ds.class_names.emplace_back(name);
  }

  for (std::int64_t i = 0; i < per_class; ++i) {
    for (std::int64_t cls = 0; cls < num_classes; ++cls) {
      const auto pattern = toy_badge_pattern(cls);
      Canvas cv(image_size);

      // Background: linear blend of two random colours along a random direction.
      std::array<float, 3> bg0, bg1;
      for (int k = 0; k < 3; ++k) {
        bg0[static_cast<std::size_t>(k)] = static_cast<float>(uni(0.2, 0.8));
        bg1[static_cast<std::size_t>(k)] = static_cast<float>(uni(0.2, 0.8));
      }
      const double ang = uni(0.0, 2.0 * std::numbers::pi);
      for (std::int64_t y = 0; y < image_size; ++y) {
        for (std::int64_t x = 0; x < image_size; ++x) {
          const double t = 0.5 + 0.5 * ((x / s - 0.5) * std::cos(ang) + (y / s - 0.5) * std::sin(ang));
          for (int k = 0; k < 3; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            cv.at(k, y, x) = static_cast<float>(bg0[kk] * (1 - t) + bg1[kk] * t);
          }
        }
      }

      // Body: rounded rectangle with a cabin, wheels and the class badge.
      const double cx = s * (0.5 + uni(-options.position_jitter, options.position_jitter));
      const double cy = s * (0.55 + uni(-options.position_jitter, options.position_jitter));
      const double bw = s * uni(0.55, 0.75), bh = s * uni(0.22, 0.32);
      std::array<float, 3> body;
      for (auto& v : body) v = static_cast<float>(uni(0.25, 0.75));
      const double radius = bh * 0.35;
      for (std::int64_t y = 0; y < image_size; ++y) {
        for (std::int64_t x = 0; x < image_size; ++x) {
          const double dx = std::max(0.0, std::abs(x + 0.5 - cx) - (bw / 2 - radius));
          const double dy = std::max(0.0, std::abs(y + 0.5 - cy) - (bh / 2 - radius));
          if (dx * dx + dy * dy <= radius * radius) cv.put(y, x, body);
        }
      }
      const double cab_w = bw * uni(0.45, 0.6), cab_h = bh * uni(0.5, 0.8);
      const auto cabin = scaled(body, uni(0.75, 0.95));
      for (std::int64_t y = static_cast<std::int64_t>(cy - bh / 2 - cab_h); y < cy - bh / 2; ++y) {
        for (std::int64_t x = static_cast<std::int64_t>(cx - cab_w / 2); x < cx + cab_w / 2; ++x) {
          cv.put(y, x, cabin);
        }
      }
      const double wheel_r = bh * uni(0.28, 0.36);
      const std::array<float, 3> tyre{0.08f, 0.08f, 0.08f};
      for (double wx : {cx - bw * 0.3, cx + bw * 0.3}) {
        const double wy = cy + bh / 2;
        for (std::int64_t y = static_cast<std::int64_t>(wy - wheel_r); y <= wy + wheel_r; ++y) {
          for (std::int64_t x = static_cast<std::int64_t>(wx - wheel_r); x <= wx + wheel_r; ++x) {
            if ((x + 0.5 - wx) * (x + 0.5 - wx) + (y + 0.5 - wy) * (y + 0.5 - wy) <= wheel_r * wheel_r) {
              cv.put(y, x, tyre);
            }
          }
        }
      }

      const double contrast = uni(options.badge_contrast_min, options.badge_contrast_max);
      const double sign = u01(rng) < 0.5 ? -1.0 : 1.0;
      std::array<float, 3> on;
      for (int k = 0; k < 3; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        on[kk] = static_cast<float>(std::clamp(body[kk] + sign * contrast, 0.0, 1.0));
      }
      const auto bx = static_cast<std::int64_t>(std::lround(cx)) - 3 * cell / 2;
      const auto by = static_cast<std::int64_t>(std::lround(cy)) - 3 * cell / 2;
      for (int r = 0; r < 3; ++r) {
        for (int q = 0; q < 3; ++q) {
          if (!pattern[static_cast<std::size_t>(r * 3 + q)]) continue;
          for (std::int64_t yy = 0; yy < cell; ++yy) {
            for (std::int64_t xx = 0; xx < cell; ++xx) cv.put(by + r * cell + yy, bx + q * cell + xx, on);
          }
        }
      }

      // Global lighting.
      const double gain = uni(0.8, 1.1);
      for (auto& v : cv.px) v = static_cast<float>(std::clamp(v * gain, 0.0, 1.0));

      images.push_back(torch::from_blob(cv.px.data(), {3, image_size, image_size}, torch::kFloat).clone());
      labels.push_back(cls);
      char src[64];
      std::snprintf(src, sizeof(src), "toy/%02lld/%05lld", static_cast<long long>(cls),
                    static_cast<long long>(i));
      ds.sources.emplace_back(src);
    }
  }
  ds.images = torch::stack(images);
  ds.labels = torch::tensor(labels, torch::kLong);
  return ds;
}

}  // namespace antinoise

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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include <antinoise/error.hpp>
#include <antinoise/eval.hpp>

#include "test_support.hpp"

namespace antinoise {
namespace {

using testing::TempDir;
using testing::tiny_spec;
using testing::tiny_toy;

/// Class c is a flat image of value 0.2 + 0.15 c.
LabeledDataset flat_dataset(std::int64_t classes, std::int64_t per_class) {
  LabeledDataset d;
  std::vector<torch::Tensor> images;
  std::vector<std::int64_t> labels;
  for (std::int64_t i = 0; i < per_class; ++i) {
    for (std::int64_t c = 0; c < classes; ++c) {
      images.push_back(torch::full({3, 8, 8}, 0.2 + 0.15 * static_cast<double>(c)));
      labels.push_back(c);
    }
  }
  d.images = torch::stack(images);
  d.labels = torch::tensor(labels, torch::kLong);
  for (std::int64_t c = 0; c < classes; ++c) d.class_names.push_back("c" + std::to_string(c));
  return d;
}

Scorer mean_reader(std::int64_t classes) {
  return [classes](const torch::Tensor& x) {
    auto level = ((x.mean({1, 2, 3}) - 0.2) / 0.15).round().clamp(0, classes - 1).to(torch::kLong);
    return torch::one_hot(level, classes).to(torch::kFloat);
  };
}

TEST(Evaluate, PerfectClassifier) {
  auto d = flat_dataset(4, 10);
  EXPECT_DOUBLE_EQ(evaluate_accuracy(mean_reader(4), d, 0.0, 1), 1.0);
  EXPECT_DOUBLE_EQ(evaluate_accuracy(mean_reader(4), d, 0.05, 1), 1.0);
}

TEST(Evaluate, ConstantScorerHitsOneClass) {
  auto d = flat_dataset(4, 10);
  Scorer zero = [](const torch::Tensor& x) { return torch::zeros({x.size(0), 4}); };
  EXPECT_DOUBLE_EQ(evaluate_accuracy(zero, d, 0.1, 3), 0.25);
}

TEST(Evaluate, RandomScorerStaysNearChance) {
  auto d = flat_dataset(4, 100);
  auto gen = at::make_generator<at::CPUGeneratorImpl>(17);
  Scorer random = [gen](const torch::Tensor& x) mutable {
    return torch::rand({x.size(0), 4}, gen);
  };
  const double acc = evaluate_accuracy(random, d, 0.0, 1);
  // Wilson score interval at z = 3.29 (99.9%) for p = 0.25, n = 400.
  const double n = 400.0, p = 0.25, z = 3.29;
  const double centre = (p + z * z / (2 * n)) / (1 + z * z / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n);
  EXPECT_GT(acc, centre - half);
  EXPECT_LT(acc, centre + half);
}

TEST(Evaluate, NoiseIsOneDrawPerImageInOrder) {
  auto d = flat_dataset(2, 3);
  std::vector<torch::Tensor> seen;
  Scorer capture = [&](const torch::Tensor& x) {
    seen.push_back(x.clone());
    return torch::zeros({x.size(0), 2});
  };
  predict(capture, d, 0.1, 44, 4);
  ASSERT_EQ(seen.size(), 2u);
  auto inputs = torch::cat(seen);
  NoiseGenerator gen(0.1, 44);
  for (std::int64_t i = 0; i < d.size(); ++i) EXPECT_TRUE(torch::equal(inputs[i], gen(d.images[i])));
}

TEST(Evaluate, SeededEvaluationIsDeterministic) {
  auto data = tiny_toy();
  auto model = make_pmal_model(tiny_spec(3), 2);
  auto scorer = pmal_scorer(model);
  EXPECT_EQ(predict(scorer, data, 0.2, 5), predict(scorer, data, 0.2, 5));
  EXPECT_THROW(evaluate_accuracy(scorer, data, -0.1, 5), ConfigError);
  LabeledDataset empty;
  empty.images = torch::zeros({0, 3, 32, 32});
  empty.labels = torch::zeros({0}, torch::kLong);
  EXPECT_THROW(evaluate_accuracy(scorer, empty, 0.0, 5), DatasetError);
}

TEST(Robustness, CurveAndCsv) {
  auto d = flat_dataset(4, 5);
  auto curve = robustness_curve(mean_reader(4), d, {0.0, 0.01, 0.5}, 3, "reader");
  ASSERT_EQ(curve.accuracies.size(), 3u);
  EXPECT_DOUBLE_EQ(curve.accuracies[0], 1.0);
  EXPECT_LT(curve.accuracies[2], 1.0);

  EXPECT_THROW(robustness_curve(mean_reader(4), d, {0.05, 0.1}, 3, "x"), ConfigError);
  EXPECT_THROW(robustness_curve(mean_reader(4), d, {0.0, 0.1, 0.1}, 3, "x"), ConfigError);

  TempDir tmp;
  std::vector<RobustnessCurve> curves = {curve};
  write_curves_csv(tmp / "c.csv", curves);
  write_curves_plot(tmp / "c.png", curves);
  std::ifstream in(tmp / "c.csv");
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "model_id,sigma,accuracy");
  EXPECT_EQ(lines[1], "reader,0,1");
  EXPECT_GT(std::filesystem::file_size(tmp / "c.png"), 0u);
}

double psnr_oracle(const torch::Tensor& a, const torch::Tensor& b) {
  auto x = a.to(torch::kDouble).contiguous();
  auto y = b.to(torch::kDouble).contiguous();
  const double* px = x.data_ptr<double>();
  const double* py = y.data_ptr<double>();
  double s = 0.0;
  for (std::int64_t i = 0; i < x.numel(); ++i) s += (px[i] - py[i]) * (px[i] - py[i]);
  return 10.0 * std::log10(1.0 / (s / static_cast<double>(x.numel())));
}

TEST(Psnr, MatchesScalarOracle) {
  torch::manual_seed(3);
  auto a = torch::rand({3, 16, 16});
  auto b = a + 0.05 * torch::randn({3, 16, 16});
  EXPECT_NEAR(psnr(a, b), psnr_oracle(a, b), 1e-9);
  EXPECT_NEAR(psnr(torch::zeros({4}), torch::full({4}, 0.1)), 20.0, 1e-5);
  EXPECT_DOUBLE_EQ(psnr(a, a), kPsnrCap);
  EXPECT_THROW(psnr(a, torch::zeros({3, 16, 15})), ShapeError);
}

TEST(Denoising, ExportWritesKPlusTwoImagesPerSample) {
  auto data = tiny_toy(3, 1);
  auto model = make_pmal_model(tiny_spec(3), 4);
  TempDir tmp;
  auto report = export_denoised(model, data, 0.05, 9, tmp.path());
  EXPECT_EQ(report.stages, (std::vector<int>{3, 4, 5}));
  ASSERT_EQ(report.records.size(), 3u);
  EXPECT_EQ(report.files.size(), 15u);
  for (const auto& f : report.files) EXPECT_TRUE(std::filesystem::exists(f)) << f;
  EXPECT_TRUE(std::filesystem::exists(tmp / "0000_strip.png"));
  EXPECT_TRUE(std::filesystem::exists(tmp / "psnr.csv"));
  EXPECT_NEAR(report.mean_psnr_noisy(), 10.0 * std::log10(1.0 / 0.0025), 0.3);
  EXPECT_EQ(report.mean_psnr_denoised().size(), 3u);

  auto measured = measure_denoising(model, data, 0.05, 9);
  EXPECT_TRUE(measured.files.empty());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(measured.records[i].psnr_denoised, report.records[i].psnr_denoised);
  }

  auto plain = make_pmal_model(tiny_spec(3, {}), 4);
  EXPECT_THROW(measure_denoising(plain, data, 0.05, 9), ConfigError);
}

TEST(Statistics, StudentTInterval) {
  const std::vector<double> v = {1, 2, 3, 4, 5, 6, 7, 8};
  auto ci = mean_ci95(v);
  EXPECT_EQ(ci.n, 8u);
  EXPECT_DOUBLE_EQ(ci.mean, 4.5);
  // t(0.975, 7) = 2.3646242510; sample sd = sqrt(6).
  EXPECT_NEAR(ci.half_width, 2.3646242510 * std::sqrt(6.0) / std::sqrt(8.0), 1e-8);
  const std::vector<double> one = {0.7};
  EXPECT_EQ(mean_ci95(one).half_width, 0.0);
  EXPECT_EQ(mean_ci95({}).n, 0u);
}

TEST(Ablation, FailedRepeatIsRecordedAndGridContinues) {
  std::vector<AblationCell> grid = {{"a", {}}, {"b", {}}};
  auto results = run_ablation(grid, 3, [](const AblationCell& cell, int rep) -> double {
    if (cell.name == "a" && rep == 1) throw std::runtime_error("boom");
    return 0.5 + 0.1 * rep;
  });
  ASSERT_EQ(results.size(), 2u);
  EXPECT_EQ(results[0].accuracies.size(), 2u);
  ASSERT_EQ(results[0].errors.size(), 1u);
  EXPECT_NE(results[0].errors[0].find("boom"), std::string::npos);
  EXPECT_EQ(results[1].accuracies.size(), 3u);
  EXPECT_NEAR(results[1].ci.mean, 0.6, 1e-12);

  TempDir tmp;
  write_ablation_csv(tmp / "a.csv", results);
  std::ifstream in(tmp / "a.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "name,repeats,failures,mean_acc,ci95_half_width,accuracies");
  EXPECT_EQ(row.substr(0, 6), "a,2,1,");
}

TEST(Ablation, DefaultGridRows) {
  auto grid = default_ablation_grid();
  ASSERT_EQ(grid.size(), 6u);
  EXPECT_EQ(grid.front().name, "baseline");
  EXPECT_EQ(grid.back().name, "K=3 w/ SAM");
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    bool sam_off = false;
    for (const auto& [k, v] : grid[i].overrides) sam_off |= k == "no_sam" && v == "true";
    EXPECT_TRUE(sam_off) << grid[i].name;
  }
}

}  // namespace
}  // namespace antinoise

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

#include <antinoise/drh.hpp>
#include <antinoise/error.hpp>
#include <antinoise/pixel_shuffle.hpp>

#include "grad_check.hpp"

namespace antinoise {
namespace {

DrhConfig small_config(std::int64_t c = 16, std::int64_t scale = 1) {
  return DrhConfig{c, 16, 8, 4, 4, scale, scale};
}

torch::Tensor& param(Drh& head, const std::string& name) {
  for (auto& item : head->named_parameters()) {
    if (item.key() == name) return item.value();
  }
  throw std::runtime_error("no parameter " + name);
}

TEST(DrhConfig, Validation) {
  EXPECT_NO_THROW(small_config().validate());
  auto odd_d = small_config();
  odd_d.descriptor_dim = 15;
  EXPECT_THROW(odd_d.validate(), ConfigError);
  auto bad_restore = small_config();
  bad_restore.restore_channels = 6;
  EXPECT_THROW(bad_restore.validate(), ConfigError);
  auto indivisible = small_config(12, 4);
  EXPECT_THROW(indivisible.validate(), DivisibilityError);
  auto no_skip = small_config();
  no_skip.skip_channels = 0;
  EXPECT_THROW(no_skip.validate(), ConfigError);
}

TEST(DrhConfig, DeepestResNetTapGivesScaleEight) {
  StageTapSpec tap{5, 2048, 7, 7, 448, 448};
  auto cfg = DrhConfig::for_tap(tap, 1024, 256, 64, 196);
  EXPECT_EQ(cfg.first_scale_h, 8);
  EXPECT_EQ(cfg.first_scale_w, 8);
  auto shuffled = pixel_shuffle(torch::zeros({1, 2048, 7, 7}), cfg.first_scale_h, cfg.first_scale_w);
  EXPECT_EQ(shuffled.sizes(), (std::vector<std::int64_t>{1, 32, 56, 56}));
}

TEST(DrhEncode, ZeroFeaturesGiveZeroDescriptor) {
  torch::manual_seed(0);
  Drh head(small_config());
  head->eval();
  auto d = head->encode(torch::zeros({2, 16, 4, 4}), NormMode::kEval);
  EXPECT_EQ(d.sizes(), (std::vector<std::int64_t>{2, 16}));
  EXPECT_TRUE(torch::equal(d, torch::zeros_like(d)));
}

TEST(DrhEncode, SingleCellPoolingIsIdentity) {
  torch::manual_seed(1);
  Drh head(small_config());
  auto x = torch::randn({3, 16, 1, 1});
  auto d = head->encode(x, NormMode::kEval);
  auto w1 = param(head, "enc_conv1.weight");
  auto w2 = param(head, "enc_conv2.weight");
  const double s = 1.0 / std::sqrt(1.0 + 1e-5);  // fresh BN in eval mode
  auto y = torch::relu(torch::conv2d(x, w1) * s);
  y = torch::relu(torch::conv2d(y, w2, {}, 1, 1) * s);
  EXPECT_TRUE(torch::allclose(d, y.flatten(1), 1e-5, 1e-6));
}

TEST(DrhEncode, DescriptorLengthAtFullScale) {
  DrhConfig cfg{512, 1024, 256, 64, 10, 1, 1};
  Drh head(cfg);
  head->eval();
  EXPECT_EQ(head->encode(torch::rand({2, 512, 2, 2}), NormMode::kEval).size(1), 1024);
  EXPECT_EQ(param(head, "rec_fc1.weight").sizes(), (std::vector<std::int64_t>{512, 1024}));
}

TEST(DrhEncode, ChannelMismatch) {
  Drh head(small_config());
  EXPECT_THROW(head->encode(torch::zeros({1, 8, 4, 4}), NormMode::kEval), ShapeError);
  EXPECT_THROW(head->recognize(torch::zeros({1, 12}), NormMode::kEval), ShapeError);
}

TEST(DrhRecognize, ZeroClassifierGivesZeroScores) {
  Drh head(small_config());
  {
    torch::NoGradGuard g;
    param(head, "rec_fc2.weight").zero_();
    param(head, "rec_fc2.bias").zero_();
  }
  auto p = head->recognize(torch::randn({2, 16}), NormMode::kEval);
  EXPECT_TRUE(torch::equal(p, torch::zeros({2, 4})));
}

TEST(DrhRecognize, EvalModeIsDeterministic) {
  Drh head(small_config());
  auto d = torch::randn({2, 16});
  EXPECT_TRUE(torch::equal(head->recognize(d, NormMode::kEval), head->recognize(d, NormMode::kEval)));
}

TEST(DrhDenoise, ZeroInputsGiveZeroImage) {
  Drh head(small_config());
  auto out = head->denoise(torch::zeros({1, 16, 2, 2}), torch::zeros({1, 3, 16, 16}));
  EXPECT_TRUE(torch::equal(out.denoised, torch::zeros({1, 3, 16, 16})));
}

TEST(DrhDenoise, OutputIsRestoredPlusSkipAtImageSize) {
  torch::manual_seed(4);
  for (std::int64_t scale : {1, 2, 4}) {
    const std::int64_t c = 16 * scale * scale;
    Drh head(small_config(c, scale));
    const std::int64_t hw = 2;
    const std::int64_t side = hw * scale * 8;
    auto out = head->denoise(torch::randn({2, c, hw, hw}), torch::rand({2, 3, side, side}));
    EXPECT_EQ(out.denoised.sizes(), (std::vector<std::int64_t>{2, 3, side, side}));
    EXPECT_TRUE(torch::equal(out.denoised, out.restored + out.skip));
  }
}

TEST(DrhDenoise, LargeFirstScale) {
  DrhConfig cfg{2048, 16, 8, 4, 3, 8, 8};
  Drh head(cfg);
  auto out = head->denoise(torch::zeros({1, 2048, 7, 7}), torch::zeros({1, 3, 448, 448}));
  EXPECT_EQ(out.denoised.sizes(), (std::vector<std::int64_t>{1, 3, 448, 448}));
}

TEST(DrhDenoise, RejectsInconsistentImage) {
  Drh head(small_config());
  EXPECT_THROW(head->denoise(torch::zeros({1, 16, 2, 2}), torch::zeros({1, 3, 20, 16})), ShapeError);
  EXPECT_THROW(head->denoise(torch::zeros({1, 8, 2, 2}), torch::zeros({1, 3, 16, 16})), ShapeError);
}

TEST(DrhDenoise, IndependentOfRecognition) {
  torch::manual_seed(6);
  Drh head(small_config());
  auto x = torch::randn({2, 16, 2, 2});
  auto noisy = torch::rand({2, 3, 16, 16});
  auto a = head->denoise(x, noisy).denoised;
  head->score(x, NormMode::kTrain);
  auto b = head->denoise(x, noisy).denoised;
  EXPECT_TRUE(torch::equal(a, b));
  EXPECT_EQ(head->denoise_calls(), 2);
}

TEST(DrhDenoise, ParameterGroupsPartitionTheHead) {
  Drh head(small_config());
  EXPECT_EQ(head->recognition_parameters().size() + head->denoising_parameters().size(),
            head->parameters().size());
}

// ---------------------------------------------------------------------------

TEST(DrhLoss, IdentityImageGivesZeroMse) {
  auto img = torch::rand({2, 3, 8, 8});
  auto p = torch::randn({2, 4});
  auto l = drh_loss(p, img, p, img, torch::tensor({0, 3}));
  EXPECT_EQ(l.mse.item<double>(), 0.0);
}

TEST(DrhLoss, UniformLogitsGiveLogN) {
  auto p = torch::zeros({3, 4});
  auto img = torch::zeros({3, 3, 4, 4});
  auto l = drh_loss(p, img, p, img, torch::tensor({0, 1, 3}));
  EXPECT_NEAR(l.rec.item<double>(), std::log(4.0), 1e-6);
  EXPECT_NEAR(l.den_softmax.item<double>(), std::log(4.0), 1e-6);
}

TEST(DrhLoss, ConstantOffsetMse) {
  auto clean = torch::rand({2, 3, 5, 5}, torch::kDouble);
  auto p = torch::zeros({2, 2}, torch::kDouble);
  auto l = drh_loss(p, clean + 0.1, p, clean, torch::tensor({0, 1}));
  EXPECT_NEAR(l.mse.item<double>(), 0.01, 1e-12);
}

TEST(DrhLoss, MatchesScalarLoopOracle) {
  torch::manual_seed(9);
  const int B = 3, N = 5;
  auto p = torch::randn({B, N}, torch::kDouble);
  auto p_den = torch::randn({B, N}, torch::kDouble);
  auto den = torch::rand({B, 3, 4, 4}, torch::kDouble);
  auto clean = torch::rand({B, 3, 4, 4}, torch::kDouble);
  auto g = torch::tensor({4, 0, 2}, torch::kLong);
  auto l = drh_loss(p, den, p_den, clean, g);

  auto ce = [&](const torch::Tensor& s) {
    double total = 0.0;
    for (int b = 0; b < B; ++b) {
      double z = 0.0;
      for (int n = 0; n < N; ++n) z += std::exp(s[b][n].item<double>());
      total += std::log(z) - s[b][g[b].item<std::int64_t>()].item<double>();
    }
    return total / B;
  };
  double se = 0.0;
  auto d = den.flatten(), c = clean.flatten();
  for (std::int64_t i = 0; i < d.numel(); ++i) {
    const double diff = d[i].item<double>() - c[i].item<double>();
    se += diff * diff;
  }
  const double mse = se / static_cast<double>(d.numel());
  EXPECT_NEAR(l.rec.item<double>(), ce(p), 1e-12);
  EXPECT_NEAR(l.den_softmax.item<double>(), ce(p_den), 1e-12);
  EXPECT_NEAR(l.mse.item<double>(), mse, 1e-12);
  EXPECT_NEAR(l.total.item<double>(), ce(p) + mse + ce(p_den), 1e-12);
}

TEST(DrhLoss, Errors) {
  auto img = torch::zeros({2, 3, 4, 4});
  auto p = torch::zeros({2, 4});
  EXPECT_THROW(drh_loss(p, img, p, img, torch::tensor({0, 4})), LabelError);
  EXPECT_THROW(drh_loss(p, img, p, img, torch::tensor({-1, 0})), LabelError);
  EXPECT_THROW(drh_loss(p, torch::zeros({2, 3, 4, 5}), p, img, torch::tensor({0, 1})), ShapeError);
  EXPECT_THROW(drh_loss(p, img, torch::zeros({2, 3}), img, torch::tensor({0, 1})), ShapeError);
}

// ---------------------------------------------------------------------------

class DrhGradient : public ::testing::TestWithParam<std::int64_t> {};

TEST_P(DrhGradient, AnalyticMatchesCentralDifferences) {
  testing::TinyDrhProblem problem(GetParam());
  std::vector<std::pair<std::string, torch::Tensor>> params;
  for (auto& item : problem.head->named_parameters()) params.emplace_back(item.key(), item.value());
  auto r = testing::finite_difference_check(params, [&] { return problem.losses().total; });
  EXPECT_GT(r.checked, 1000);
  EXPECT_LT(r.max_rel_error, 1e-4) << "worst at " << r.worst;
}

INSTANTIATE_TEST_SUITE_P(FeatureSizes, DrhGradient, ::testing::Values(2, 1));

}  // namespace
}  // namespace antinoise

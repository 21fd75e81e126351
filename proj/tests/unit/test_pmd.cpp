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

#include <antinoise/error.hpp>
#include <antinoise/pmd.hpp>

#include "test_support.hpp"

namespace antinoise {
namespace {

using testing::same_tensors;
using testing::snapshot;
using testing::tiny_spec;
using testing::tiny_toy;

std::int64_t numel(const std::vector<torch::Tensor>& ts) {
  std::int64_t n = 0;
  for (const auto& t : ts) n += t.numel();
  return n;
}

std::vector<torch::Tensor> module_state(torch::nn::Module& m) {
  auto out = snapshot(m.parameters());
  for (auto& b : m.buffers()) out.push_back(b.detach().clone());
  return out;
}

DistillPair make_pair(std::uint64_t seed = 1) {
  auto teacher = make_pmal_model(tiny_spec(3), seed);
  teacher->eval();
  auto student = make_pmal_model(tiny_spec(3, {}), seed + 100)->backbone_ptr();
  return {teacher, student, kDefaultFeatureLossScale};
}

Batch batch_of(const LabeledDataset& data, std::int64_t n = 6) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  return make_batch(data, idx);
}

TEST(PmdOptimizers, PrefixPartition) {
  auto pair = make_pair();
  auto opts = make_pmd_optimizers(pair, {}, {});
  ASSERT_EQ(opts.size(), 4u);
  EXPECT_EQ(opts[0].params().size(), pair.student->parameters_up_to(3).size());
  EXPECT_EQ(opts[2].params().size(), pair.student->parameters_up_to(5).size());
  EXPECT_EQ(opts[3].params().size(), pair.student->all_parameters().size());
  EXPECT_EQ(make_pmd_optimizers(pair, {}, {true, false}).size(), 1u);
  EXPECT_EQ(make_pmd_optimizers(pair, {}, {false, true}).size(), 1u);
}

TEST(PmdIteration, KPlusOneUpdatesOnCleanImages) {
  auto data = tiny_toy();
  auto batch = batch_of(data);
  auto pair = make_pair(2);
  auto opts = make_pmd_optimizers(pair, {}, {});

  // Step 1 feature loss oracle, computed before any update.
  double expected_f1 = 0.0;
  {
    torch::NoGradGuard no_grad;
    auto t = pair.teacher->backbone().forward_to(batch.images, 3, NormMode::kEval);
    auto sb = pair.student->forward_to(batch.images, 3, NormMode::kTrain);
    expected_f1 = 100.0 * (sb - t).pow(2).mean().item<double>();
  }
  auto reports = pmd_train_iteration(pair, batch, opts, 0.01);
  ASSERT_EQ(reports.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(opts[i].updates(), 1);
  ASSERT_EQ(reports[0].losses.size(), 1u);
  EXPECT_EQ(reports[0].losses[0].first, "feature_s3");
  EXPECT_NEAR(reports[0].losses[0].second, expected_f1, 1e-4 * std::max(1.0, expected_f1));
  EXPECT_EQ(reports[1].losses[0].first, "feature_s4");
  EXPECT_EQ(reports[2].losses[0].first, "feature_s5");
  std::vector<std::string> keys;
  for (const auto& [k, v] : reports[3].losses) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"score_mse_s3", "score_mse_s4", "score_mse_s5",
                                             "score_mse_backbone", "student_ce"}));
}

TEST(PmdIteration, IsDeterministicGivenTheBatch) {
  auto data = tiny_toy();
  auto batch = batch_of(data);
  auto a = make_pair(3);
  auto b = make_pair(3);
  auto oa = make_pmd_optimizers(a, {}, {});
  auto ob = make_pmd_optimizers(b, {}, {});
  auto ra = pmd_train_iteration(a, batch, oa, 0.01);
  auto rb = pmd_train_iteration(b, batch, ob, 0.01);
  for (std::size_t i = 0; i < ra.size(); ++i) EXPECT_EQ(ra[i].losses, rb[i].losses);
  EXPECT_TRUE(same_tensors(module_state(*a.student), module_state(*b.student)));
}

TEST(PmdIteration, IdenticalStudentHasZeroEvalFeatureGap) {
  auto data = tiny_toy();
  auto pair = make_pair(4);
  {
    torch::NoGradGuard no_grad;
    auto src = pair.teacher->backbone().named_parameters();
    for (auto& p : pair.student->named_parameters()) p.value().copy_(src[p.key()]);
    auto bsrc = pair.teacher->backbone().named_buffers();
    for (auto& b : pair.student->named_buffers()) b.value().copy_(bsrc[b.key()]);
    for (int tap : pair.teacher->taps()) {
      auto t = pair.teacher->backbone().forward_to(data.images, tap, NormMode::kEval);
      auto s = pair.student->forward_to(data.images, tap, NormMode::kEval);
      EXPECT_TRUE(torch::equal(t, s)) << "tap " << tap;
    }
  }
}

TEST(PmdIteration, BaselineKdIsOneScoreUpdate) {
  auto data = tiny_toy();
  auto pair = make_pair(5);
  PmdIterationOptions mode{true, false};
  auto opts = make_pmd_optimizers(pair, {}, mode);
  auto reports = pmd_train_iteration(pair, batch_of(data), opts, 0.01, mode);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(opts[0].updates(), 1);
  for (const auto& [k, v] : reports[0].losses) EXPECT_EQ(k.rfind("feature", 0), std::string::npos);
  EXPECT_EQ(reports[0].losses.size(), 5u);
}

TEST(PmdIteration, SingleStepCombinesAllLosses) {
  auto data = tiny_toy();
  auto pair = make_pair(5);
  PmdIterationOptions mode{false, true};
  auto opts = make_pmd_optimizers(pair, {}, mode);
  auto reports = pmd_train_iteration(pair, batch_of(data), opts, 0.01, mode);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(reports[0].losses.size(), 8u);
  EXPECT_EQ(reports[0].losses[0].first, "feature_s3");
}

TEST(PmdStructure, MismatchListsStagesAndRefuses) {
  auto teacher = make_pmal_model(tiny_spec(3), 1);
  auto spec = tiny_spec(3, {});
  spec.widths[3] = 24;
  auto student = make_pmal_model(spec, 1)->backbone_ptr();
  auto diffs = distill_mismatches(teacher, *student);
  ASSERT_EQ(diffs.size(), 1u);
  EXPECT_NE(diffs[0].find("stage 4"), std::string::npos);
  DistillPair pair{teacher, student};
  EXPECT_THROW(pair.validate(), ShapeError);
  EXPECT_THROW(PmdTrainer(pair, {}), ShapeError);

  auto small = tiny_spec(3, {});
  small.input_height = small.input_width = 64;
  auto other = make_pmal_model(small, 1)->backbone_ptr();
  EXPECT_FALSE(distill_mismatches(teacher, *other).empty());

  DistillPair no_alpha{teacher, make_pmal_model(tiny_spec(3, {}), 1)->backbone_ptr(), 0.0};
  EXPECT_THROW(no_alpha.validate(), ConfigError);
}

TEST(PmdTrainer, TeacherIsUntouchedAndStudentIsPlain) {
  auto data = tiny_toy();
  auto pair = make_pair(6);
  auto teacher_before = module_state(*pair.teacher);
  PmdTrainOptions o;
  o.epochs = 2;
  o.batch_size = 6;
  o.lr = 0.01;
  o.seed = 3;
  auto student_before = snapshot(pair.student->parameters());
  auto log = pmd_train(pair, data, &data, o);
  ASSERT_EQ(log.size(), 2u);
  EXPECT_EQ(log[0].phase, "distill");
  EXPECT_EQ(log[1].phase, "finetune");
  EXPECT_EQ(log[1].losses.size(), 1u);
  EXPECT_TRUE(same_tensors(teacher_before, module_state(*pair.teacher)));
  EXPECT_FALSE(same_tensors(student_before, snapshot(pair.student->parameters())));

  auto plain = make_pmal_model(tiny_spec(3, {}), 0);
  EXPECT_EQ(numel(pair.student->parameters()), numel(plain->parameters()));
  EXPECT_EQ(numel(pair.student->parameters()), numel(pair.teacher->backbone().parameters()));
  EXPECT_LT(numel(pair.student->parameters()), numel(pair.teacher->parameters()));
}

TEST(PmdTrainer, DistillEpochsIsHalf) {
  PmdTrainOptions o;
  o.epochs = 7;
  EXPECT_EQ(o.distill_epochs(), 3);
  o.epochs = 0;
  EXPECT_THROW(o.validate(), ConfigError);
}

}  // namespace
}  // namespace antinoise

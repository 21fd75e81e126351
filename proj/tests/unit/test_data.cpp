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

#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include <antinoise/data.hpp>
#include <antinoise/error.hpp>
#include <antinoise/image_io.hpp>
#include <antinoise/toy_data.hpp>

#include "test_support.hpp"

namespace antinoise {
namespace {

namespace fs = std::filesystem;

void write_random_folder(const fs::path& root, int classes, int per_class, std::int64_t size = 12) {
  torch::manual_seed(17);
  for (int c = 0; c < classes; ++c) {
    const auto dir = root / ("cls_" + std::string(1, static_cast<char>('d' - c)));
    fs::create_directories(dir);
    for (int i = 0; i < per_class; ++i) {
      write_png(dir / ("img" + std::to_string(i) + ".png"), torch::rand({3, size, size}));
    }
  }
}

std::set<std::string> sources_of(const LabeledDataset& d) {
  return {d.sources.begin(), d.sources.end()};
}

TEST(FolderDataset, EightyTwentySplit) {
  testing::TempDir tmp;
  write_random_folder(tmp.path(), 4, 25);
  auto s = load_folder_dataset(tmp.path(), 16, 16, {0.8, 0.2, 0.0});
  EXPECT_EQ(s.train.size(), 80);
  EXPECT_EQ(s.val.size(), 20);
  EXPECT_EQ(s.test.size(), 0);
  EXPECT_EQ(s.train.num_classes(), 4);
  EXPECT_EQ(s.skipped, 0);
  EXPECT_EQ(s.train.images.sizes(), (std::vector<std::int64_t>{80, 3, 16, 16}));
  // Alphabetical class order regardless of creation order.
  EXPECT_EQ(s.train.class_names, (std::vector<std::string>{"cls_a", "cls_b", "cls_c", "cls_d"}));
  EXPECT_GE(s.train.images.min().item<float>(), 0.0f);
  EXPECT_LE(s.train.images.max().item<float>(), 1.0f);
  for (std::int64_t c = 0; c < 4; ++c) {
    EXPECT_EQ(s.train.labels.eq(c).sum().item<std::int64_t>(), 20);
    EXPECT_EQ(s.val.labels.eq(c).sum().item<std::int64_t>(), 5);
  }
}

TEST(FolderDataset, DeterministicAndDisjoint) {
  testing::TempDir tmp;
  write_random_folder(tmp.path(), 3, 10);
  auto a = load_folder_dataset(tmp.path(), 8, 8, {0.6, 0.2, 0.2});
  auto b = load_folder_dataset(tmp.path(), 8, 8, {0.6, 0.2, 0.2});
  EXPECT_EQ(a.train.sources, b.train.sources);
  EXPECT_EQ(a.test.sources, b.test.sources);
  EXPECT_TRUE(torch::equal(a.train.images, b.train.images));

  auto tr = sources_of(a.train), va = sources_of(a.val), te = sources_of(a.test);
  std::set<std::string> all;
  for (const auto* s : {&tr, &va, &te}) all.insert(s->begin(), s->end());
  EXPECT_EQ(all.size(), tr.size() + va.size() + te.size());
  EXPECT_EQ(all.size(), 30u);
}

TEST(FolderDataset, CorruptFileIsSkipped) {
  testing::TempDir tmp;
  write_random_folder(tmp.path(), 2, 5);
  std::ofstream(tmp / "cls_c/broken.png") << "not an image";
  auto s = load_folder_dataset(tmp.path(), 8, 8, {1.0, 0.0, 0.0});
  EXPECT_EQ(s.skipped, 1);
  EXPECT_EQ(s.train.size(), 10);
}

TEST(FolderDataset, Errors) {
  testing::TempDir tmp;
  auto code_of = [](const fs::path& root) {
    try {
      load_folder_dataset(root, 8, 8, {});
    } catch (const DatasetError& e) {
      return e.code();
    }
    return std::string("none");
  };
  EXPECT_EQ(code_of(tmp / "missing"), "dataset_not_found");
  EXPECT_EQ(code_of(tmp.path()), "no_classes");
  fs::create_directories(tmp / "only");
  std::ofstream(tmp / "only/junk.txt") << "x";
  EXPECT_EQ(code_of(tmp.path()), "empty_class");
}

TEST(Splits, RejectBadFractions) {
  EXPECT_THROW(SplitSpec({0.5, 0.2, 0.2}).validate(), ConfigError);
  EXPECT_THROW(SplitSpec({1.2, -0.2, 0.0}).validate(), ConfigError);
}

TEST(Batches, EpochOrderIsAPermutationFixedPerSeedAndEpoch) {
  auto a = epoch_batches(37, 8, 3, 0);
  auto b = epoch_batches(37, 8, 3, 0);
  auto c = epoch_batches(37, 8, 3, 1);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  std::set<std::int64_t> seen;
  for (const auto& batch : a) {
    EXPECT_GE(batch.size(), 2u);
    seen.insert(batch.begin(), batch.end());
  }
  EXPECT_EQ(seen.size(), 37u);
  // 33 = 4 * 8 + 1: the trailing singleton is dropped.
  auto d = epoch_batches(33, 8, 3, 0);
  EXPECT_EQ(d.size(), 4u);
}

TEST(Batches, FlipIsHorizontalMirror) {
  auto ds = testing::tiny_toy(2, 4);
  std::vector<std::int64_t> idx = {0, 1, 2, 3, 4, 5, 6, 7};
  auto plain = make_batch(ds, idx);
  auto flipped = make_batch(ds, idx, 99);
  int changed = 0;
  for (std::int64_t i = 0; i < 8; ++i) {
    if (torch::equal(flipped.images[i], plain.images[i])) continue;
    EXPECT_TRUE(torch::equal(flipped.images[i], plain.images[i].flip({2})));
    ++changed;
  }
  EXPECT_GT(changed, 0);
  EXPECT_LT(changed, 8);
  EXPECT_TRUE(torch::equal(flipped.labels, plain.labels));
}

TEST(ToyData, CountsShapesAndRange) {
  auto ds = make_toy_dataset(4, 20, 64, 1);
  EXPECT_EQ(ds.size(), 80);
  EXPECT_EQ(ds.num_classes(), 4);
  EXPECT_EQ(ds.images.sizes(), (std::vector<std::int64_t>{80, 3, 64, 64}));
  EXPECT_GE(ds.images.min().item<float>(), 0.0f);
  EXPECT_LE(ds.images.max().item<float>(), 1.0f);
  for (std::int64_t c = 0; c < 4; ++c) EXPECT_EQ(ds.labels.eq(c).sum().item<std::int64_t>(), 20);
}

TEST(ToyData, SeedContract) {
  auto a = make_toy_dataset(3, 5, 32, 1);
  auto b = make_toy_dataset(3, 5, 32, 1);
  auto c = make_toy_dataset(3, 5, 32, 2);
  EXPECT_TRUE(torch::equal(a.images, b.images));
  EXPECT_FALSE(torch::equal(a.images, c.images));
  EXPECT_EQ(a.images.sizes(), c.images.sizes());
  EXPECT_TRUE(torch::equal(a.labels, c.labels));
}

TEST(ToyData, BadgesAreDistinctAndFlipSymmetric) {
  std::set<std::array<int, 9>> seen;
  for (int c = 0; c < 16; ++c) {
    auto p = toy_badge_pattern(c);
    for (int r = 0; r < 3; ++r) EXPECT_EQ(p[static_cast<std::size_t>(r * 3)], p[static_cast<std::size_t>(r * 3 + 2)]);
    seen.insert(p);
  }
  EXPECT_EQ(seen.size(), 16u);
  EXPECT_THROW(toy_badge_pattern(1000), ConfigError);
}

TEST(ToyData, FolderRoundTrip) {
  testing::TempDir tmp;
  auto ds = make_toy_dataset(3, 4, 32, 8);
  write_folder_dataset(ds, tmp.path());
  auto s = load_folder_dataset(tmp.path(), 32, 32, {1.0, 0.0, 0.0});
  EXPECT_EQ(s.train.size(), 12);
  EXPECT_EQ(s.train.class_names, ds.class_names);
  // Files are numbered per class in dataset order; compare up to PNG quantization.
  std::map<std::string, torch::Tensor> expected;
  std::map<std::int64_t, int> counter;
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    const auto cls = ds.labels[i].item<std::int64_t>();
    char name[64];
    std::snprintf(name, sizeof(name), "%s/%05d.png", ds.class_names[static_cast<std::size_t>(cls)].c_str(),
                  counter[cls]++);
    expected[name] = ds.images[i];
  }
  for (std::int64_t i = 0; i < s.train.size(); ++i) {
    const auto& src = s.train.sources[static_cast<std::size_t>(i)];
    ASSERT_TRUE(expected.count(src)) << src;
    EXPECT_LT((s.train.images[i] - expected[src]).abs().max().item<float>(), 0.5f / 255.0f + 1e-6f);
  }
}

}  // namespace
}  // namespace antinoise

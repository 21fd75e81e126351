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

#include <benchmark/benchmark.h>

#include <antinoise/eval.hpp>
#include <antinoise/pixel_shuffle.hpp>
#include <antinoise/pmal.hpp>
#include <antinoise/pmd.hpp>
#include <antinoise/toy_data.hpp>

namespace antinoise {
namespace {

ModelSpec desk_spec(std::int64_t classes) {
  ModelSpec s;
  s.widths = {16, 32, 64, 128, 256};
  s.descriptor_dim = 128;
  s.restore_channels = 32;
  s.skip_channels = 8;
  s.num_classes = classes;
  return s;
}

void BM_PixelShuffle(benchmark::State& state) {
  const auto s = state.range(0);
  auto x = torch::randn({8, 64 * s * s, 8, 8});
  for (auto _ : state) benchmark::DoNotOptimize(pixel_shuffle(x, s, s));
}
BENCHMARK(BM_PixelShuffle)->Arg(1)->Arg(2)->Arg(4);

void BM_BackboneForward(benchmark::State& state) {
  auto model = make_pmal_model(desk_spec(8), 1);
  model->eval();
  auto x = torch::rand({8, 3, 64, 64});
  torch::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(model->backbone().forward_score(x, NormMode::kEval));
}
BENCHMARK(BM_BackboneForward)->Unit(benchmark::kMillisecond);

void BM_DrhDenoise(benchmark::State& state) {
  auto model = make_pmal_model(desk_spec(8), 1);
  model->eval();
  const auto k = static_cast<std::size_t>(state.range(0));
  auto x = torch::rand({8, 3, 64, 64});
  torch::NoGradGuard no_grad;
  auto feat = model->backbone().forward_to(x, model->taps()[k], NormMode::kEval);
  for (auto _ : state) benchmark::DoNotOptimize(model->head(k)->denoise(feat, x).denoised);
}
BENCHMARK(BM_DrhDenoise)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_PmalInfer(benchmark::State& state) {
  auto model = make_pmal_model(desk_spec(8), 1);
  model->eval();
  auto x = torch::rand({8, 3, 64, 64});
  for (auto _ : state) benchmark::DoNotOptimize(pmal_infer(model, x).final_score);
}
BENCHMARK(BM_PmalInfer)->Unit(benchmark::kMillisecond);

void BM_PmalIteration(benchmark::State& state) {
  auto data = make_toy_dataset(8, 1, 64, 1);
  std::vector<std::int64_t> idx(8);
  std::iota(idx.begin(), idx.end(), 0);
  auto batch = make_batch(data, idx);
  auto model = make_pmal_model(desk_spec(8), 1);
  SamOptions sam;
  sam.enabled = state.range(0) != 0;
  auto opts = make_pmal_optimizers(model, sam, false);
  NoiseGenerator noise(0.05, 3);
  for (auto _ : state) pmal_train_iteration(model, batch, opts, noise, 0.001);
}
BENCHMARK(BM_PmalIteration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PmdIteration(benchmark::State& state) {
  auto data = make_toy_dataset(8, 1, 64, 1);
  std::vector<std::int64_t> idx(8);
  std::iota(idx.begin(), idx.end(), 0);
  auto batch = make_batch(data, idx);
  auto teacher = make_pmal_model(desk_spec(8), 1);
  teacher->eval();
  auto spec = desk_spec(8);
  spec.taps.clear();
  DistillPair pair{teacher, make_pmal_model(spec, 2)->backbone_ptr()};
  auto opts = make_pmd_optimizers(pair, {}, {});
  for (auto _ : state) pmd_train_iteration(pair, batch, opts, 0.001);
}
BENCHMARK(BM_PmdIteration)->Unit(benchmark::kMillisecond);

void BM_Psnr(benchmark::State& state) {
  auto a = torch::rand({3, 64, 64});
  auto b = torch::rand({3, 64, 64});
  for (auto _ : state) benchmark::DoNotOptimize(psnr(a, b));
}
BENCHMARK(BM_Psnr);

}  // namespace
}  // namespace antinoise

BENCHMARK_MAIN();

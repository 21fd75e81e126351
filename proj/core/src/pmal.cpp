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

#include "antinoise/pmal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "antinoise/error.hpp"
#include "antinoise/seeding.hpp"

namespace antinoise {

namespace {

std::string head_key(int stage, const char* what) {
  return "s" + std::to_string(stage) + "_" + what;
}

/// Loss of head k on one noisy draw, with the denoised image re-fed through
/// the backbone. The re-forward never updates normalization statistics.
DrhLosses head_step_loss(PmalModel& model, std::size_t k, const torch::Tensor& noisy,
                         const Batch& batch, NormMode mode) {
  auto& backbone = model->backbone();
  auto& head = model->head(k);
  const int stage = model->taps()[k];
  auto x = backbone.forward_to(noisy, stage, mode);
  auto p = head->score(x, mode);
  auto den = head->denoise(x, noisy);
  auto x_den = backbone.forward_to(den.denoised, stage, NormMode::kTrainFrozenStats);
  auto p_den = head->score(x_den, NormMode::kTrainFrozenStats);
  return drh_loss(p, den.denoised, p_den, batch.images, batch.labels);
}

NormMode mode_for(SamPass pass) {
  // The perturbed pass re-evaluates the same batch; it must not count twice
  // in the running statistics.
  return pass == SamPass::kAtWeights ? NormMode::kTrain : NormMode::kTrainFrozenStats;
}

}  // namespace

PmalModelImpl::PmalModelImpl(std::shared_ptr<StagedBackbone> backbone, const ModelSpec& spec)
    : backbone_(std::move(backbone)), spec_(spec) {
  if (!backbone_) throw ConfigError("PMAL model needs a backbone");
  if (backbone_->num_classes() != spec_.num_classes) {
    throw ConfigError("backbone class count differs from model spec");
  }
  register_module("backbone", backbone_);
  tap_specs_ = stage_shapes(backbone_->layout(), backbone_->input_height(),
                            backbone_->input_width(), spec_.taps);
  for (const auto& tap : tap_specs_) {
    auto cfg = DrhConfig::for_tap(tap, spec_.descriptor_dim, spec_.restore_channels,
                                  spec_.skip_channels, spec_.num_classes);
    heads_.push_back(register_module("head_s" + std::to_string(tap.stage_index), Drh(cfg)));
  }
}

std::int64_t PmalModelImpl::denoise_calls() const {
  std::int64_t n = 0;
  for (const auto& h : heads_) n += h->denoise_calls();
  return n;
}

PmalModel make_pmal_model(const ModelSpec& spec, std::uint64_t init_seed) {
  if (spec.backbone_id != "reference") {
    throw ConfigError("unknown backbone '" + spec.backbone_id + "'", "unknown_backbone");
  }
  // Validate the tap layout before allocating anything.
  stage_shapes(reference_layout(spec.widths), spec.input_height, spec.input_width, spec.taps);
  torch::manual_seed(derive_seed(init_seed, SeedStream::kInit));
  auto backbone = std::make_shared<ReferenceBackbone>(spec.input_height, spec.input_width,
                                                      spec.num_classes, spec.widths);
  return PmalModel(backbone, spec);
}

std::vector<SamOptimizer> make_pmal_optimizers(PmalModel& model, const SamOptions& options,
                                               bool single_step) {
  std::vector<SamOptimizer> opts;
  auto& backbone = model->backbone();
  if (single_step) {
    opts.emplace_back(model->parameters(), options, 1);
    return opts;
  }
  for (int k = 0; k < model->num_heads(); ++k) {
    auto params = backbone.parameters_up_to(model->taps()[static_cast<std::size_t>(k)]);
    auto head = model->head(static_cast<std::size_t>(k))->parameters();
    params.insert(params.end(), head.begin(), head.end());
    opts.emplace_back(std::move(params), options, k + 1);
  }
  opts.emplace_back(backbone.all_parameters(), options, model->num_heads() + 1);
  return opts;
}

std::vector<StepReport> pmal_train_iteration(PmalModel& model, const Batch& batch,
                                             std::vector<SamOptimizer>& optimizers,
                                             NoiseGenerator& noise, double lr,
                                             const PmalIterationOptions& options) {
  const int num_heads = model->num_heads();
  const int num_steps = num_heads + 1;
  auto& backbone = model->backbone();
  std::vector<StepReport> reports;

  if (options.single_step) {
    if (optimizers.size() != 1) throw ConfigError("single-step training needs one optimizer");
    std::vector<torch::Tensor> noisy;
    for (int s = 0; s < num_steps; ++s) noisy.push_back(noise(batch.images));
    StepReport report{1, {}, 0.0};
    auto closure = [&](SamPass pass) {
      const auto mode = mode_for(pass);
      const bool record = pass == SamPass::kAtWeights;
      torch::Tensor total = torch::zeros({});
      for (int k = 0; k < num_heads; ++k) {
        auto l = head_step_loss(model, static_cast<std::size_t>(k),
                                noisy[static_cast<std::size_t>(k)], batch, mode);
        if (record) {
          const int stage = model->taps()[static_cast<std::size_t>(k)];
          report.losses.emplace_back(head_key(stage, "rec"), l.rec.item<double>());
          report.losses.emplace_back(head_key(stage, "mse"), l.mse.item<double>());
          report.losses.emplace_back(head_key(stage, "den_softmax"), l.den_softmax.item<double>());
        }
        total = total + l.total;
      }
      auto ce = softmax_loss(backbone.forward_score(noisy.back(), mode), batch.labels);
      if (record) report.losses.emplace_back("backbone_ce", ce.item<double>());
      return total + ce;
    };
    model->zero_grad();
    report.grad_norm = optimizers.front().step(closure, lr).grad_norm;
    reports.push_back(std::move(report));
    return reports;
  }

  if (static_cast<int>(optimizers.size()) != num_steps) {
    throw ConfigError("expected " + std::to_string(num_steps) + " step optimizers");
  }
  std::vector<int> order = options.step_order;
  if (order.empty()) {
    order.resize(static_cast<std::size_t>(num_steps));
    std::iota(order.begin(), order.end(), 1);
  }

  for (int step : order) {
    StepReport report{step, {}, 0.0};
    auto noisy = noise(batch.images);
    LossClosure closure;
    if (step <= num_heads) {
      const auto k = static_cast<std::size_t>(step - 1);
      const int stage = model->taps()[k];
      closure = [&, k, stage](SamPass pass) {
        auto l = head_step_loss(model, k, noisy, batch, mode_for(pass));
        if (pass == SamPass::kAtWeights) {
          report.losses = {{head_key(stage, "rec"), l.rec.item<double>()},
                           {head_key(stage, "mse"), l.mse.item<double>()},
                           {head_key(stage, "den_softmax"), l.den_softmax.item<double>()}};
        }
        return l.total;
      };
    } else {
      closure = [&](SamPass pass) {
        auto ce = softmax_loss(backbone.forward_score(noisy, mode_for(pass)), batch.labels);
        if (pass == SamPass::kAtWeights) report.losses = {{"backbone_ce", ce.item<double>()}};
        return ce;
      };
    }
    model->zero_grad();
    report.grad_norm = optimizers.at(static_cast<std::size_t>(step - 1)).step(closure, lr).grad_norm;
    reports.push_back(std::move(report));
  }
  return reports;
}

PmalPrediction pmal_infer(PmalModel& model, const torch::Tensor& images) {
  torch::NoGradGuard no_grad;
  auto out = model->backbone().forward_with_taps(images, model->taps(), NormMode::kEval);
  PmalPrediction pred;
  for (std::size_t k = 0; k < out.taps.size(); ++k) {
    pred.parts.push_back(model->head(k)->score(out.taps[k].values, NormMode::kEval));
  }
  pred.parts.push_back(out.score);
  pred.final_score = torch::stack(pred.parts).mean(0);
  return pred;
}

double pmal_accuracy(PmalModel& model, const LabeledDataset& dataset, std::int64_t batch_size) {
  if (dataset.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  std::int64_t correct = 0;
  for (std::int64_t start = 0; start < dataset.size(); start += batch_size) {
    const auto end = std::min(dataset.size(), start + batch_size);
    auto pred = pmal_infer(model, dataset.images.slice(0, start, end)).final_score.argmax(1);
    correct += pred.eq(dataset.labels.slice(0, start, end)).sum().item<std::int64_t>();
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

void PmalTrainOptions::validate() const {
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (batch_size < 2) throw ConfigError("batch size must be at least 2");
  if (!(lr >= 0.0)) throw ConfigError("learning rate must be non-negative");
  NoiseSpec{sigma, std::nullopt}.validate();
  sam.validate();
}

void LossAccumulator::add(const std::vector<StepReport>& reports) {
  for (const auto& r : reports) {
    for (const auto& [key, value] : r.losses) {
      auto it = std::find(keys_.begin(), keys_.end(), key);
      std::size_t i;
      if (it == keys_.end()) {
        keys_.push_back(key);
        sums_.push_back(0.0);
        counts_.push_back(0);
        i = keys_.size() - 1;
      } else {
        i = static_cast<std::size_t>(it - keys_.begin());
      }
      sums_[i] += value;
      ++counts_[i];
    }
  }
}

std::vector<std::pair<std::string, double>> LossAccumulator::means() const {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    out.emplace_back(keys_[i], sums_[i] / static_cast<double>(std::max<std::int64_t>(1, counts_[i])));
  }
  return out;
}

PmalTrainer::PmalTrainer(PmalModel model, PmalTrainOptions options)
    : model_(std::move(model)), options_(std::move(options)) {
  options_.validate();
  optimizers_ = make_pmal_optimizers(model_, options_.sam, options_.single_step);
}

EpochMetrics PmalTrainer::train_epoch(const LabeledDataset& train, const LabeledDataset* val) {
  const int epoch = completed_epochs_;  // 0-based index of the epoch being run
  const auto e = static_cast<std::uint64_t>(epoch);
  CosineSchedule schedule{options_.lr, static_cast<double>(options_.epochs)};
  const double lr = schedule.lr_at(epoch);
  NoiseGenerator noise(options_.sigma, derive_seed(options_.seed, SeedStream::kTrainNoise, e));
  std::mt19937_64 order_rng(derive_seed(options_.seed, SeedStream::kAugment, e) ^ 0x5bd1e995ULL);

  model_->train();
  LossAccumulator acc;
  const auto batches = epoch_batches(train.size(), options_.batch_size, options_.seed, epoch);
  for (std::size_t b = 0; b < batches.size(); ++b) {
    std::optional<std::uint64_t> flip;
    if (options_.flip_augment) flip = derive_seed(options_.seed, SeedStream::kAugment, e * 100003ULL + b);
    auto batch = make_batch(train, batches[b], flip);
    PmalIterationOptions it;
    it.single_step = options_.single_step;
    if (options_.order == StepOrder::kShuffled && !options_.single_step) {
      it.step_order.resize(static_cast<std::size_t>(model_->num_heads() + 1));
      std::iota(it.step_order.begin(), it.step_order.end(), 1);
      std::shuffle(it.step_order.begin(), it.step_order.end(), order_rng);
    }
    acc.add(pmal_train_iteration(model_, batch, optimizers_, noise, lr, it));
  }
  model_->eval();

  EpochMetrics m;
  m.epoch = epoch + 1;
  m.lr = lr;
  m.phase = "pmal";
  m.losses = acc.means();
  m.train_acc = pmal_accuracy(model_, train);
  m.val_acc = val ? pmal_accuracy(model_, *val) : std::numeric_limits<double>::quiet_NaN();
  ++completed_epochs_;
  return m;
}

std::vector<EpochMetrics> PmalTrainer::fit(const LabeledDataset& train, const LabeledDataset* val,
                                           const EpochCallback& on_epoch) {
  if (train.size() < 2) throw DatasetError("empty_dataset", "training set needs at least 2 samples");
  if (train.num_classes() != model_->num_classes()) {
    throw ConfigError("dataset has " + std::to_string(train.num_classes()) +
                      " classes but the model was built for " +
                      std::to_string(model_->num_classes()));
  }
  std::vector<EpochMetrics> log;
  while (completed_epochs_ < options_.epochs) {
    auto m = train_epoch(train, val);
    const double score = val && val->size() > 0 ? m.val_acc : m.train_acc;
    const bool improved = score > best_val_ || !val;
    if (improved && val) best_val_ = score;
    if (on_epoch) on_epoch(m, improved);
    log.push_back(std::move(m));
  }
  return log;
}

std::vector<EpochMetrics> pmal_train(PmalModel& model, const LabeledDataset& train,
                                     const LabeledDataset* val, const PmalTrainOptions& options,
                                     const EpochCallback& on_epoch) {
  PmalTrainer trainer(model, options);
  return trainer.fit(train, val, on_epoch);
}

}  // namespace antinoise

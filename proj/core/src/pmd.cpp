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

#include "antinoise/pmd.hpp"

#include <limits>
#include <sstream>

#include "antinoise/error.hpp"
#include "antinoise/seeding.hpp"

namespace antinoise {

namespace {

struct TeacherTargets {
  std::vector<torch::Tensor> taps;    // x_t^k
  std::vector<torch::Tensor> scores;  // p_t^1..p_t^K, p_t^C
};

TeacherTargets teacher_targets(PmalModel& teacher, const torch::Tensor& images) {
  torch::NoGradGuard no_grad;
  auto out = teacher->backbone().forward_with_taps(images, teacher->taps(), NormMode::kEval);
  TeacherTargets t;
  for (std::size_t k = 0; k < out.taps.size(); ++k) {
    t.taps.push_back(out.taps[k].values);
    t.scores.push_back(teacher->head(k)->score(out.taps[k].values, NormMode::kEval));
  }
  t.scores.push_back(out.score);
  return t;
}

NormMode mode_for(SamPass pass) {
  return pass == SamPass::kAtWeights ? NormMode::kTrain : NormMode::kTrainFrozenStats;
}

}  // namespace

std::vector<std::string> distill_mismatches(PmalModel& teacher, StagedBackbone& student) {
  std::vector<std::string> diffs;
  auto& tb = teacher->backbone();
  if (tb.input_height() != student.input_height() || tb.input_width() != student.input_width()) {
    std::ostringstream os;
    os << "input size: teacher " << tb.input_height() << "x" << tb.input_width() << ", student "
       << student.input_height() << "x" << student.input_width();
    diffs.push_back(os.str());
  }
  if (tb.num_classes() != student.num_classes()) {
    diffs.push_back("classes: teacher " + std::to_string(tb.num_classes()) + ", student " +
                    std::to_string(student.num_classes()));
  }
  const auto& tl = tb.layout();
  const auto& sl = student.layout();
  if (tl.num_stages() != sl.num_stages()) {
    diffs.push_back("stage count: teacher " + std::to_string(tl.num_stages()) + ", student " +
                    std::to_string(sl.num_stages()));
  }
  for (int s = 1; s <= std::min(tl.num_stages(), sl.num_stages()); ++s) {
    const auto& a = tl.stages[static_cast<std::size_t>(s - 1)];
    const auto& b = sl.stages[static_cast<std::size_t>(s - 1)];
    if (a.channels != b.channels || a.stride != b.stride) {
      std::ostringstream os;
      os << "stage " << s << ": teacher " << a.channels << "ch/stride " << a.stride << ", student "
         << b.channels << "ch/stride " << b.stride;
      diffs.push_back(os.str());
    }
  }
  return diffs;
}

void DistillPair::validate() const {
  if (!teacher || !student) throw ConfigError("distillation needs a teacher and a student");
  auto t = teacher;
  auto diffs = distill_mismatches(t, *student);
  if (!diffs.empty()) {
    std::string msg = "teacher/student structure mismatch:";
    for (const auto& d : diffs) msg += "\n  " + d;
    throw ShapeError(msg);
  }
  if (!(alpha > 0.0)) throw ConfigError("feature loss scale alpha must be positive");
}

std::vector<SamOptimizer> make_pmd_optimizers(DistillPair& pair, const SamOptions& options,
                                              const PmdIterationOptions& mode) {
  std::vector<SamOptimizer> opts;
  const int k_heads = pair.teacher->num_heads();
  if (mode.baseline_kd || mode.single_step) {
    opts.emplace_back(pair.student->all_parameters(), options, 1);
    return opts;
  }
  for (int k = 0; k < k_heads; ++k) {
    opts.emplace_back(pair.student->parameters_up_to(pair.teacher->taps()[static_cast<std::size_t>(k)]),
                      options, k + 1);
  }
  opts.emplace_back(pair.student->all_parameters(), options, k_heads + 1);
  return opts;
}

std::vector<StepReport> pmd_train_iteration(DistillPair& pair, const Batch& batch,
                                            std::vector<SamOptimizer>& optimizers, double lr,
                                            const PmdIterationOptions& options) {
  auto& student = *pair.student;
  auto& teacher = pair.teacher;
  const int k_heads = teacher->num_heads();
  const auto& taps = teacher->taps();
  const auto targets = teacher_targets(teacher, batch.images);
  std::vector<StepReport> reports;

  auto feature_loss = [&](std::size_t k, NormMode mode) {
    auto xs = student.forward_to(batch.images, taps[k], mode);
    if (!xs.sizes().equals(targets.taps[k].sizes())) {
      throw ShapeError("student tap shape differs from teacher tap at stage " +
                       std::to_string(taps[k]));
    }
    return pair.alpha * torch::mse_loss(xs, targets.taps[k]);
  };
  auto score_loss = [&](NormMode mode, StepReport* report) {
    auto ps = student.forward_score(batch.images, mode);
    torch::Tensor total = torch::zeros({});
    for (std::size_t k = 0; k < targets.scores.size(); ++k) {
      auto m = torch::mse_loss(ps, targets.scores[k]);
      if (report) {
        const std::string key = k + 1 < targets.scores.size()
                                    ? "score_mse_s" + std::to_string(taps[k])
                                    : std::string("score_mse_backbone");
        report->losses.emplace_back(key, m.item<double>());
      }
      total = total + m;
    }
    auto ce = softmax_loss(ps, batch.labels);
    if (report) report->losses.emplace_back("student_ce", ce.item<double>());
    return total + ce;
  };

  if (options.baseline_kd || options.single_step) {
    if (optimizers.size() != 1) throw ConfigError("expected a single student optimizer");
    StepReport report{1, {}, 0.0};
    auto closure = [&](SamPass pass) {
      const auto mode = mode_for(pass);
      StepReport* rec = pass == SamPass::kAtWeights ? &report : nullptr;
      torch::Tensor total = torch::zeros({});
      if (options.single_step && !options.baseline_kd) {
        for (int k = 0; k < k_heads; ++k) {
          auto f = feature_loss(static_cast<std::size_t>(k), mode);
          if (rec) rec->losses.emplace_back("feature_s" + std::to_string(taps[static_cast<std::size_t>(k)]), f.item<double>());
          total = total + f;
        }
      }
      return total + score_loss(mode, rec);
    };
    student.zero_grad();
    report.grad_norm = optimizers.front().step(closure, lr).grad_norm;
    reports.push_back(std::move(report));
    return reports;
  }

  if (static_cast<int>(optimizers.size()) != k_heads + 1) {
    throw ConfigError("expected " + std::to_string(k_heads + 1) + " student optimizers");
  }
  for (int k = 0; k < k_heads; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    StepReport report{k + 1, {}, 0.0};
    auto closure = [&](SamPass pass) {
      auto f = feature_loss(kk, mode_for(pass));
      if (pass == SamPass::kAtWeights) {
        report.losses = {{"feature_s" + std::to_string(taps[kk]), f.item<double>()}};
      }
      return f;
    };
    student.zero_grad();
    report.grad_norm = optimizers[kk].step(closure, lr).grad_norm;
    reports.push_back(std::move(report));
  }
  StepReport report{k_heads + 1, {}, 0.0};
  auto closure = [&](SamPass pass) {
    return score_loss(mode_for(pass), pass == SamPass::kAtWeights ? &report : nullptr);
  };
  student.zero_grad();
  report.grad_norm = optimizers.back().step(closure, lr).grad_norm;
  reports.push_back(std::move(report));
  return reports;
}

StepReport plain_train_iteration(StagedBackbone& backbone, const Batch& batch,
                                 SamOptimizer& optimizer, double lr) {
  StepReport report{1, {}, 0.0};
  auto closure = [&](SamPass pass) {
    auto ce = softmax_loss(backbone.forward_score(batch.images, mode_for(pass)), batch.labels);
    if (pass == SamPass::kAtWeights) report.losses = {{"student_ce", ce.item<double>()}};
    return ce;
  };
  backbone.zero_grad();
  report.grad_norm = optimizer.step(closure, lr).grad_norm;
  return report;
}

double backbone_accuracy(StagedBackbone& backbone, const LabeledDataset& dataset,
                         std::int64_t batch_size) {
  if (dataset.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  torch::NoGradGuard no_grad;
  std::int64_t correct = 0;
  for (std::int64_t start = 0; start < dataset.size(); start += batch_size) {
    const auto end = std::min(dataset.size(), start + batch_size);
    auto pred = backbone.forward_score(dataset.images.slice(0, start, end), NormMode::kEval).argmax(1);
    correct += pred.eq(dataset.labels.slice(0, start, end)).sum().item<std::int64_t>();
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

void PmdTrainOptions::validate() const {
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (batch_size < 2) throw ConfigError("batch size must be at least 2");
  if (!(lr >= 0.0)) throw ConfigError("learning rate must be non-negative");
  sam.validate();
}

PmdTrainer::PmdTrainer(DistillPair pair, PmdTrainOptions options)
    : pair_(std::move(pair)), options_(std::move(options)) {
  options_.validate();
  pair_.validate();
  pair_.teacher->eval();
  for (auto& p : pair_.teacher->parameters()) p.set_requires_grad(false);
  optimizers_ = make_pmd_optimizers(pair_, options_.sam, options_.mode);
}

EpochMetrics PmdTrainer::train_epoch(const LabeledDataset& train, const LabeledDataset* val) {
  const int epoch = completed_epochs_;
  const auto e = static_cast<std::uint64_t>(epoch);
  const bool distill = epoch < options_.distill_epochs();
  CosineSchedule schedule{options_.lr, static_cast<double>(options_.epochs)};
  const double lr = schedule.lr_at(epoch);

  auto& student = *pair_.student;
  student.train();
  LossAccumulator acc;
  const auto batches = epoch_batches(train.size(), options_.batch_size, options_.seed, epoch);
  for (std::size_t b = 0; b < batches.size(); ++b) {
    std::optional<std::uint64_t> flip;
    if (options_.flip_augment) flip = derive_seed(options_.seed, SeedStream::kAugment, e * 100003ULL + b);
    auto batch = make_batch(train, batches[b], flip);
    if (distill) {
      acc.add(pmd_train_iteration(pair_, batch, optimizers_, lr, options_.mode));
    } else {
      acc.add({plain_train_iteration(student, batch, optimizers_.back(), lr)});
    }
  }
  student.eval();

  EpochMetrics m;
  m.epoch = epoch + 1;
  m.lr = lr;
  m.phase = distill ? "distill" : "finetune";
  m.losses = acc.means();
  m.train_acc = backbone_accuracy(student, train);
  m.val_acc = val ? backbone_accuracy(student, *val) : std::numeric_limits<double>::quiet_NaN();
  ++completed_epochs_;
  return m;
}

std::vector<EpochMetrics> PmdTrainer::fit(const LabeledDataset& train, const LabeledDataset* val,
                                          const EpochCallback& on_epoch) {
  if (train.size() < 2) throw DatasetError("empty_dataset", "training set needs at least 2 samples");
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

std::vector<EpochMetrics> pmd_train(DistillPair& pair, const LabeledDataset& train,
                                    const LabeledDataset* val, const PmdTrainOptions& options,
                                    const EpochCallback& on_epoch) {
  PmdTrainer trainer(pair, options);
  return trainer.fit(train, val, on_epoch);
}

}  // namespace antinoise

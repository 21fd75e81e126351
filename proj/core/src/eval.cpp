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

#include "antinoise/eval.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "antinoise/error.hpp"
#include "antinoise/image_io.hpp"
#include "antinoise/noise.hpp"

namespace antinoise {

namespace fs = std::filesystem;

namespace {

/// Noisy copy of `images`, one draw per image in order from a single generator.
torch::Tensor noisy_images(const torch::Tensor& images, double sigma, std::uint64_t seed) {
  NoiseGenerator gen(sigma, seed);
  std::vector<torch::Tensor> out;
  out.reserve(static_cast<std::size_t>(images.size(0)));
  for (std::int64_t i = 0; i < images.size(0); ++i) out.push_back(gen(images[i]));
  return torch::stack(out);
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

}  // namespace

Scorer pmal_scorer(PmalModel model) {
  return [model](const torch::Tensor& images) mutable {
    model->eval();
    return pmal_infer(model, images).final_score;
  };
}

Scorer backbone_scorer(std::shared_ptr<StagedBackbone> backbone) {
  return [backbone](const torch::Tensor& images) {
    torch::NoGradGuard no_grad;
    backbone->eval();
    return backbone->forward_score(images, NormMode::kEval);
  };
}

std::vector<std::int64_t> predict(const Scorer& scorer, const LabeledDataset& dataset, double sigma,
                                  std::uint64_t seed, std::int64_t batch_size) {
  NoiseSpec{sigma, seed}.validate();
  torch::NoGradGuard no_grad;
  auto inputs = noisy_images(dataset.images, sigma, seed);
  std::vector<std::int64_t> preds;
  preds.reserve(static_cast<std::size_t>(dataset.size()));
  for (std::int64_t start = 0; start < dataset.size(); start += batch_size) {
    const auto end = std::min(dataset.size(), start + batch_size);
    auto p = scorer(inputs.slice(0, start, end)).argmax(1).contiguous();
    auto acc = p.accessor<std::int64_t, 1>();
    for (std::int64_t i = 0; i < p.size(0); ++i) preds.push_back(acc[i]);
  }
  return preds;
}

double evaluate_accuracy(const Scorer& scorer, const LabeledDataset& dataset, double sigma,
                         std::uint64_t seed) {
  if (dataset.size() == 0) throw DatasetError("empty_dataset", "cannot evaluate an empty dataset");
  const auto preds = predict(scorer, dataset, sigma, seed);
  auto labels = dataset.labels.accessor<std::int64_t, 1>();
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    correct += preds[i] == labels[static_cast<std::int64_t>(i)];
  }
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

void RobustnessCurve::validate() const {
  if (sigmas.size() != accuracies.size()) throw ConfigError("curve lists differ in length");
  if (sigmas.empty() || sigmas.front() != 0.0) throw ConfigError("sigma sweep must start at 0");
  for (std::size_t i = 1; i < sigmas.size(); ++i) {
    if (!(sigmas[i] > sigmas[i - 1])) throw ConfigError("sigma sweep must be strictly increasing");
  }
}

RobustnessCurve robustness_curve(const Scorer& scorer, const LabeledDataset& dataset,
                                 const std::vector<double>& sigmas, std::uint64_t seed,
                                 const std::string& model_id) {
  RobustnessCurve curve{model_id, sigmas, std::vector<double>(sigmas.size(), 0.0)};
  curve.validate();
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    curve.accuracies[i] = evaluate_accuracy(scorer, dataset, sigmas[i], seed);
  }
  return curve;
}

void write_curves_csv(const fs::path& path, std::span<const RobustnessCurve> curves) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "model_id,sigma,accuracy\n" << std::setprecision(10);
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.sigmas.size(); ++i) {
      out << c.model_id << ',' << c.sigmas[i] << ',' << c.accuracies[i] << '\n';
    }
  }
}

void write_curves_plot(const fs::path& path, std::span<const RobustnessCurve> curves) {
  std::vector<PlotSeries> series;
  for (const auto& c : curves) series.push_back({c.model_id, c.sigmas, c.accuracies});
  write_line_plot(path, "Accuracy vs noise level", "sigma", "accuracy", series, 0.0, 1.0);
}

double psnr(const torch::Tensor& a, const torch::Tensor& b, double peak) {
  if (!a.sizes().equals(b.sizes())) throw ShapeError("psnr: tensors differ in shape");
  const double mse = (a.to(torch::kDouble) - b.to(torch::kDouble)).pow(2).mean().item<double>();
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double DenoiseReport::mean_psnr_noisy() const {
  double s = 0.0;
  for (const auto& r : records) s += r.psnr_noisy;
  return records.empty() ? 0.0 : s / static_cast<double>(records.size());
}

std::vector<double> DenoiseReport::mean_psnr_denoised() const {
  std::vector<double> m(stages.size(), 0.0);
  for (const auto& r : records) {
    for (std::size_t k = 0; k < m.size(); ++k) m[k] += r.psnr_denoised[k];
  }
  for (auto& v : m) v /= records.empty() ? 1.0 : static_cast<double>(records.size());
  return m;
}

namespace {

DenoiseReport run_denoising(PmalModel& model, const LabeledDataset& images, double sigma,
                            std::uint64_t seed, const fs::path* out_dir) {
  if (model->num_heads() == 0) throw ConfigError("model has no denoising heads");
  torch::NoGradGuard no_grad;
  model->eval();
  DenoiseReport report;
  report.stages = model->taps();
  auto noisy = noisy_images(images.images, sigma, seed);
  std::ofstream csv;
  if (out_dir) {
    fs::create_directories(*out_dir);
    csv.open(*out_dir / "psnr.csv");
    csv << "index,source,psnr_noisy";
    for (int s : report.stages) csv << ",psnr_denoised_s" << s;
    csv << '\n' << std::setprecision(8);
  }
  for (std::int64_t i = 0; i < images.size(); ++i) {
    auto clean = images.images[i];
    auto in = noisy.slice(0, i, i + 1);
    auto out = model->backbone().forward_with_taps(in, model->taps(), NormMode::kEval);
    DenoiseRecord rec;
    rec.source = images.sources.empty() ? std::to_string(i) : images.sources[static_cast<std::size_t>(i)];
    rec.psnr_noisy = psnr(noisy[i], clean);
    std::vector<torch::Tensor> panels = {clean, noisy[i]};
    for (std::size_t k = 0; k < out.taps.size(); ++k) {
      auto den = model->head(k)->denoise(out.taps[k].values, in).denoised[0];
      rec.psnr_denoised.push_back(psnr(den, clean));
      panels.push_back(den);
    }
    if (out_dir) {
      char idx[24];
      std::snprintf(idx, sizeof(idx), "%04lld", static_cast<long long>(i));
      const auto dir = *out_dir / idx;
      report.files.push_back(dir / "clean.png");
      report.files.push_back(dir / "noisy.png");
      for (int s : report.stages) report.files.push_back(dir / ("denoised_s" + std::to_string(s) + ".png"));
      const auto first = report.files.size() - panels.size();
      for (std::size_t p = 0; p < panels.size(); ++p) write_png(report.files[first + p], panels[p]);
      write_png(*out_dir / (std::string(idx) + "_strip.png"), hstack_panels(panels));
      csv << i << ',' << rec.source << ',' << rec.psnr_noisy;
      for (double v : rec.psnr_denoised) csv << ',' << v;
      csv << '\n';
    }
    report.records.push_back(std::move(rec));
  }
  return report;
}

}  // namespace

DenoiseReport export_denoised(PmalModel& model, const LabeledDataset& images, double sigma,
                              std::uint64_t seed, const fs::path& out_dir) {
  return run_denoising(model, images, sigma, seed, &out_dir);
}

DenoiseReport measure_denoising(PmalModel& model, const LabeledDataset& images, double sigma,
                                std::uint64_t seed) {
  return run_denoising(model, images, sigma, seed, nullptr);
}

ConfidenceInterval mean_ci95(std::span<const double> values) {
  ConfidenceInterval ci;
  ci.n = values.size();
  if (values.empty()) return ci;
  double sum = 0.0;
  for (double v : values) sum += v;
  ci.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return ci;
  double sq = 0.0;
  for (double v : values) sq += (v - ci.mean) * (v - ci.mean);
  const double sd = std::sqrt(sq / static_cast<double>(values.size() - 1));
  boost::math::students_t dist(static_cast<double>(values.size() - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  ci.half_width = t * sd / std::sqrt(static_cast<double>(values.size()));
  return ci;
}

std::vector<AblationCell> default_ablation_grid() {
  return {
      {"baseline", {{"k", "0"}, {"no_sam", "true"}}},
      {"K=1", {{"k", "1"}, {"no_sam", "true"}}},
      {"K=2", {{"k", "2"}, {"no_sam", "true"}}},
      {"K=3", {{"k", "3"}, {"no_sam", "true"}}},
      {"K=3 single-step", {{"k", "3"}, {"no_sam", "true"}, {"single_step", "true"}}},
      {"K=3 w/ SAM", {{"k", "3"}, {"no_sam", "false"}}},
  };
}

std::vector<AblationResult> run_ablation(
    const std::vector<AblationCell>& grid, int repeats,
    const std::function<double(const AblationCell&, int repeat)>& run_cell) {
  std::vector<AblationResult> results;
  for (const auto& cell : grid) {
    AblationResult r;
    r.name = cell.name;
    for (int rep = 0; rep < repeats; ++rep) {
      try {
        r.accuracies.push_back(run_cell(cell, rep));
      } catch (const std::exception& e) {
        r.errors.push_back("repeat " + std::to_string(rep) + ": " + e.what());
      }
    }
    r.ci = mean_ci95(r.accuracies);
    results.push_back(std::move(r));
  }
  return results;
}

void write_ablation_csv(const fs::path& path, std::span<const AblationResult> results) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "name,repeats,failures,mean_acc,ci95_half_width,accuracies\n" << std::setprecision(8);
  for (const auto& r : results) {
    out << r.name << ',' << r.accuracies.size() << ',' << r.errors.size() << ',' << r.ci.mean << ','
        << r.ci.half_width << ',';
    for (std::size_t i = 0; i < r.accuracies.size(); ++i) out << (i ? ";" : "") << r.accuracies[i];
    out << '\n';
  }
}

}  // namespace antinoise

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

#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include <antinoise/checkpoint.hpp>
#include <antinoise/config.hpp>
#include <antinoise/error.hpp>
#include <antinoise/eval.hpp>
#include <antinoise/toy_data.hpp>

#include "run_dir.hpp"

namespace antinoise::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Options shared by every training/evaluation command.
struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string data_root;
  std::string output_root;
  std::string run_dir;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<int> k;
  bool single_step = false;
  bool no_sam = false;
  bool baseline_kd = false;
  bool paper_scale = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "JSON config file");
  cmd->add_option("--set", a.overrides, "Override a config field (key=value); repeatable");
  cmd->add_option("--data", a.data_root, "Dataset root (folder per class)");
  cmd->add_option("--output-root", a.output_root, "Parent of run directories");
  cmd->add_option("--run-dir", a.run_dir, "Use this run directory instead of a timestamped one");
  cmd->add_option("--epochs", a.epochs, "Training epochs");
  cmd->add_option("--seed", a.seed, "Global seed");
  cmd->add_option("--k", a.k, "Number of denoising-recognition heads");
  cmd->add_flag("--single-step", a.single_step, "One combined update per batch");
  cmd->add_flag("--no-sam", a.no_sam, "Plain SGD with momentum instead of SAM");
  cmd->add_flag("--baseline-kd", a.baseline_kd, "Distill with the score loss only");
  cmd->add_flag("--paper-scale", a.paper_scale, "Start from full-scale defaults");
  cmd->add_flag("-q,--quiet", a.quiet, "No per-epoch progress");
}

ExperimentConfig resolve_config(const CommonArgs& a) {
  ExperimentConfig cfg = a.paper_scale ? paper_scale_defaults() : desk_defaults();
  if (!a.config_path.empty()) cfg = load_config(a.config_path);
  if (!a.data_root.empty()) cfg.data_root = a.data_root;
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.seed) cfg.seed = *a.seed;
  if (a.k) {
    cfg.k = *a.k;
    cfg.taps.clear();
  }
  if (a.single_step) cfg.single_step = true;
  if (a.no_sam) cfg.no_sam = true;
  if (a.baseline_kd) cfg.baseline_kd = true;
  for (const auto& o : a.overrides) apply_override(cfg, o);
  cfg.validate();
  return cfg;
}

fs::path prepare_run_dir(const CommonArgs& a, const ExperimentConfig& cfg, const std::string& command) {
  if (!a.run_dir.empty()) {
    fs::create_directories(a.run_dir);
    return a.run_dir;
  }
  return make_run_dir(output_root(a.output_root, cfg.output_dir), command, cfg.seed);
}

DatasetSplits load_data(const ExperimentConfig& cfg) {
  if (cfg.data_root.empty()) {
    throw DatasetError("dataset_not_found", "no dataset root given (--data or data_root)");
  }
  return load_folder_dataset(cfg.data_root, cfg.input_height, cfg.input_width, cfg.split());
}

/// Held-out split for evaluation: the named one, else test, else val.
const LabeledDataset& eval_split(const DatasetSplits& s, const std::string& name) {
  if (name == "train") return s.train;
  if (name == "val") return s.val;
  if (name == "test") return s.test;
  if (!name.empty()) throw ConfigError("unknown split '" + name + "'");
  if (s.test.size() > 0) return s.test;
  if (s.val.size() > 0) return s.val;
  throw DatasetError("empty_dataset", "no held-out samples; set split_val or split_test");
}

std::string split_name(const DatasetSplits& s, const LabeledDataset& d) {
  if (&d == &s.train) return "train";
  if (&d == &s.val) return "val";
  return "test";
}

void check_classes(const CheckpointMeta& meta, const LabeledDataset& data) {
  if (static_cast<std::int64_t>(meta.class_names.size()) != data.num_classes() ||
      meta.class_names != data.class_names) {
    throw ShapeError("dataset classes differ from the checkpoint's class list");
  }
}

CheckpointMeta make_meta(const ExperimentConfig& cfg, PmalModel& model,
                         const std::vector<std::string>& class_names) {
  CheckpointMeta meta;
  meta.kind = model->num_heads() > 0 ? "pmal" : "plain";
  meta.spec = model->spec();
  meta.class_names = class_names;
  meta.structural_hash = structural_hash(cfg);
  meta.config_hash = config_hash(cfg);
  return meta;
}

void log_epoch(std::ostream& out, const EpochMetrics& m, int total) {
  out << "epoch " << m.epoch << '/' << total << " [" << m.phase << "] lr=" << std::setprecision(4)
      << m.lr;
  for (const auto& [k, v] : m.losses) out << ' ' << k << '=' << v;
  out << " train_acc=" << m.train_acc;
  if (!std::isnan(m.val_acc)) out << " val_acc=" << m.val_acc;
  out << std::endl;
}

json accuracy_json(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

// ---------------------------------------------------------------------------

struct TrainArgs {
  CommonArgs common;
  std::string resume;
};

int cmd_train_pmal(const TrainArgs& a, std::ostream& out) {
  ExperimentConfig cfg;
  fs::path run;
  std::optional<CheckpointMeta> resume_meta;
  if (!a.resume.empty()) {
    // Resuming continues inside the original run directory with its snapshot.
    resume_meta = read_checkpoint_meta(a.resume);
    run = fs::path(a.resume).parent_path();
    CommonArgs c = a.common;
    if (c.config_path.empty()) c.config_path = (run / "config.json").string();
    cfg = resolve_config(c);
    if (auto diffs = structural_conflicts(*resume_meta, cfg); !diffs.empty()) {
      std::string msg = "checkpoint does not match config:";
      for (const auto& d : diffs) msg += "\n  " + d;
      throw ShapeError(msg);
    }
  } else {
    cfg = resolve_config(a.common);
  }
  const auto data = load_data(cfg);
  if (run.empty()) run = prepare_run_dir(a.common, cfg, "train-pmal");
  save_config(cfg, run / "config.json");

  auto model = make_pmal_model(model_spec(cfg, data.train.num_classes()), cfg.seed);
  if (resume_meta) model = load_checkpoint(a.resume).model;
  PmalTrainer trainer(model, pmal_options(cfg));
  if (resume_meta) {
    load_optimizer_state(a.resume, trainer.optimizers());
    trainer.set_completed_epochs(resume_meta->epoch);
    trainer.set_best_val_acc(resume_meta->best_val_acc);
  }
  auto meta = make_meta(cfg, model, data.train.class_names);
  MetricsCsv csv(run / "metrics.csv", resume_meta.has_value());
  const LabeledDataset* val = data.val.size() > 0 ? &data.val : nullptr;

  if (!a.common.quiet) {
    out << "run dir: " << run.string() << "\ntrain " << data.train.size() << ", val "
        << data.val.size() << ", test " << data.test.size() << ", classes "
        << data.train.num_classes() << ", skipped " << data.skipped << std::endl;
  }
  trainer.fit(data.train, val, [&](const EpochMetrics& m, bool improved) {
    csv.write(m);
    meta.epoch = m.epoch;
    meta.best_val_acc = trainer.best_val_acc();
    save_checkpoint(run / "checkpoint.pt", model, meta, &trainer.optimizers());
    if (improved) save_checkpoint(run / "best.pt", model, meta);
    if (!a.common.quiet) log_epoch(out, m, cfg.epochs);
  });

  json summary;
  summary["epochs"] = trainer.completed_epochs();
  summary["config_hash"] = meta.config_hash;
  summary["train_acc"] = pmal_accuracy(model, data.train);
  summary["val_acc"] = accuracy_json(data.val.size() ? pmal_accuracy(model, data.val) : std::numeric_limits<double>::quiet_NaN());
  summary["test_acc"] = accuracy_json(data.test.size() ? pmal_accuracy(model, data.test) : std::numeric_limits<double>::quiet_NaN());
  write_text(run / "summary.json", summary.dump(2) + "\n");
  out << summary.dump() << std::endl;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct DistillArgs {
  CommonArgs common;
  std::string teacher;
};

int cmd_distill_pmd(const DistillArgs& a, std::ostream& out) {
  auto cfg = resolve_config(a.common);
  if (!a.teacher.empty()) cfg.teacher_checkpoint = a.teacher;
  if (cfg.teacher_checkpoint.empty()) {
    throw ConfigError("no teacher checkpoint given (--teacher or teacher_checkpoint)");
  }
  auto teacher = load_checkpoint(cfg.teacher_checkpoint);
  if (teacher.meta.kind != "pmal") throw ConfigError("teacher checkpoint has no heads");
  // Refuse before touching data when the teacher was built from a different spec.
  if (auto diffs = structural_conflicts(teacher.meta, cfg); !diffs.empty()) {
    std::string msg = "teacher does not match config:";
    for (const auto& d : diffs) msg += "\n  " + d;
    throw ShapeError(msg);
  }
  const auto data = load_data(cfg);
  check_classes(teacher.meta, data.train);

  auto student_spec = model_spec(cfg, data.train.num_classes());
  student_spec.taps.clear();
  auto student = make_pmal_model(student_spec, cfg.seed);
  DistillPair pair{teacher.model, student->backbone_ptr(), cfg.alpha};
  pair.validate();

  const auto run = prepare_run_dir(a.common, cfg, "distill-pmd");
  save_config(cfg, run / "config.json");
  auto meta = make_meta(cfg, student, data.train.class_names);
  MetricsCsv csv(run / "metrics.csv", false);
  const LabeledDataset* val = data.val.size() > 0 ? &data.val : nullptr;
  if (!a.common.quiet) out << "run dir: " << run.string() << std::endl;

  PmdTrainer trainer(pair, pmd_options(cfg));
  trainer.fit(data.train, val, [&](const EpochMetrics& m, bool improved) {
    csv.write(m);
    meta.epoch = m.epoch;
    save_checkpoint(run / "checkpoint.pt", student, meta);
    if (improved) save_checkpoint(run / "best.pt", student, meta);
    if (!a.common.quiet) log_epoch(out, m, cfg.epochs);
  });

  const auto& held = eval_split(data, "");
  const double t_acc = pmal_accuracy(teacher.model, held);
  const double s_acc = backbone_accuracy(*pair.student, held);
  json cmp;
  cmp["split"] = split_name(data, held);
  cmp["teacher_acc"] = t_acc;
  cmp["student_acc"] = s_acc;
  cmp["gap"] = t_acc - s_acc;
  write_text(run / "comparison.json", cmp.dump(2) + "\n");
  out << cmp.dump() << std::endl;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  CommonArgs common;
  std::vector<std::string> checkpoints;
  std::vector<std::string> model_ids;
  std::string split;
  int count = 8;
};

struct LoadedModel {
  LoadedCheckpoint ckpt;
  std::string id;
};

/// Loads checkpoints and checks each against the config. Without --config the
/// structure comes from the first checkpoint, with --set overrides on top.
std::vector<LoadedModel> load_models(const EvalArgs& a, ExperimentConfig& cfg) {
  if (a.checkpoints.empty()) throw ConfigError("at least one --checkpoint is required");
  if (!a.model_ids.empty() && a.model_ids.size() != a.checkpoints.size()) {
    throw ConfigError("--model-id must be given once per checkpoint");
  }
  std::vector<LoadedModel> models;
  for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
    auto meta = read_checkpoint_meta(a.checkpoints[i]);
    if (a.common.config_path.empty() && i == 0) {
      cfg.backbone = meta.spec.backbone_id;
      cfg.widths = meta.spec.widths;
      cfg.input_height = meta.spec.input_height;
      cfg.input_width = meta.spec.input_width;
      cfg.taps = meta.spec.taps;
      cfg.k = static_cast<int>(meta.spec.taps.size());
      cfg.descriptor_dim = meta.spec.descriptor_dim;
      cfg.restore_channels = meta.spec.restore_channels;
      cfg.skip_channels = meta.spec.skip_channels;
      for (const auto& o : a.common.overrides) apply_override(cfg, o);
      cfg.validate();
    }
    if (auto diffs = structural_conflicts(meta, cfg); !diffs.empty()) {
      std::string msg = a.checkpoints[i] + " conflicts with the config:";
      for (const auto& d : diffs) msg += "\n  " + d;
      throw ShapeError(msg);
    }
    LoadedModel m{load_checkpoint(a.checkpoints[i]), ""};
    m.id = a.model_ids.empty() ? fs::path(a.checkpoints[i]).parent_path().filename().string() +
                                     "-" + m.ckpt.meta.kind
                               : a.model_ids[i];
    if (m.id.empty() || m.id == "-" + m.ckpt.meta.kind) m.id = m.ckpt.meta.kind + std::to_string(i);
    models.push_back(std::move(m));
  }
  return models;
}

std::string sigma_tag(double sigma) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", sigma);
  return buf;
}

int cmd_curves(const EvalArgs& a, std::ostream& out, const std::string& command) {
  auto cfg = resolve_config(a.common);
  auto models = load_models(a, cfg);
  const auto data = load_data(cfg);
  const auto& held = eval_split(data, a.split);
  const auto run = prepare_run_dir(a.common, cfg, command);
  save_config(cfg, run / "config.json");

  std::vector<RobustnessCurve> curves;
  json record = json::array();
  for (auto& m : models) {
    check_classes(m.ckpt.meta, held);
    auto curve = robustness_curve(pmal_scorer(m.ckpt.model), held, cfg.eval_sigmas, cfg.seed, m.id);
    json entry = {{"model_id", m.id}, {"kind", m.ckpt.meta.kind}, {"split", split_name(data, held)},
                  {"seed", cfg.seed}, {"sigmas", curve.sigmas}, {"accuracies", curve.accuracies}};
    record.push_back(entry);
    out << entry.dump() << std::endl;
    curves.push_back(std::move(curve));
  }
  const std::string stem = models.size() == 1 ? "robustness_" + models.front().id : "robustness";
  const std::string name = stem + "_seed" + std::to_string(cfg.seed);
  write_curves_csv(run / (name + ".csv"), curves);
  write_curves_plot(run / (name + ".png"), curves);
  write_text(run / (command + ".json"), record.dump(2) + "\n");
  return kExitOk;
}

int cmd_denoise_dump(const EvalArgs& a, std::ostream& out) {
  auto cfg = resolve_config(a.common);
  if (a.checkpoints.size() != 1) throw ConfigError("denoise-dump takes exactly one --checkpoint");
  auto models = load_models(a, cfg);
  auto& m = models.front();
  const auto data = load_data(cfg);
  const auto& held = eval_split(data, a.split);
  check_classes(m.ckpt.meta, held);
  const auto run = prepare_run_dir(a.common, cfg, "denoise-dump");
  save_config(cfg, run / "config.json");

  std::vector<std::int64_t> idx;
  for (std::int64_t i = 0; i < std::min<std::int64_t>(a.count, held.size()); ++i) idx.push_back(i);
  const auto dir = run / ("denoise_" + m.id + "_sigma" + sigma_tag(cfg.sigma) + "_seed" +
                          std::to_string(cfg.seed));
  auto report = export_denoised(m.ckpt.model, held.subset(idx, held.split), cfg.sigma, cfg.seed, dir);
  json summary = {{"model_id", m.id},
                  {"sigma", cfg.sigma},
                  {"images", report.records.size()},
                  {"stages", report.stages},
                  {"mean_psnr_noisy", report.mean_psnr_noisy()},
                  {"mean_psnr_denoised", report.mean_psnr_denoised()}};
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  out << summary.dump() << std::endl;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct AblationArgs {
  CommonArgs common;
  std::string grid;
  std::optional<int> repeats;
};

std::vector<AblationCell> load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read grid " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed grid: ") + e.what());
  }
  if (!j.is_array()) throw ConfigError("grid must be a JSON array of {name, overrides}");
  std::vector<AblationCell> grid;
  for (const auto& row : j) {
    AblationCell cell;
    cell.name = row.at("name").get<std::string>();
    const json overrides = row.value("overrides", json::object());
    for (const auto& [k, v] : overrides.items()) {
      cell.overrides.emplace_back(k, v.is_string() ? v.get<std::string>() : v.dump());
    }
    grid.push_back(std::move(cell));
  }
  return grid;
}

int cmd_ablation(const AblationArgs& a, std::ostream& out) {
  auto base = resolve_config(a.common);
  if (a.repeats) base.ablation_repeats = *a.repeats;
  base.validate();
  const auto grid = a.grid.empty() ? default_ablation_grid() : load_grid(a.grid);
  const auto data = load_data(base);
  const auto& held = eval_split(data, "");
  const auto run = prepare_run_dir(a.common, base, "ablation");
  save_config(base, run / "config.json");

  auto results = run_ablation(grid, base.ablation_repeats, [&](const AblationCell& cell, int rep) {
    auto cfg = base;
    for (const auto& [k, v] : cell.overrides) {
      apply_override(cfg, k, v);
      if (k == "k") cfg.taps.clear();
    }
    cfg.seed = base.seed + static_cast<std::uint64_t>(rep);
    cfg.validate();
    auto model = make_pmal_model(model_spec(cfg, data.train.num_classes()), cfg.seed);
    const auto cell_dir = run / "cells" / cell.name / ("r" + std::to_string(rep));
    fs::create_directories(cell_dir);
    save_config(cfg, cell_dir / "config.json");
    MetricsCsv csv(cell_dir / "metrics.csv", false);
    pmal_train(model, data.train, nullptr, pmal_options(cfg),
               [&](const EpochMetrics& m, bool) { csv.write(m); });
    const double acc = pmal_accuracy(model, held);
    if (!a.common.quiet) out << cell.name << " repeat " << rep << ": " << acc << std::endl;
    return acc;
  });
  write_ablation_csv(run / "ablation.csv", results);
  for (const auto& r : results) {
    out << r.name << ": " << r.ci.mean << " +/- " << r.ci.half_width << " (n=" << r.ci.n << ")";
    for (const auto& e : r.errors) out << "\n  failed " << e;
    out << std::endl;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ToyArgs {
  std::string out;
  std::int64_t classes = 8;
  std::int64_t per_class = 50;
  std::int64_t size = 64;
  std::uint64_t seed = 1;
  ToyDataOptions options;
};

int cmd_make_toy_data(const ToyArgs& a, std::ostream& out) {
  auto ds = make_toy_dataset(a.classes, a.per_class, a.size, a.seed, a.options);
  write_folder_dataset(ds, a.out);
  out << "wrote " << ds.size() << " images in " << ds.num_classes() << " classes to " << a.out
      << std::endl;
  return kExitOk;
}

int exit_code_for(const Error& e) {
  const auto& c = e.code();
  if (c == "non_finite_loss" || c == "io_error") return kExitFailure;
  return kExitInputError;
}

void write_error(std::ostream& err, const std::string& code, const std::string& message, int exit) {
  json rec = {{"error", code}, {"message", message}, {"exit_code", exit}};
  err << rec.dump() << std::endl;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Anti-noise training and evaluation for staged image classifiers", "antinoise"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* c_train = app.add_subcommand("train-pmal", "Train a backbone with denoising-recognition heads");
  add_common(c_train, train.common);
  c_train->add_option("--resume", train.resume, "Continue from a run's checkpoint.pt");

  DistillArgs distill;
  auto* c_distill = app.add_subcommand("distill-pmd", "Distill a trained teacher into a plain backbone");
  add_common(c_distill, distill.common);
  c_distill->add_option("--teacher", distill.teacher, "Teacher checkpoint");

  EvalArgs eval, robust, dump;
  auto* c_eval = app.add_subcommand("eval", "Accuracy of one checkpoint over the sigma sweep");
  auto* c_robust = app.add_subcommand("robustness", "Accuracy-vs-noise curves for several checkpoints");
  auto* c_dump = app.add_subcommand("denoise-dump", "Write clean/noisy/denoised image strips");
  for (auto [cmd, ea] : {std::pair{c_eval, &eval}, std::pair{c_robust, &robust}, std::pair{c_dump, &dump}}) {
    add_common(cmd, ea->common);
    cmd->add_option("--checkpoint", ea->checkpoints, "Checkpoint file; repeatable")->required();
    cmd->add_option("--model-id", ea->model_ids, "Name per checkpoint");
    cmd->add_option("--split", ea->split, "train, val or test (default: test, else val)");
  }
  c_dump->add_option("--count", dump.count, "Number of images");

  AblationArgs ablation;
  auto* c_ablation = app.add_subcommand("ablation", "Train and evaluate a grid of configurations");
  add_common(c_ablation, ablation.common);
  c_ablation->add_option("--grid", ablation.grid, "JSON grid [{name, overrides}]; default table rows");
  c_ablation->add_option("--repeats", ablation.repeats, "Repeats per cell");

  ToyArgs toy;
  auto* c_toy = app.add_subcommand("make-toy-data", "Render the synthetic fine-grained dataset");
  c_toy->add_option("--out", toy.out, "Output root")->required();
  c_toy->add_option("--classes", toy.classes, "Number of classes");
  c_toy->add_option("--per-class", toy.per_class, "Images per class");
  c_toy->add_option("--size", toy.size, "Image side length");
  c_toy->add_option("--seed", toy.seed, "Render seed");
  c_toy->add_option("--badge-cell", toy.options.badge_cell, "Badge cell side in pixels");
  c_toy->add_option("--contrast-min", toy.options.badge_contrast_min, "Lowest badge contrast");
  c_toy->add_option("--contrast-max", toy.options.badge_contrast_max, "Highest badge contrast");
  c_toy->add_option("--jitter", toy.options.position_jitter, "Object position jitter (fraction of size)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    write_error(err, "usage_error", e.what(), kExitInputError);
    return kExitInputError;
  }

  try {
    if (*c_train) return cmd_train_pmal(train, out);
    if (*c_distill) return cmd_distill_pmd(distill, out);
    if (*c_eval) return cmd_curves(eval, out, "eval");
    if (*c_robust) return cmd_curves(robust, out, "robustness");
    if (*c_dump) return cmd_denoise_dump(dump, out);
    if (*c_ablation) return cmd_ablation(ablation, out);
    if (*c_toy) return cmd_make_toy_data(toy, out);
  } catch (const Error& e) {
    const int code = exit_code_for(e);
    write_error(err, e.code(), e.what(), code);
    return code;
  } catch (const c10::Error& e) {
    write_error(err, "internal_error", e.what_without_backtrace(), kExitFailure);
    return kExitFailure;
  } catch (const std::exception& e) {
    write_error(err, "internal_error", e.what(), kExitFailure);
    return kExitFailure;
  }
  return kExitInputError;
}

}  // namespace antinoise::cli

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

#include "antinoise/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "antinoise/error.hpp"
#include "antinoise/seeding.hpp"

namespace antinoise {

using nlohmann::json;

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    ExperimentConfig, backbone, widths, input_height, input_width, k, taps, descriptor_dim,
    restore_channels, skip_channels, alpha, sigma, rho, weight_decay, lr, momentum, epochs,
    batch_size, seed, single_step, no_sam, baseline_kd, shuffled_steps, flip_augment, data_root,
    split_train, split_val, split_test, output_dir, teacher_checkpoint, eval_sigmas,
    ablation_repeats)

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

BackboneLayout ExperimentConfig::layout() const {
  if (backbone == "reference") return reference_layout(widths);
  if (backbone == "resnet50") return resnet50_layout();
  throw ConfigError("unknown backbone '" + backbone + "'", "unknown_backbone");
}

std::vector<int> ExperimentConfig::resolved_taps() const {
  if (!taps.empty()) return taps;
  return last_stages(layout(), k);
}

void ExperimentConfig::validate() const {
  const auto lay = layout();
  if (input_height <= 0 || input_width <= 0) throw ConfigError("input size must be positive");
  if (k < 0 || k > lay.num_stages()) {
    throw ConfigError("k must be in [0, " + std::to_string(lay.num_stages()) + "]");
  }
  if (!taps.empty() && static_cast<int>(taps.size()) != k) {
    throw ConfigError("taps lists " + std::to_string(taps.size()) + " stages but k = " +
                      std::to_string(k));
  }
  const auto shapes = stage_shapes(lay, input_height, input_width, resolved_taps());
  for (const auto& s : shapes) {
    DrhConfig d = DrhConfig::for_tap(s, descriptor_dim, restore_channels, skip_channels, 2);
    d.validate();
  }
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  NoiseSpec{sigma, std::nullopt}.validate();
  sam_options(*this).validate();
  if (!(lr >= 0.0)) throw ConfigError("lr must be non-negative");
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  split().validate();
  for (std::size_t i = 0; i < eval_sigmas.size(); ++i) {
    if (eval_sigmas[i] < 0.0 || (i > 0 && !(eval_sigmas[i] > eval_sigmas[i - 1]))) {
      throw ConfigError("eval_sigmas must be non-negative and strictly increasing");
    }
  }
  if (ablation_repeats <= 0) throw ConfigError("ablation_repeats must be positive");
}

ExperimentConfig desk_defaults() { return ExperimentConfig{}; }

ExperimentConfig paper_scale_defaults() {
  ExperimentConfig c;
  c.backbone = "resnet50";
  c.widths.clear();
  c.input_height = 448;
  c.input_width = 448;
  c.k = 3;
  c.descriptor_dim = 1024;
  c.restore_channels = 256;
  c.skip_channels = 64;
  c.alpha = 100.0;
  c.sigma = 0.05;
  c.rho = 0.05;
  c.weight_decay = 5e-4;
  c.lr = 0.002;
  c.epochs = 200;
  c.batch_size = 8;
  return c;
}

std::string to_json(const ExperimentConfig& cfg, int indent) {
  json j = cfg;
  return j.dump(indent);
}

ExperimentConfig config_from_json(const std::string& text) {
  try {
    auto j = json::parse(text);
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    const json known = ExperimentConfig{};
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!known.contains(it.key())) {
        throw ConfigError("unknown config key '" + it.key() + "'", "unknown_config_key");
      }
    }
    return j.get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config " + path.string());
  out << to_json(cfg) << '\n';
}

void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  json j = cfg;
  if (!j.contains(key)) throw ConfigError("unknown config key '" + key + "'", "unknown_config_key");
  json v;
  if (j[key].is_string()) {
    v = value;
  } else {
    try {
      v = json::parse(value);
    } catch (const json::exception&) {
      throw ConfigError("cannot parse value '" + value + "' for key '" + key + "'");
    }
  }
  j[key] = v;
  try {
    cfg = j.get<ExperimentConfig>();
  } catch (const json::exception&) {
    throw ConfigError("wrong type for key '" + key + "': '" + value + "'");
  }
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key=value, got '" + assignment + "'");
  }
  apply_override(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::string structural_hash(const ExperimentConfig& cfg) {
  json j;
  j["backbone"] = cfg.backbone;
  j["widths"] = cfg.backbone == "reference" ? json(cfg.widths) : json::array();
  j["input"] = {cfg.input_height, cfg.input_width};
  j["taps"] = cfg.resolved_taps();
  j["dims"] = {cfg.descriptor_dim, cfg.restore_channels, cfg.skip_channels};
  return hex64(fnv1a64(j.dump()));
}

std::string config_hash(const ExperimentConfig& cfg) { return hex64(fnv1a64(to_json(cfg, -1))); }

ModelSpec model_spec(const ExperimentConfig& cfg, std::int64_t num_classes) {
  ModelSpec s;
  s.backbone_id = cfg.backbone;
  s.widths = cfg.widths;
  s.input_height = cfg.input_height;
  s.input_width = cfg.input_width;
  s.taps = cfg.resolved_taps();
  s.descriptor_dim = cfg.descriptor_dim;
  s.restore_channels = cfg.restore_channels;
  s.skip_channels = cfg.skip_channels;
  s.num_classes = num_classes;
  return s;
}

SamOptions sam_options(const ExperimentConfig& cfg) {
  SamOptions o;
  o.rho = cfg.rho;
  o.weight_decay = cfg.weight_decay;
  o.momentum = cfg.momentum;
  o.enabled = !cfg.no_sam;
  return o;
}

PmalTrainOptions pmal_options(const ExperimentConfig& cfg) {
  PmalTrainOptions o;
  o.epochs = cfg.epochs;
  o.batch_size = cfg.batch_size;
  o.lr = cfg.lr;
  o.sigma = cfg.sigma;
  o.sam = sam_options(cfg);
  o.single_step = cfg.single_step;
  o.order = cfg.shuffled_steps ? StepOrder::kShuffled : StepOrder::kProgressive;
  o.flip_augment = cfg.flip_augment;
  o.seed = cfg.seed;
  return o;
}

PmdTrainOptions pmd_options(const ExperimentConfig& cfg) {
  PmdTrainOptions o;
  o.epochs = cfg.epochs;
  o.batch_size = cfg.batch_size;
  o.lr = cfg.lr;
  o.sam = sam_options(cfg);
  o.mode.baseline_kd = cfg.baseline_kd;
  o.mode.single_step = cfg.single_step;
  o.flip_augment = cfg.flip_augment;
  o.seed = cfg.seed;
  return o;
}

}  // namespace antinoise

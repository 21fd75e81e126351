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

#include "antinoise/checkpoint.hpp"

#include <json.hpp>

#include "antinoise/error.hpp"

namespace antinoise {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json meta_to_json(const CheckpointMeta& m) {
  json j;
  j["format"] = 1;
  j["kind"] = m.kind;
  j["class_names"] = m.class_names;
  j["structural_hash"] = m.structural_hash;
  j["config_hash"] = m.config_hash;
  j["epoch"] = m.epoch;
  j["best_val_acc"] = m.best_val_acc;
  j["spec"] = {{"backbone", m.spec.backbone_id},
               {"widths", m.spec.widths},
               {"input_height", m.spec.input_height},
               {"input_width", m.spec.input_width},
               {"taps", m.spec.taps},
               {"descriptor_dim", m.spec.descriptor_dim},
               {"restore_channels", m.spec.restore_channels},
               {"skip_channels", m.spec.skip_channels},
               {"num_classes", m.spec.num_classes}};
  return j;
}

CheckpointMeta meta_from_json(const json& j) {
  CheckpointMeta m;
  m.kind = j.at("kind").get<std::string>();
  m.class_names = j.at("class_names").get<std::vector<std::string>>();
  m.structural_hash = j.at("structural_hash").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.epoch = j.at("epoch").get<int>();
  m.best_val_acc = j.value("best_val_acc", -1.0);
  const auto& s = j.at("spec");
  m.spec.backbone_id = s.at("backbone").get<std::string>();
  m.spec.widths = s.at("widths").get<std::vector<std::int64_t>>();
  m.spec.input_height = s.at("input_height").get<std::int64_t>();
  m.spec.input_width = s.at("input_width").get<std::int64_t>();
  m.spec.taps = s.at("taps").get<std::vector<int>>();
  m.spec.descriptor_dim = s.at("descriptor_dim").get<std::int64_t>();
  m.spec.restore_channels = s.at("restore_channels").get<std::int64_t>();
  m.spec.skip_channels = s.at("skip_channels").get<std::int64_t>();
  m.spec.num_classes = s.at("num_classes").get<std::int64_t>();
  return m;
}

std::string optim_key(std::size_t i, std::size_t j) {
  return "optim_" + std::to_string(i) + "_" + std::to_string(j);
}

torch::serialize::InputArchive open_archive(const fs::path& path) {
  if (!fs::exists(path)) {
    throw CheckpointError("checkpoint_not_found", "no checkpoint at " + path.string());
  }
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    throw CheckpointError("checkpoint_corrupt", "cannot read " + path.string());
  }
  return archive;
}

CheckpointMeta read_meta(torch::serialize::InputArchive& archive, const fs::path& path) {
  c10::IValue v;
  if (!archive.try_read("meta", v) || !v.isString()) {
    throw CheckpointError("checkpoint_corrupt", "missing metadata in " + path.string());
  }
  try {
    return meta_from_json(json::parse(v.toStringRef()));
  } catch (const json::exception& e) {
    throw CheckpointError("checkpoint_corrupt", std::string("bad metadata: ") + e.what());
  }
}

void read_optimizers(torch::serialize::InputArchive& archive, std::vector<SamOptimizer>& optimizers) {
  torch::NoGradGuard no_grad;
  for (std::size_t i = 0; i < optimizers.size(); ++i) {
    auto& bufs = optimizers[i].momentum_buffers();
    const auto& params = optimizers[i].params();
    for (std::size_t j = 0; j < params.size(); ++j) {
      torch::Tensor t;
      if (archive.try_read(optim_key(i, j), t, /*is_buffer=*/true)) {
        if (!t.sizes().equals(params[j].sizes())) {
          throw CheckpointError("checkpoint_corrupt", "momentum buffer shape mismatch");
        }
        bufs[j] = t.clone();
      }
    }
  }
}

}  // namespace

void save_checkpoint(const fs::path& path, PmalModel& model, const CheckpointMeta& meta,
                     std::vector<SamOptimizer>* optimizers) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  torch::serialize::OutputArchive archive;
  model->save(archive);
  archive.write("meta", c10::IValue(meta_to_json(meta).dump()));
  if (optimizers) {
    for (std::size_t i = 0; i < optimizers->size(); ++i) {
      auto& bufs = (*optimizers)[i].momentum_buffers();
      for (std::size_t j = 0; j < bufs.size(); ++j) {
        if (bufs[j].defined()) archive.write(optim_key(i, j), bufs[j], /*is_buffer=*/true);
      }
    }
  }
  // Write to a sibling file first so an interrupted save never clobbers the last good one.
  const auto tmp = fs::path(path.string() + ".tmp");
  try {
    archive.save_to(tmp.string());
  } catch (const c10::Error& e) {
    throw IoError("cannot write checkpoint " + path.string());
  }
  fs::rename(tmp, path);
}

CheckpointMeta read_checkpoint_meta(const fs::path& path) {
  auto archive = open_archive(path);
  return read_meta(archive, path);
}

LoadedCheckpoint load_checkpoint(const fs::path& path, std::vector<SamOptimizer>* optimizers) {
  auto archive = open_archive(path);
  LoadedCheckpoint out;
  out.meta = read_meta(archive, path);
  out.model = make_pmal_model(out.meta.spec, 0);
  try {
    out.model->load(archive);
  } catch (const c10::Error& e) {
    throw CheckpointError("checkpoint_corrupt", "parameters do not match metadata in " + path.string());
  }
  if (optimizers) read_optimizers(archive, *optimizers);
  return out;
}

void load_optimizer_state(const fs::path& path, std::vector<SamOptimizer>& optimizers) {
  auto archive = open_archive(path);
  read_optimizers(archive, optimizers);
}

std::vector<std::string> structural_conflicts(const CheckpointMeta& meta, const ExperimentConfig& cfg) {
  std::vector<std::string> diffs;
  const auto& s = meta.spec;
  auto join = [](const auto& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out + "]";
  };
  if (s.backbone_id != cfg.backbone) {
    diffs.push_back("backbone: checkpoint " + s.backbone_id + ", config " + cfg.backbone);
  }
  if (s.widths != cfg.widths) {
    diffs.push_back("widths: checkpoint " + join(s.widths) + ", config " + join(cfg.widths));
  }
  if (s.input_height != cfg.input_height || s.input_width != cfg.input_width) {
    diffs.push_back("input: checkpoint " + std::to_string(s.input_height) + "x" +
                    std::to_string(s.input_width) + ", config " + std::to_string(cfg.input_height) +
                    "x" + std::to_string(cfg.input_width));
  }
  if (meta.kind == "pmal") {
    const auto taps = cfg.resolved_taps();
    if (s.taps != taps) diffs.push_back("taps: checkpoint " + join(s.taps) + ", config " + join(taps));
    if (s.descriptor_dim != cfg.descriptor_dim) {
      diffs.push_back("descriptor_dim: checkpoint " + std::to_string(s.descriptor_dim) + ", config " +
                      std::to_string(cfg.descriptor_dim));
    }
    if (s.restore_channels != cfg.restore_channels) {
      diffs.push_back("restore_channels: checkpoint " + std::to_string(s.restore_channels) +
                      ", config " + std::to_string(cfg.restore_channels));
    }
    if (s.skip_channels != cfg.skip_channels) {
      diffs.push_back("skip_channels: checkpoint " + std::to_string(s.skip_channels) + ", config " +
                      std::to_string(cfg.skip_channels));
    }
  }
  return diffs;
}

}  // namespace antinoise

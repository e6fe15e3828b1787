// Copyright 2026 The clotpath Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "clotpath/run_config.h"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "clotpath/csv.h"
#include "clotpath/error.h"
#include "clotpath/seed.h"

namespace clotpath {

void RunConfig::Validate() const {
  auto fail = [](std::string message) {
    throw Error(Errc::kInvalidArgument, std::move(message));
  };
  if (tile_size < 1) fail(fmt::format("tile size {} must be >= 1", tile_size));
  if (stride < 1) fail(fmt::format("stride {} must be >= 1", stride));
  if (min_content_ratio < 0.0 || min_content_ratio > 1.0) {
    fail(fmt::format("min content ratio {} outside [0, 1]", min_content_ratio));
  }
  if (stage1.threshold < 0.0 || stage1.threshold > 1.0) {
    fail(fmt::format("stage-1 threshold {} outside [0, 1]", stage1.threshold));
  }
  if (synth.slides_per_class < 0) fail("slides per class must be >= 0");
  for (const auto& c : synth.classes) {
    if (c != "CE" && c != "LAA") fail(fmt::format("unknown class '{}'", c));
  }
  if (eval.level != "tile" && eval.level != "slide" && eval.level != "both") {
    fail(fmt::format("evaluation level '{}' must be tile, slide or both",
                     eval.level));
  }
  ParseSplit(eval.split);
  augmentation.Validate();
  train.Validate();
  if (search.trials < 0) fail("search trials must be >= 0");
}

namespace {

nlohmann::ordered_json AugmentationJson(const AugmentationConfig& a) {
  return {{"apply_probability", a.apply_probability},
          {"sharpness_factor", a.sharpness_factor},
          {"brightness", a.brightness},
          {"hue", a.hue},
          {"saturation", a.saturation},
          {"rotate_limit_deg", a.rotate_limit_deg},
          {"resize_to", a.resize_to},
          {"normalize_mean", a.normalize_mean},
          {"normalize_std", a.normalize_std},
          {"seed", a.seed}};
}

nlohmann::ordered_json TrainJson(const TrainConfig& t) {
  return {{"max_epochs", t.max_epochs},
          {"batch_size", t.batch_size},
          {"seed", t.seed},
          {"lr", t.lr},
          {"weight_decay", t.weight_decay},
          {"early_stop",
           {{"enabled", t.early_stop.enabled},
            {"monitor", "val_wmcll"},
            {"patience", t.early_stop.patience},
            {"min_delta", t.early_stop.min_delta}}},
          {"swa",
           {{"enabled", t.swa.enabled}, {"start_epoch", t.swa.start_epoch}}},
          {"class_weights", t.class_weights},
          {"standardize", t.standardize}};
}

template <typename T>
void Read(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void ReadAugmentation(const nlohmann::json& j, AugmentationConfig& a) {
  Read(j, "apply_probability", a.apply_probability);
  Read(j, "sharpness_factor", a.sharpness_factor);
  Read(j, "brightness", a.brightness);
  Read(j, "hue", a.hue);
  Read(j, "saturation", a.saturation);
  Read(j, "rotate_limit_deg", a.rotate_limit_deg);
  Read(j, "resize_to", a.resize_to);
  Read(j, "normalize_mean", a.normalize_mean);
  Read(j, "normalize_std", a.normalize_std);
  Read(j, "seed", a.seed);
}

void ReadTrain(const nlohmann::json& j, TrainConfig& t) {
  Read(j, "max_epochs", t.max_epochs);
  Read(j, "batch_size", t.batch_size);
  Read(j, "seed", t.seed);
  Read(j, "lr", t.lr);
  Read(j, "weight_decay", t.weight_decay);
  if (j.contains("early_stop")) {
    const auto& e = j.at("early_stop");
    Read(e, "enabled", t.early_stop.enabled);
    Read(e, "patience", t.early_stop.patience);
    Read(e, "min_delta", t.early_stop.min_delta);
  }
  if (j.contains("swa")) {
    Read(j.at("swa"), "enabled", t.swa.enabled);
    Read(j.at("swa"), "start_epoch", t.swa.start_epoch);
  }
  Read(j, "class_weights", t.class_weights);
  Read(j, "standardize", t.standardize);
}

}  // namespace

nlohmann::ordered_json RunConfigToJson(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["inputs"] = c.inputs;
  j["output_dir"] = c.output_dir;
  j["labels_path"] = c.labels_path;
  j["split_path"] = c.split_path;
  j["tiles_dir"] = c.tiles_dir;
  j["features_path"] = c.features_path;
  j["scores_paths"] = c.scores_paths;
  j["manifest_path"] = c.manifest_path;
  j["tile_size"] = c.tile_size;
  j["stride"] = c.stride;
  j["edge_policy"] = EdgePolicyName(c.edge_policy);
  j["save_patches"] = c.save_patches;
  j["min_content_ratio"] = c.min_content_ratio;
  j["stage1"] = {{"model_path", c.stage1.model_path},
                 {"threshold", c.stage1.threshold}};
  j["stage2"] = {{"model_path", c.stage2.model_path},
                 {"scores_path", c.stage2.scores_path},
                 {"aggregate", AggregateMethodName(c.stage2.aggregate)}};
  j["augmentation"] = AugmentationJson(c.augmentation);
  j["augment_training"] = c.augment_training;
  j["train"] = TrainJson(c.train);
  j["search"] = {{"trials", c.search.trials},
                 {"lr_min", c.search.lr_min},
                 {"lr_max", c.search.lr_max},
                 {"seed", c.search.seed}};
  j["split"] = {{"train", c.split.train},
                {"validation", c.split.validation},
                {"test", c.split.test}};
  j["synth"] = {{"slides_per_class", c.synth.slides_per_class},
                {"classes", c.synth.classes},
                {"width_px", c.synth.width_px},
                {"height_px", c.synth.height_px},
                {"blob_count", c.synth.blob_count},
                {"blob_radius_min_px", c.synth.blob_radius_min_px},
                {"blob_radius_max_px", c.synth.blob_radius_max_px}};
  j["eval"] = {{"level", c.eval.level},
               {"split", c.eval.split},
               {"inverse_frequency", c.eval.inverse_frequency},
               {"class_weights", c.eval.class_weights}};
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  return j;
}

void ApplyRunConfigJson(const nlohmann::json& j, RunConfig& c) {
  try {
    Read(j, "inputs", c.inputs);
    Read(j, "output_dir", c.output_dir);
    Read(j, "labels_path", c.labels_path);
    Read(j, "split_path", c.split_path);
    Read(j, "tiles_dir", c.tiles_dir);
    Read(j, "features_path", c.features_path);
    Read(j, "scores_paths", c.scores_paths);
    Read(j, "manifest_path", c.manifest_path);
    Read(j, "tile_size", c.tile_size);
    Read(j, "stride", c.stride);
    if (j.contains("edge_policy")) {
      c.edge_policy = ParseEdgePolicy(j.at("edge_policy").get<std::string>());
    }
    Read(j, "save_patches", c.save_patches);
    Read(j, "min_content_ratio", c.min_content_ratio);
    if (j.contains("stage1")) {
      Read(j.at("stage1"), "model_path", c.stage1.model_path);
      Read(j.at("stage1"), "threshold", c.stage1.threshold);
    }
    if (j.contains("stage2")) {
      const auto& s = j.at("stage2");
      Read(s, "model_path", c.stage2.model_path);
      Read(s, "scores_path", c.stage2.scores_path);
      if (s.contains("aggregate")) {
        c.stage2.aggregate =
            ParseAggregateMethod(s.at("aggregate").get<std::string>());
      }
    }
    if (j.contains("augmentation")) ReadAugmentation(j.at("augmentation"), c.augmentation);
    Read(j, "augment_training", c.augment_training);
    if (j.contains("train")) ReadTrain(j.at("train"), c.train);
    if (j.contains("search")) {
      const auto& s = j.at("search");
      Read(s, "trials", c.search.trials);
      Read(s, "lr_min", c.search.lr_min);
      Read(s, "lr_max", c.search.lr_max);
      Read(s, "seed", c.search.seed);
    }
    if (j.contains("split")) {
      Read(j.at("split"), "train", c.split.train);
      Read(j.at("split"), "validation", c.split.validation);
      Read(j.at("split"), "test", c.split.test);
    }
    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      Read(s, "slides_per_class", c.synth.slides_per_class);
      Read(s, "classes", c.synth.classes);
      Read(s, "width_px", c.synth.width_px);
      Read(s, "height_px", c.synth.height_px);
      Read(s, "blob_count", c.synth.blob_count);
      Read(s, "blob_radius_min_px", c.synth.blob_radius_min_px);
      Read(s, "blob_radius_max_px", c.synth.blob_radius_max_px);
    }
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      Read(e, "level", c.eval.level);
      Read(e, "split", c.eval.split);
      Read(e, "inverse_frequency", c.eval.inverse_frequency);
      Read(e, "class_weights", c.eval.class_weights);
    }
    Read(j, "seed", c.seed);
    Read(j, "workers", c.workers);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kMalformed, fmt::format("run config: {}", e.what()));
  }
}

void LoadRunConfig(const std::filesystem::path& path, RunConfig& config) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadFileText(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kMalformed,
                fmt::format("{}: {}", path.string(), e.what()));
  }
  ApplyRunConfigJson(j, config);
}

void SaveRunConfig(const std::filesystem::path& path, const RunConfig& config) {
  WriteFileAtomic(path, RunConfigToJson(config).dump(2) + "\n");
}

std::uint64_t StageSeed(const RunConfig& config, std::string_view stage) {
  return DeriveSeed(config.seed, stage);
}

}  // namespace clotpath

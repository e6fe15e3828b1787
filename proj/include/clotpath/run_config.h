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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "clotpath/augment.h"
#include "clotpath/classifier.h"
#include "clotpath/metrics.h"
#include "clotpath/otsu_filter.h"
#include "clotpath/tiler.h"
#include "clotpath/trainer.h"

namespace clotpath {

/// Environment variable read for the worker count when --workers is absent.
inline constexpr std::string_view kWorkersEnvVar = "CLOTPATH_WORKERS";

struct SynthSettings {
  int slides_per_class = 20;
  std::vector<std::string> classes{"CE", "LAA"};
  int width_px = 2400;
  int height_px = 2400;
  int blob_count = 3;
  int blob_radius_min_px = 300;
  int blob_radius_max_px = 600;
};

struct Stage1Settings {
  std::string model_path;
  double threshold = kDefaultStage1Threshold;
};

struct Stage2Settings {
  std::string model_path;
  std::string scores_path;
  AggregateMethod aggregate = AggregateMethod::kMean;
};

struct EvalSettings {
  /// "tile", "slide" or "both".
  std::string level = "both";
  std::string split = "test";
  bool inverse_frequency = false;
  std::vector<double> class_weights;
};

/// Every parameter of a run. Written to config.json in each output
/// directory; reloading it with --config reproduces the run.
struct RunConfig {
  std::vector<std::string> inputs;
  std::string output_dir = "out";
  std::string labels_path;
  std::string split_path;
  std::string tiles_dir;
  std::string features_path;
  std::vector<std::string> scores_paths;
  std::string manifest_path;

  int tile_size = kDefaultTileSize;
  int stride = kDefaultTileSize;
  EdgePolicy edge_policy = EdgePolicy::kDrop;
  bool save_patches = false;
  double min_content_ratio = kDefaultMinContentRatio;

  Stage1Settings stage1;
  Stage2Settings stage2;
  AugmentationConfig augmentation;
  /// Stage-2 training features use train-mode augmentation.
  bool augment_training = true;
  TrainConfig train;
  SearchConfig search;
  SplitRatios split;
  SynthSettings synth;
  EvalSettings eval;

  std::uint64_t seed = 0;
  /// < 1 means all hardware threads.
  int workers = 1;

  /// Throws kInvalidArgument on out-of-range values.
  void Validate() const;
};

nlohmann::ordered_json RunConfigToJson(const RunConfig& config);
/// Overlays the keys present in `json` onto `config`.
void ApplyRunConfigJson(const nlohmann::json& json, RunConfig& config);
void LoadRunConfig(const std::filesystem::path& path, RunConfig& config);
void SaveRunConfig(const std::filesystem::path& path, const RunConfig& config);

/// Per-stage seed from the run seed: DeriveSeed(seed, stage).
std::uint64_t StageSeed(const RunConfig& config, std::string_view stage);

}  // namespace clotpath

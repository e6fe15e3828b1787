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

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "clotpath/features.h"
#include "clotpath/tiler.h"

namespace clotpath {

/// Stage 1 separates background from cellular tiles; stage 2 predicts clot
/// origin.
enum class ClassSet { kBackgroundCellular, kClotOrigin };

std::string_view ClassSetName(ClassSet set);
ClassSet ParseClassSet(std::string_view name);
/// Label names in index order: {background, cellular} or {CE, LAA}.
const std::vector<std::string>& ClassNames(ClassSet set);
/// Index of `label` within the set; throws kInvalidArgument if absent.
int ClassIndex(ClassSet set, std::string_view label);

inline constexpr int kCellularIndex = 1;

/// Per-class probabilities summing to 1.
using Probabilities = std::vector<double>;

struct ModelMetadata {
  std::uint64_t seed = 0;
  int epochs = 0;
  double final_val_wmcll = 0.0;
  double learning_rate = 0.0;

  bool operator==(const ModelMetadata&) const = default;
};

struct LinearModel {
  ClassSet class_set = ClassSet::kClotOrigin;
  int layout_version = kFeatureLayoutVersion;
  /// num_classes x kFeatureCount, row-major.
  std::vector<double> weights;
  std::vector<double> biases;
  ModelMetadata metadata;

  int num_classes() const { return static_cast<int>(biases.size()); }
  double weight(int cls, int feature) const {
    return weights[static_cast<std::size_t>(cls) * kFeatureCount + feature];
  }

  /// All-zero model for `set`.
  static LinearModel Zero(ClassSet set);

  /// Throws kShapeMismatch / kNonFinite / kLayoutMismatch.
  void Validate() const;

  bool operator==(const LinearModel&) const = default;
};

nlohmann::ordered_json ModelToJson(const LinearModel& model);
LinearModel ModelFromJson(const nlohmann::json& json);
void SaveModel(const std::filesystem::path& path, const LinearModel& model);
LinearModel LoadModel(const std::filesystem::path& path);

/// Max-shifted softmax.
Probabilities Softmax(std::span<const double> logits);

std::vector<double> Logits(const LinearModel& model, const FeatureVector& f);

/// softmax(W f + b). Throws kLayoutMismatch when the feature layout differs
/// from the model's.
Probabilities PredictProba(const LinearModel& model, const FeatureVector& f);

/// Index of the largest probability; ties go to the lower index.
int Argmax(std::span<const double> probs);

inline constexpr double kDefaultStage1Threshold = 0.5;

/// Records P(cellular) on every record. A tile still kept whose probability
/// is below `threshold` is discarded as background; tiles discarded by an
/// earlier stage keep their reason. `features[i]` belongs to `records[i]`.
void Stage1Filter(const LinearModel& model, std::span<TileRecord> records,
                  std::span<const FeatureVector> features,
                  double threshold = kDefaultStage1Threshold);

/// (slide_id, x, y).
struct TileKey {
  std::string slide_id;
  int x = 0;
  int y = 0;

  std::string ToString() const;
  auto operator<=>(const TileKey&) const = default;
};

inline TileKey KeyOf(const TileSpec& spec) {
  return TileKey{spec.slide_id, spec.x, spec.y};
}

struct ScoreTable {
  /// Without the "p_" prefix.
  std::vector<std::string> class_names;
  std::map<TileKey, Probabilities> scores;
};

/// CSV "slide_id,x,y,p_<class>,...". Rows whose sum lies in [0.99, 1.01]
/// are renormalized; anything else, malformed cells, negative entries and
/// duplicate keys throw.
ScoreTable LoadExternalScores(const std::filesystem::path& path);
ScoreTable ParseExternalScores(std::string_view text, std::string_view source);
void WriteScores(const std::filesystem::path& path, const ScoreTable& table);

enum class AggregateMethod { kMean, kMajority, kMaxConfidence };

std::string_view AggregateMethodName(AggregateMethod method);
AggregateMethod ParseAggregateMethod(std::string_view name);

/// Combines tile distributions into one slide distribution. The result does
/// not depend on tile order. Throws kEmptyInput for an empty list.
Probabilities AggregateSlide(std::span<const Probabilities> tile_probs,
                             AggregateMethod method = AggregateMethod::kMean);

}  // namespace clotpath

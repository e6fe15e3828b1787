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

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clotpath/image.h"

namespace clotpath {

inline constexpr int kFeatureCount = 11;
inline constexpr int kFeatureLayoutVersion = 1;
inline constexpr int kStage1InputSize = 128;
inline constexpr int kStage2InputSize = 256;

/// Column order of FeatureVector::values.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "mean_r", "mean_g", "mean_b",
    "std_r", "std_g", "std_b",
    "sat_mean", "sat_std",
    "foreground_ratio",
    "edge_density",
    "gray_entropy"};

/// Edge pixels: central-difference luma gradient magnitude above this
/// fraction of full scale.
inline constexpr double kEdgeThreshold = 25.0 / 255.0;

struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  int layout_version = kFeatureLayoutVersion;

  bool operator==(const FeatureVector&) const = default;
};

/// Computes the documented 11 features. Everything is orientation-free:
/// flips and quarter turns leave the vector unchanged.
FeatureVector ExtractFeatures(const RgbImage& tile, double content_ratio);

/// Stage-1 features: the tile downsized to 128x128 first.
FeatureVector Stage1Features(const RgbImage& tile, double content_ratio);

/// One row of a feature matrix.
struct FeatureRow {
  std::string slide_id;
  int x = 0;
  int y = 0;
  FeatureVector features;
  std::optional<std::string> label;
};

/// CSV: slide_id,x,y,<feature names>,label. Doubles are written with
/// round-trip precision.
void WriteFeatureCsv(const std::filesystem::path& path,
                     std::span<const FeatureRow> rows);
std::vector<FeatureRow> ReadFeatureCsv(const std::filesystem::path& path);

}  // namespace clotpath

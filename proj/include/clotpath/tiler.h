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

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "clotpath/image.h"
#include "clotpath/slide_io.h"

namespace clotpath {

inline constexpr int kDefaultTileSize = 600;

enum class EdgePolicy { kDrop, kPad };

std::string_view EdgePolicyName(EdgePolicy policy);
EdgePolicy ParseEdgePolicy(std::string_view name);

struct TileSpec {
  std::string slide_id;
  int x = 0;
  int y = 0;
  int width = kDefaultTileSize;
  int height = kDefaultTileSize;
  /// Part of the tile lies outside the slide; those pixels are fill.
  bool padded = false;

  /// "<slide_id>_x<x>_y<y>", also the patch file stem and the per-tile seed
  /// tag.
  std::string identity() const;

  auto operator<=>(const TileSpec&) const = default;
};

enum class DiscardReason { kNone, kLowContent, kBackground, kPartialEdge };

std::string_view DiscardReasonName(DiscardReason reason);
DiscardReason ParseDiscardReason(std::string_view name);

struct TileRecord {
  TileSpec spec;
  std::optional<double> content_ratio;
  std::optional<double> stage1_prob_cellular;
  bool kept = true;
  DiscardReason discard_reason = DiscardReason::kNone;
  std::optional<std::string> patch_path;
  std::optional<std::string> label;

  bool operator==(const TileRecord&) const = default;
};

/// Grid of tile origins at multiples of `stride`. With kDrop only tiles
/// fully inside the slide are listed; with kPad the grid continues until it
/// covers the slide and edge tiles are flagged padded. Ordered by y, then x.
std::vector<TileSpec> PlanTiles(const SlideImage& slide,
                                int tile_size = kDefaultTileSize,
                                int stride = kDefaultTileSize,
                                EdgePolicy edge_policy = EdgePolicy::kDrop);

/// Reads one tile, filling out-of-slide pixels with `pad_fill`.
RgbImage ExtractTile(const SlideImage& slide, const TileSpec& spec,
                     Rgb pad_fill = kWhite);

struct ExtractOptions {
  Rgb pad_fill = kWhite;
  int workers = 1;
};

/// Streams (spec, pixels) pairs to `sink` in spec order while reads run on
/// a bounded worker pool. Failures name the offending tile.
void ExtractTiles(const SlideImage& slide, std::span<const TileSpec> specs,
                  const ExtractOptions& options,
                  const std::function<void(const TileSpec&, RgbImage)>& sink);

// Manifest I/O: JSON Lines, one TileRecord per line.

/// Keys in manifest column order.
nlohmann::ordered_json TileRecordToJson(const TileRecord& record);
TileRecord TileRecordFromJson(const nlohmann::json& json);
std::string TileRecordToLine(const TileRecord& record);

/// Writes to a sibling temp file and renames, so readers never see a
/// partial manifest.
void WriteManifest(const std::filesystem::path& path,
                   std::span<const TileRecord> records);
std::vector<TileRecord> ReadManifest(const std::filesystem::path& path);

/// Orders records by (slide_id, y, x).
void SortRecords(std::vector<TileRecord>& records);

/// Writes `contents` to `path` via temp file + rename.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view contents);

}  // namespace clotpath

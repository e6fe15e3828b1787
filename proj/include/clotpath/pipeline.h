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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clotpath/augment.h"
#include "clotpath/features.h"
#include "clotpath/parallel.h"
#include "clotpath/slide_io.h"
#include "clotpath/tiler.h"

namespace clotpath {

struct TilingOptions {
  int tile_size = kDefaultTileSize;
  int stride = kDefaultTileSize;
  EdgePolicy edge_policy = EdgePolicy::kDrop;
  Rgb pad_fill = kWhite;
  int workers = 1;
  /// When set, every tile is also written as <identity>.png here.
  std::optional<std::filesystem::path> patch_dir;
  int patch_compression = 1;
};

/// Mask coverage 0 -> "background", >= 0.5 -> "cellular", else unlabeled.
std::optional<std::string> Stage1LabelFromMask(double mask_fraction);

/// Plans the grid, reads every tile on the worker pool and records its
/// content ratio. Records come back in plan order whatever the worker
/// count. With `mask`, each record also gets the stage-1 mask label.
std::vector<TileRecord> TileAndMeasure(const SlideImage& slide,
                                       const TilingOptions& options,
                                       const SlideImage* mask = nullptr);

/// map(record, pixels) for each record, extraction spread over `workers`;
/// results are returned in record order.
template <typename T, typename Fn>
std::vector<T> MapTiles(const SlideImage& slide,
                        std::span<const TileRecord> records, int workers,
                        Fn&& map, Rgb pad_fill = kWhite) {
  std::vector<T> out;
  out.reserve(records.size());
  ParallelMapOrdered<T>(
      records.size(), workers,
      [&](std::size_t i) {
        return map(records[i], ExtractTile(slide, records[i].spec, pad_fill));
      },
      [&](std::size_t, T value) { out.push_back(std::move(value)); });
  return out;
}

std::vector<FeatureVector> ComputeStage1Features(
    const SlideImage& slide, std::span<const TileRecord> records, int workers);

/// Augments each tile (train or eval mode) and extracts features from the
/// resized image.
std::vector<FeatureVector> ComputeStage2Features(
    const SlideImage& slide, std::span<const TileRecord> records,
    const AugmentationConfig& augmentation, AugmentMode mode, int workers);

/// slides.csv next to a manifest: slide_id,path,mask_path.
struct SlideEntry {
  std::string slide_id;
  std::filesystem::path path;
  std::filesystem::path mask_path;
};

void WriteSlideIndex(const std::filesystem::path& path,
                     std::span<const SlideEntry> entries);
std::vector<SlideEntry> ReadSlideIndex(const std::filesystem::path& path);

/// Slide files under `input` (a file or a directory of .png/.tif/.tiff,
/// skipping *_mask.png), sorted by path. A sibling <stem>_mask.png is
/// picked up as the mask.
std::vector<SlideEntry> DiscoverSlides(const std::filesystem::path& input);

}  // namespace clotpath

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

#include "clotpath/pipeline.h"

#include <algorithm>

#include <fmt/format.h>

#include "clotpath/csv.h"
#include "clotpath/error.h"
#include "clotpath/otsu_filter.h"
#include "clotpath/png_io.h"

namespace clotpath {

std::optional<std::string> Stage1LabelFromMask(double mask_fraction) {
  if (mask_fraction <= 0.0) return "background";
  if (mask_fraction >= 0.5) return "cellular";
  return std::nullopt;
}

namespace {

double MaskFraction(const SlideImage& mask, const TileSpec& spec) {
  const int w = std::min(spec.width, mask.width() - spec.x);
  const int h = std::min(spec.height, mask.height() - spec.y);
  if (w <= 0 || h <= 0) return 0.0;
  const RgbImage region = mask.ReadImage(spec.x, spec.y, w, h);
  std::size_t on = 0;
  for (std::size_t i = 0; i < region.pixel_count(); ++i) {
    on += region.pixels[3 * i] >= 128 ? 1 : 0;
  }
  return static_cast<double>(on) /
         static_cast<double>(spec.width) / static_cast<double>(spec.height);
}

}  // namespace

std::vector<TileRecord> TileAndMeasure(const SlideImage& slide,
                                       const TilingOptions& options,
                                       const SlideImage* mask) {
  if (mask && (mask->width() != slide.width() ||
               mask->height() != slide.height())) {
    throw Error(Errc::kShapeMismatch,
                fmt::format("mask of slide {} is {}x{}, slide is {}x{}",
                            slide.slide_id(), mask->width(), mask->height(),
                            slide.width(), slide.height()));
  }
  const std::vector<TileSpec> specs = PlanTiles(
      slide, options.tile_size, options.stride, options.edge_policy);
  if (options.patch_dir) std::filesystem::create_directories(*options.patch_dir);
  std::vector<TileRecord> records;
  records.reserve(specs.size());
  ParallelMapOrdered<TileRecord>(
      specs.size(), options.workers,
      [&](std::size_t i) {
        const TileSpec& spec = specs[i];
        try {
          const RgbImage tile = ExtractTile(slide, spec, options.pad_fill);
          const int vw = std::min(spec.width, slide.width() - spec.x);
          const int vh = std::min(spec.height, slide.height() - spec.y);
          TileRecord r;
          r.spec = spec;
          r.content_ratio = MeasureContent(tile, vw, vh).ratio;
          if (options.patch_dir) {
            const auto path = *options.patch_dir / (spec.identity() + ".png");
            WritePng(path, tile, options.patch_compression);
            r.patch_path = path.string();
          }
          if (mask) r.label = Stage1LabelFromMask(MaskFraction(*mask, spec));
          return r;
        } catch (const Error& e) {
          throw Error(e.code(),
                      fmt::format("tile {}: {}", spec.identity(), e.what()));
        }
      },
      [&](std::size_t, TileRecord r) { records.push_back(std::move(r)); });
  return records;
}

std::vector<FeatureVector> ComputeStage1Features(
    const SlideImage& slide, std::span<const TileRecord> records, int workers) {
  return MapTiles<FeatureVector>(
      slide, records, workers,
      [](const TileRecord& r, const RgbImage& tile) {
        return Stage1Features(tile, r.content_ratio.value_or(0.0));
      });
}

std::vector<FeatureVector> ComputeStage2Features(
    const SlideImage& slide, std::span<const TileRecord> records,
    const AugmentationConfig& augmentation, AugmentMode mode, int workers) {
  return MapTiles<FeatureVector>(
      slide, records, workers,
      [&](const TileRecord& r, const RgbImage& tile) {
        const AugmentResult a =
            AugmentPipeline(tile, augmentation, r.spec.identity(), mode);
        return ExtractFeatures(a.image, r.content_ratio.value_or(0.0));
      });
}

void WriteSlideIndex(const std::filesystem::path& path,
                     std::span<const SlideEntry> entries) {
  std::string out = "slide_id,path,mask_path\n";
  for (const SlideEntry& e : entries) {
    out += fmt::format("{},{},{}\n", e.slide_id, e.path.string(),
                       e.mask_path.string());
  }
  WriteFileAtomic(path, out);
}

std::vector<SlideEntry> ReadSlideIndex(const std::filesystem::path& path) {
  const CsvTable csv = ReadCsv(path);
  const int id = csv.Column("slide_id");
  const int file = csv.Column("path");
  const int mask = csv.Column("mask_path");
  if (id < 0 || file < 0 || mask < 0) {
    throw Error(Errc::kMalformed,
                fmt::format("{}: expected columns slide_id,path,mask_path",
                            path.string()));
  }
  std::vector<SlideEntry> out;
  for (const auto& row : csv.rows) out.push_back({row[id], row[file], row[mask]});
  return out;
}

namespace {

bool IsSlideFile(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  const std::string stem = p.stem().string();
  const bool is_mask = stem.size() > 5 && stem.ends_with("_mask");
  return !is_mask && (ext == ".png" || ext == ".tif" || ext == ".tiff");
}

SlideEntry EntryFor(const std::filesystem::path& p) {
  SlideEntry e;
  e.slide_id = p.stem().string();
  e.path = p;
  const auto mask = p.parent_path() / (e.slide_id + "_mask.png");
  if (std::filesystem::exists(mask)) e.mask_path = mask;
  return e;
}

}  // namespace

std::vector<SlideEntry> DiscoverSlides(const std::filesystem::path& input) {
  if (!std::filesystem::exists(input)) {
    throw Error(Errc::kMissing,
                fmt::format("slide input {} does not exist", input.string()));
  }
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(input)) {
    for (const auto& entry : std::filesystem::directory_iterator(input)) {
      if (entry.is_regular_file() && IsSlideFile(entry.path())) {
        files.push_back(entry.path());
      }
    }
  } else {
    files.push_back(input);
  }
  std::sort(files.begin(), files.end());
  std::vector<SlideEntry> out;
  for (const auto& f : files) out.push_back(EntryFor(f));
  return out;
}

}  // namespace clotpath

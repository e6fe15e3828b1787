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
#include <cstdint>
#include <span>
#include <vector>

#include "clotpath/image.h"
#include "clotpath/tiler.h"

namespace clotpath {

inline constexpr double kDefaultMinContentRatio = 0.30;

/// Rec.601 luma, rounded half away from zero.
std::uint8_t Luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

GrayImage ToGrayscale(const RgbImage& tile);

struct GrayHistogram {
  std::array<std::uint64_t, 256> bins{};
  std::uint64_t total = 0;

  void Add(std::uint8_t value, std::uint64_t count = 1) {
    bins[value] += count;
    total += count;
  }

  /// Histogram of the top-left `valid_width` x `valid_height` pixels.
  static GrayHistogram FromGray(const GrayImage& gray, int valid_width,
                                int valid_height);
  static GrayHistogram FromGray(const GrayImage& gray) {
    return FromGray(gray, gray.width, gray.height);
  }
};

struct OtsuResult {
  int threshold = 0;
  /// Only one intensity present; `threshold` is that intensity.
  bool degenerate = false;
};

/// Threshold t maximizing w0*w1*(mu0 - mu1)^2 with class 0 = [0, t].
/// Candidates leaving either class empty are skipped; ties go to the
/// smallest t. The comparison is exact (integer quotient + remainder), so
/// the result does not depend on floating-point rounding. Throws
/// kEmptyInput when the histogram is empty.
OtsuResult OtsuThreshold(const GrayHistogram& hist);

/// Fraction of the tile's pixels with luma <= threshold. Pixels outside the
/// top-left valid rectangle (padding) count as background.
double ContentRatio(const GrayImage& gray, int threshold, int valid_width,
                    int valid_height);
inline double ContentRatio(const GrayImage& gray, int threshold) {
  return ContentRatio(gray, threshold, gray.width, gray.height);
}

struct TileContent {
  OtsuResult otsu;
  double ratio = 0.0;
};

/// Grayscale, Otsu on the valid region, then the content ratio. A
/// degenerate threshold yields ratio 0.
TileContent MeasureContent(const RgbImage& tile, int valid_width,
                           int valid_height);
inline TileContent MeasureContent(const RgbImage& tile) {
  return MeasureContent(tile, tile.width, tile.height);
}

/// Marks records with content_ratio <= min_ratio as discarded
/// (low_content). Records already discarded keep their reason. Throws
/// kMissing if a record lacks a content ratio.
void ApplyContentFilter(std::span<TileRecord> records,
                        double min_ratio = kDefaultMinContentRatio);

}  // namespace clotpath

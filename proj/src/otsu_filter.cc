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

#include "clotpath/otsu_filter.h"

#include <algorithm>

#include <fmt/format.h>

#include "clotpath/error.h"

namespace clotpath {

std::uint8_t Luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  // 0.299 R + 0.587 G + 0.114 B in thousandths, rounded half up.
  const unsigned scaled = 299u * r + 587u * g + 114u * b;
  return static_cast<std::uint8_t>(std::min(255u, (scaled + 500u) / 1000u));
}

GrayImage ToGrayscale(const RgbImage& tile) {
  GrayImage gray(tile.width, tile.height);
  const std::uint8_t* src = tile.pixels.data();
  for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
    gray.pixels[i] = Luma(src[3 * i], src[3 * i + 1], src[3 * i + 2]);
  }
  return gray;
}

GrayHistogram GrayHistogram::FromGray(const GrayImage& gray, int valid_width,
                                      int valid_height) {
  GrayHistogram hist;
  const int w = std::clamp(valid_width, 0, gray.width);
  const int h = std::clamp(valid_height, 0, gray.height);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row =
        gray.pixels.data() + static_cast<std::size_t>(y) * gray.width;
    for (int x = 0; x < w; ++x) ++hist.bins[row[x]];
  }
  hist.total = static_cast<std::uint64_t>(w) * static_cast<std::uint64_t>(h);
  return hist;
}

namespace {

using u128 = unsigned __int128;

// sigma_b^2 * N^2 = D^2 / (n0 * n1) with D = s0*n1 - s1*n0. Stored as
// floor quotient and remainder so two candidates compare exactly with
// 128-bit products.
struct Score {
  u128 quotient = 0;
  u128 remainder = 0;
  u128 divisor = 1;
};

bool Greater(const Score& a, const Score& b) {
  if (a.quotient != b.quotient) return a.quotient > b.quotient;
  return a.remainder * b.divisor > b.remainder * a.divisor;
}

}  // namespace

OtsuResult OtsuThreshold(const GrayHistogram& hist) {
  std::uint64_t total = 0;
  u128 sum_all = 0;
  int nonzero_bins = 0;
  int only_bin = 0;
  for (int i = 0; i < 256; ++i) {
    total += hist.bins[i];
    sum_all += static_cast<u128>(hist.bins[i]) * static_cast<unsigned>(i);
    if (hist.bins[i] != 0) {
      ++nonzero_bins;
      only_bin = i;
    }
  }
  if (total == 0) {
    throw Error(Errc::kEmptyInput, "Otsu threshold of an empty histogram");
  }
  if (nonzero_bins == 1) return OtsuResult{only_bin, true};

  std::uint64_t n0 = 0;
  u128 s0 = 0;
  Score best;
  int best_t = -1;
  for (int t = 0; t < 255; ++t) {
    n0 += hist.bins[t];
    s0 += static_cast<u128>(hist.bins[t]) * static_cast<unsigned>(t);
    const std::uint64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const u128 s1 = sum_all - s0;
    const u128 lhs = s0 * n1;
    const u128 rhs = s1 * n0;
    const u128 diff = lhs > rhs ? lhs - rhs : rhs - lhs;
    Score score;
    score.divisor = static_cast<u128>(n0) * n1;
    // diff = n0*n1*|mu0 - mu1|, so diff / divisor <= 255 and the square
    // below stays far inside 128 bits.
    const u128 q = diff / score.divisor;
    const u128 r = diff % score.divisor;
    // diff^2 / divisor = q*diff + r*q + r^2/divisor
    const u128 whole = q * diff + r * q;
    const u128 r2 = r * r;
    score.quotient = whole + r2 / score.divisor;
    score.remainder = r2 % score.divisor;
    if (best_t < 0 || Greater(score, best)) {
      best = score;
      best_t = t;
    }
  }
  return OtsuResult{best_t, false};
}

double ContentRatio(const GrayImage& gray, int threshold, int valid_width,
                    int valid_height) {
  if (gray.pixel_count() == 0) return 0.0;
  const int w = std::clamp(valid_width, 0, gray.width);
  const int h = std::clamp(valid_height, 0, gray.height);
  std::uint64_t dark = 0;
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row =
        gray.pixels.data() + static_cast<std::size_t>(y) * gray.width;
    for (int x = 0; x < w; ++x) dark += row[x] <= threshold ? 1 : 0;
  }
  return static_cast<double>(dark) / static_cast<double>(gray.pixel_count());
}

TileContent MeasureContent(const RgbImage& tile, int valid_width,
                           int valid_height) {
  const GrayImage gray = ToGrayscale(tile);
  const GrayHistogram hist =
      GrayHistogram::FromGray(gray, valid_width, valid_height);
  TileContent content;
  if (hist.total == 0) {
    content.otsu = OtsuResult{0, true};
    return content;
  }
  content.otsu = OtsuThreshold(hist);
  content.ratio = content.otsu.degenerate
                      ? 0.0
                      : ContentRatio(gray, content.otsu.threshold, valid_width,
                                     valid_height);
  return content;
}

void ApplyContentFilter(std::span<TileRecord> records, double min_ratio) {
  for (TileRecord& r : records) {
    if (!r.content_ratio) {
      throw Error(Errc::kMissing,
                  fmt::format("tile {} has no content ratio", r.spec.identity()));
    }
    if (*r.content_ratio > min_ratio) continue;
    if (r.kept) r.discard_reason = DiscardReason::kLowContent;
    r.kept = false;
  }
}

}  // namespace clotpath

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

#include "clotpath/features.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <fmt/format.h>

#include "clotpath/augment.h"
#include "clotpath/csv.h"
#include "clotpath/error.h"
#include "clotpath/otsu_filter.h"
#include "clotpath/tiler.h"

namespace clotpath {

FeatureVector ExtractFeatures(const RgbImage& tile, double content_ratio) {
  FeatureVector f;
  const std::size_t n = tile.pixel_count();
  if (n == 0) return f;

  // Integer moments keep the result independent of pixel order.
  std::array<std::uint64_t, 3> sum{};
  std::array<std::uint64_t, 3> sum_sq{};
  // Saturation depends only on (max, max - min); counting pairs keeps the
  // floating-point sums in a fixed order.
  std::vector<std::uint32_t> sat_pairs(256 * 256, 0);
  std::array<std::uint64_t, 256> hist{};
  GrayImage gray(tile.width, tile.height);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = tile.pixels.data() + 3 * i;
    for (int c = 0; c < 3; ++c) {
      sum[c] += p[c];
      sum_sq[c] += static_cast<std::uint64_t>(p[c]) * p[c];
    }
    const int mx = std::max({p[0], p[1], p[2]});
    const int mn = std::min({p[0], p[1], p[2]});
    ++sat_pairs[static_cast<std::size_t>(mx) * 256 + (mx - mn)];
    const std::uint8_t luma = Luma(p[0], p[1], p[2]);
    gray.pixels[i] = luma;
    ++hist[luma];
  }
  const double count = static_cast<double>(n);
  for (int c = 0; c < 3; ++c) {
    const double mean = sum[c] / count;
    const double var = std::max(0.0, sum_sq[c] / count - mean * mean);
    f.values[c] = mean / 255.0;
    f.values[3 + c] = std::sqrt(var) / 255.0;
  }
  double sat_sum = 0.0;
  double sat_sq = 0.0;
  for (int mx = 1; mx < 256; ++mx) {
    for (int d = 1; d <= mx; ++d) {
      const std::uint32_t k = sat_pairs[static_cast<std::size_t>(mx) * 256 + d];
      if (k == 0) continue;
      const double sat = static_cast<double>(d) / mx;
      sat_sum += k * sat;
      sat_sq += k * sat * sat;
    }
  }
  const double sat_mean = sat_sum / count;
  f.values[6] = sat_mean;
  f.values[7] = std::sqrt(std::max(0.0, sat_sq / count - sat_mean * sat_mean));
  f.values[8] = std::clamp(content_ratio, 0.0, 1.0);

  // Gradient (L[x+1] - L[x-1]) / 2 per axis in luma units; the magnitude
  // test |g| > 25 becomes dx^2 + dy^2 > 50^2 in integers.
  std::uint64_t edges = 0;
  std::uint64_t interior = 0;
  constexpr long limit = 50;
  for (int y = 1; y + 1 < tile.height; ++y) {
    for (int x = 1; x + 1 < tile.width; ++x) {
      const long dx = static_cast<long>(gray.at(x + 1, y)) - gray.at(x - 1, y);
      const long dy = static_cast<long>(gray.at(x, y + 1)) - gray.at(x, y - 1);
      edges += dx * dx + dy * dy > limit * limit ? 1 : 0;
      ++interior;
    }
  }
  f.values[9] = interior == 0 ? 0.0 : static_cast<double>(edges) / interior;

  double entropy = 0.0;
  for (std::uint64_t h : hist) {
    if (h == 0) continue;
    const double p = h / count;
    entropy -= p * std::log2(p);
  }
  f.values[10] = std::max(0.0, entropy);
  return f;
}

FeatureVector Stage1Features(const RgbImage& tile, double content_ratio) {
  return ExtractFeatures(Resize(tile, kStage1InputSize), content_ratio);
}

void WriteFeatureCsv(const std::filesystem::path& path,
                     std::span<const FeatureRow> rows) {
  std::string out = "slide_id,x,y";
  for (std::string_view name : kFeatureNames) {
    out += ',';
    out += name;
  }
  out += ",label\n";
  for (const FeatureRow& row : rows) {
    out += fmt::format("{},{},{}", row.slide_id, row.x, row.y);
    for (double v : row.features.values) out += fmt::format(",{}", v);
    out += ',';
    out += row.label.value_or("");
    out += '\n';
  }
  WriteFileAtomic(path, out);
}

std::vector<FeatureRow> ReadFeatureCsv(const std::filesystem::path& path) {
  const CsvTable table = ReadCsv(path);
  const std::size_t want = 3 + kFeatureCount + 1;
  if (table.header.size() != want) {
    throw Error(Errc::kMalformed,
                fmt::format("{}: feature CSV has {} columns, expected {}",
                            path.string(), table.header.size(), want));
  }
  for (int k = 0; k < kFeatureCount; ++k) {
    if (table.header[3 + k] != kFeatureNames[k]) {
      throw Error(Errc::kLayoutMismatch,
                  fmt::format("{}: column {} is '{}', expected '{}'",
                              path.string(), 3 + k, table.header[3 + k],
                              kFeatureNames[k]));
    }
  }
  std::vector<FeatureRow> rows;
  rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    const std::string where = fmt::format("{}:{}", path.string(), r + 2);
    FeatureRow row;
    row.slide_id = cells[0];
    row.x = ParseInt(cells[1], where);
    row.y = ParseInt(cells[2], where);
    for (int k = 0; k < kFeatureCount; ++k) {
      row.features.values[k] = ParseDouble(cells[3 + k], where);
    }
    if (!cells.back().empty()) row.label = cells.back();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace clotpath

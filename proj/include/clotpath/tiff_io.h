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
#include <memory>
#include <vector>

#include "clotpath/image.h"
#include "clotpath/slide_io.h"

namespace clotpath {

// Baseline TIFF: 8-bit RGB, chunky planar configuration, uncompressed or
// Deflate (with optional horizontal predictor), strip- or tile-organized.
// Classic and BigTIFF headers in either byte order. Only the first IFD
// (level 0) is read.

enum class TiffCompression : std::uint16_t {
  kNone = 1,
  kDeflate = 8,
};

struct TiffInfo {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  bool big_endian = false;
  bool bigtiff = false;
  TiffCompression compression = TiffCompression::kNone;
  std::uint16_t predictor = 1;
  bool tiled = false;
  std::uint32_t tile_width = 0;
  std::uint32_t tile_height = 0;
  std::uint32_t rows_per_strip = 0;
  std::vector<std::uint64_t> chunk_offsets;
  std::vector<std::uint64_t> chunk_byte_counts;
};

/// Parses the header and first IFD. Throws kUnsupportedFormat for anything
/// outside the baseline subset above and kCorruptFile for truncated data.
TiffInfo ReadTiffInfo(const std::filesystem::path& path);

struct TiffWriteOptions {
  bool tiled = false;
  std::uint32_t tile_width = 256;
  std::uint32_t tile_height = 256;
  std::uint32_t rows_per_strip = 64;
  TiffCompression compression = TiffCompression::kNone;
  std::uint16_t predictor = 1;
  bool big_endian = false;
  bool bigtiff = false;
};

void WriteTiff(const std::filesystem::path& path, const RgbImage& image,
               const TiffWriteOptions& options = {});

/// Region source decoding one strip or tile at a time. Decoded chunks are
/// kept in a small LRU cache of at most `cache_bytes`.
std::shared_ptr<const RegionSource> OpenTiffSource(
    const std::filesystem::path& path,
    std::size_t cache_bytes = std::size_t{64} << 20);

}  // namespace clotpath

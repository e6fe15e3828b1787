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
#include <cstdio>
#include <filesystem>
#include <memory>
#include <span>

#include "clotpath/image.h"
#include "clotpath/slide_io.h"

namespace clotpath {

// PNG encode/decode backed by libpng.

void WritePng(const std::filesystem::path& path, const RgbImage& image,
              int compression_level = 6);
void WritePng(const std::filesystem::path& path, const GrayImage& image,
              int compression_level = 6);

/// Decodes any 8/16-bit PNG to RGB (alpha dropped, gray and palette
/// expanded).
RgbImage ReadPng(const std::filesystem::path& path);
/// Decodes a PNG to one channel; RGB inputs are reduced to their first
/// channel.
GrayImage ReadPngGray(const std::filesystem::path& path);

/// Writes a PNG one row at a time so callers can emit rasters that do not
/// fit in memory.
class PngRowWriter {
 public:
  PngRowWriter(const std::filesystem::path& path, int width, int height,
               int channels, int compression_level = 6);
  ~PngRowWriter();
  PngRowWriter(const PngRowWriter&) = delete;
  PngRowWriter& operator=(const PngRowWriter&) = delete;

  void WriteRow(std::span<const std::uint8_t> row);
  /// Flushes the trailer; throws if fewer than `height` rows were written.
  void Finish();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

/// Region source over a PNG file. Opening reads only the header. Images up
/// to `full_decode_limit` bytes are decoded once on first access and cached;
/// larger ones are streamed row by row on every read.
std::shared_ptr<const RegionSource> OpenPngSource(
    const std::filesystem::path& path,
    std::size_t full_decode_limit = std::size_t{512} << 20);

}  // namespace clotpath

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
#include <span>
#include <string>
#include <vector>

#include "clotpath/image.h"

namespace clotpath {

/// Backend serving pixels of one raster. Implementations must allow
/// concurrent `Read` calls from multiple threads.
class RegionSource {
 public:
  virtual ~RegionSource() = default;

  virtual int width() const = 0;
  virtual int height() const = 0;

  /// Fills `out` (w*h*3 bytes, row-major RGB). The rectangle has already
  /// been bounds-checked by the caller.
  virtual void Read(int x, int y, int w, int h,
                    std::span<std::uint8_t> out) const = 0;
};

/// A large 8-bit RGB raster addressed by rectangular regions. Cheap to copy;
/// copies share the underlying source.
class SlideImage {
 public:
  SlideImage() = default;
  SlideImage(std::string slide_id, std::shared_ptr<const RegionSource> source,
             std::filesystem::path path = {});

  static SlideImage FromImage(std::string slide_id, RgbImage image);

  const std::string& slide_id() const { return slide_id_; }
  int width() const { return source_ ? source_->width() : 0; }
  int height() const { return source_ ? source_->height() : 0; }
  const std::filesystem::path& path() const { return path_; }

  /// Throws Error{kOutOfBounds} unless the rectangle lies fully inside the
  /// slide. w or h of zero yields an empty buffer.
  std::vector<std::uint8_t> ReadRegion(int x, int y, int w, int h) const;
  void ReadRegionInto(int x, int y, int w, int h,
                      std::span<std::uint8_t> out) const;
  RgbImage ReadImage(int x, int y, int w, int h) const;

 private:
  void CheckBounds(int x, int y, int w, int h) const;

  std::string slide_id_;
  std::shared_ptr<const RegionSource> source_;
  std::filesystem::path path_;
};

enum class RasterFormat { kUnknown, kPng, kTiff };

/// Sniffs the magic bytes. Empty or unreadable files raise kCorruptFile.
RasterFormat DetectFormat(const std::filesystem::path& path);

/// Opens a PNG or baseline TIFF (level 0) without decoding pixel data.
/// The slide id defaults to the filename stem.
SlideImage OpenSlide(const std::filesystem::path& path,
                     std::string slide_id = {});

}  // namespace clotpath

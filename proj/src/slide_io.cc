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

#include "clotpath/slide_io.h"

#include <array>
#include <cstring>
#include <fstream>
#include <utility>

#include <fmt/format.h>

#include "clotpath/error.h"
#include "clotpath/png_io.h"
#include "clotpath/tiff_io.h"

namespace clotpath {

std::string_view ErrcName(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "invalid_argument";
    case Errc::kUnsupportedFormat: return "unsupported_format";
    case Errc::kCorruptFile: return "corrupt_file";
    case Errc::kZeroDimensions: return "zero_dimensions";
    case Errc::kOutOfBounds: return "out_of_bounds";
    case Errc::kIo: return "io";
    case Errc::kLayoutMismatch: return "layout_mismatch";
    case Errc::kShapeMismatch: return "shape_mismatch";
    case Errc::kNonFinite: return "non_finite";
    case Errc::kMalformed: return "malformed";
    case Errc::kDuplicateKey: return "duplicate_key";
    case Errc::kEmptyInput: return "empty_input";
    case Errc::kMissing: return "missing";
    case Errc::kDivergence: return "divergence";
  }
  return "unknown";
}

RgbImage::RgbImage(int w, int h, Rgb fill) : width(w), height(h) {
  pixels.resize(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3);
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = fill[0];
    pixels[i + 1] = fill[1];
    pixels[i + 2] = fill[2];
  }
}

RgbImage::RgbImage(int w, int h, std::vector<std::uint8_t> data)
    : width(w), height(h), pixels(std::move(data)) {
  if (pixels.size() != pixel_count() * 3) {
    throw Error(Errc::kShapeMismatch,
                fmt::format("RGB buffer of {} bytes does not match {}x{}",
                            pixels.size(), w, h));
  }
}

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : width(w), height(h),
      pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

namespace {

class MemorySource final : public RegionSource {
 public:
  explicit MemorySource(RgbImage image) : image_(std::move(image)) {}

  int width() const override { return image_.width; }
  int height() const override { return image_.height; }

  void Read(int x, int y, int w, int h,
            std::span<std::uint8_t> out) const override {
    const std::size_t row_bytes = static_cast<std::size_t>(w) * 3;
    for (int r = 0; r < h; ++r) {
      std::memcpy(out.data() + r * row_bytes, image_.at(x, y + r), row_bytes);
    }
  }

 private:
  RgbImage image_;
};

}  // namespace

SlideImage::SlideImage(std::string slide_id,
                       std::shared_ptr<const RegionSource> source,
                       std::filesystem::path path)
    : slide_id_(std::move(slide_id)),
      source_(std::move(source)),
      path_(std::move(path)) {
  if (!source_ || source_->width() < 1 || source_->height() < 1) {
    throw Error(Errc::kZeroDimensions,
                fmt::format("slide '{}' has zero dimensions", slide_id_));
  }
}

SlideImage SlideImage::FromImage(std::string slide_id, RgbImage image) {
  return SlideImage(std::move(slide_id),
                    std::make_shared<MemorySource>(std::move(image)));
}

void SlideImage::CheckBounds(int x, int y, int w, int h) const {
  const bool ok = source_ && x >= 0 && y >= 0 && w >= 0 && h >= 0 &&
                  static_cast<long long>(x) + w <= width() &&
                  static_cast<long long>(y) + h <= height();
  if (!ok) {
    throw Error(Errc::kOutOfBounds,
                fmt::format("region ({}, {}, {}x{}) outside slide '{}' of "
                            "size {}x{}",
                            x, y, w, h, slide_id_, width(), height()));
  }
}

std::vector<std::uint8_t> SlideImage::ReadRegion(int x, int y, int w,
                                                 int h) const {
  CheckBounds(x, y, w, h);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(w) *
                                static_cast<std::size_t>(h) * 3);
  if (!out.empty()) source_->Read(x, y, w, h, out);
  return out;
}

void SlideImage::ReadRegionInto(int x, int y, int w, int h,
                                std::span<std::uint8_t> out) const {
  CheckBounds(x, y, w, h);
  const std::size_t need =
      static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (out.size() != need) {
    throw Error(Errc::kShapeMismatch,
                fmt::format("output span holds {} bytes, region needs {}",
                            out.size(), need));
  }
  if (need != 0) source_->Read(x, y, w, h, out);
}

RgbImage SlideImage::ReadImage(int x, int y, int w, int h) const {
  return RgbImage(w, h, ReadRegion(x, y, w, h));
}

RasterFormat DetectFormat(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::kIo, fmt::format("cannot open '{}'", path.string()));
  }
  std::array<unsigned char, 8> magic{};
  in.read(reinterpret_cast<char*>(magic.data()), magic.size());
  const auto got = in.gcount();
  if (got == 0) {
    throw Error(Errc::kCorruptFile,
                fmt::format("'{}' is empty", path.string()));
  }
  static constexpr std::array<unsigned char, 8> kPngMagic{
      0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (got == 8 && magic == kPngMagic) return RasterFormat::kPng;
  if (got >= 4) {
    const bool ii = magic[0] == 'I' && magic[1] == 'I' && magic[3] == 0 &&
                    (magic[2] == 42 || magic[2] == 43);
    const bool mm = magic[0] == 'M' && magic[1] == 'M' && magic[2] == 0 &&
                    (magic[3] == 42 || magic[3] == 43);
    if (ii || mm) return RasterFormat::kTiff;
  }
  return RasterFormat::kUnknown;
}

SlideImage OpenSlide(const std::filesystem::path& path, std::string slide_id) {
  if (slide_id.empty()) slide_id = path.stem().string();
  switch (DetectFormat(path)) {
    case RasterFormat::kPng:
      return SlideImage(std::move(slide_id), OpenPngSource(path), path);
    case RasterFormat::kTiff:
      return SlideImage(std::move(slide_id), OpenTiffSource(path), path);
    case RasterFormat::kUnknown:
      break;
  }
  throw Error(Errc::kUnsupportedFormat,
              fmt::format("'{}' is neither PNG nor TIFF", path.string()));
}

}  // namespace clotpath

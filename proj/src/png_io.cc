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

#include "clotpath/png_io.h"

#include <png.h>

#include <csetjmp>
#include <cstring>
#include <mutex>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "clotpath/error.h"

namespace clotpath {
namespace {

// libpng reports failures by longjmp. Every libpng call below sits in a
// small function that owns a setjmp point and holds only trivially
// destructible locals, then the C++ side turns the stored message into an
// exception.

struct ErrorSink {
  char message[256] = {};
};

void OnPngError(png_structp png, png_const_charp message) {
  auto* sink = static_cast<ErrorSink*>(png_get_error_ptr(png));
  if (sink != nullptr) {
    std::snprintf(sink->message, sizeof(sink->message), "%s", message);
  }
  png_longjmp(png, 1);
}

void OnPngWarning(png_structp, png_const_charp) {}

class PngReader {
 public:
  explicit PngReader(const std::filesystem::path& path) : path_(path) {
    fp_ = std::fopen(path.c_str(), "rb");
    if (fp_ == nullptr) {
      throw Error(Errc::kIo, fmt::format("cannot open '{}'", path.string()));
    }
    png_byte signature[8] = {};
    const std::size_t got = std::fread(signature, 1, 8, fp_);
    if (got == 0) {
      throw Error(Errc::kCorruptFile, fmt::format("'{}' is empty", path.string()));
    }
    if (got < 8 || png_sig_cmp(signature, 0, 8) != 0) {
      throw Error(Errc::kUnsupportedFormat,
                  fmt::format("'{}' is not a PNG", path.string()));
    }
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink_, OnPngError,
                                  OnPngWarning);
    info_ = png_ ? png_create_info_struct(png_) : nullptr;
    if (info_ == nullptr) {
      throw Error(Errc::kIo, "libpng allocation failed");
    }
    if (!ReadHeader()) Fail();
  }

  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  int width() const { return static_cast<int>(width_); }
  int height() const { return static_cast<int>(height_); }
  bool interlaced() const { return interlaced_; }

  void ReadRow(std::uint8_t* row) {
    if (!ReadRowImpl(row)) Fail();
  }

  void ReadAll(std::uint8_t* pixels) {
    std::vector<png_bytep> rows(height_);
    for (png_uint_32 r = 0; r < height_; ++r) {
      rows[r] = pixels + static_cast<std::size_t>(r) * width_ * 3;
    }
    if (!ReadImageImpl(rows.data())) Fail();
  }

 private:
  bool ReadHeader() {
    if (setjmp(png_jmpbuf(png_))) return false;
    png_init_io(png_, fp_);
    png_set_sig_bytes(png_, 8);
    png_read_info(png_, info_);
    int bit_depth = 0;
    int color_type = 0;
    int interlace = 0;
    png_get_IHDR(png_, info_, &width_, &height_, &bit_depth, &color_type,
                 &interlace, nullptr, nullptr);
    if (bit_depth == 16) png_set_strip_16(png_);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png_);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
      png_set_expand_gray_1_2_4_to_8(png_);
    }
    if (color_type == PNG_COLOR_TYPE_GRAY ||
        color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
      png_set_gray_to_rgb(png_);
    }
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png_);
    if (png_get_valid(png_, info_, PNG_INFO_tRNS)) {
      // Transparency chunks would add an alpha channel after expansion.
      png_set_tRNS_to_alpha(png_);
      png_set_strip_alpha(png_);
    }
    interlaced_ = interlace != PNG_INTERLACE_NONE;
    if (interlaced_) png_set_interlace_handling(png_);
    png_read_update_info(png_, info_);
    row_bytes_ = png_get_rowbytes(png_, info_);
    return true;
  }

  bool ReadRowImpl(std::uint8_t* row) {
    if (setjmp(png_jmpbuf(png_))) return false;
    png_read_row(png_, row, nullptr);
    return true;
  }

  bool ReadImageImpl(png_bytepp rows) {
    if (setjmp(png_jmpbuf(png_))) return false;
    png_read_image(png_, rows);
    return true;
  }

  [[noreturn]] void Fail() const {
    throw Error(Errc::kCorruptFile,
                fmt::format("PNG decode of '{}' failed: {}", path_.string(),
                            sink_.message));
  }

  // Member subobject so handles are released even when the constructor
  // throws.
  struct Handles {
    std::FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~Handles() {
      if (png != nullptr) png_destroy_read_struct(&png, &info, nullptr);
      if (fp != nullptr) std::fclose(fp);
    }
  };

  std::filesystem::path path_;
  Handles handles_;
  std::FILE*& fp_ = handles_.fp;
  png_structp& png_ = handles_.png;
  png_infop& info_ = handles_.info;
  ErrorSink sink_;
  png_uint_32 width_ = 0;
  png_uint_32 height_ = 0;
  bool interlaced_ = false;
  std::size_t row_bytes_ = 0;
};

void CheckHeaderDims(const PngReader& reader,
                     const std::filesystem::path& path) {
  if (reader.width() < 1 || reader.height() < 1) {
    throw Error(Errc::kZeroDimensions,
                fmt::format("'{}' has zero dimensions", path.string()));
  }
}

class PngSource final : public RegionSource {
 public:
  PngSource(std::filesystem::path path, std::size_t full_decode_limit)
      : path_(std::move(path)) {
    PngReader reader(path_);
    CheckHeaderDims(reader, path_);
    width_ = reader.width();
    height_ = reader.height();
    const std::size_t bytes =
        static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_) * 3;
    cache_whole_ = bytes <= full_decode_limit;
    if (reader.interlaced() && !cache_whole_) {
      throw Error(Errc::kUnsupportedFormat,
                  fmt::format("interlaced PNG '{}' is too large to stream",
                              path_.string()));
    }
  }

  int width() const override { return width_; }
  int height() const override { return height_; }

  void Read(int x, int y, int w, int h,
            std::span<std::uint8_t> out) const override {
    const std::size_t out_row = static_cast<std::size_t>(w) * 3;
    if (cache_whole_) {
      std::call_once(decoded_once_, [this] {
        PngReader reader(path_);
        decoded_ = RgbImage(width_, height_);
        reader.ReadAll(decoded_.pixels.data());
      });
      for (int r = 0; r < h; ++r) {
        std::memcpy(out.data() + r * out_row, decoded_.at(x, y + r), out_row);
      }
      return;
    }
    // Streaming path: decode rows sequentially, keep one row.
    PngReader reader(path_);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(width_) * 3);
    for (int r = 0; r < y + h; ++r) {
      reader.ReadRow(row.data());
      if (r >= y) {
        std::memcpy(out.data() + (r - y) * out_row,
                    row.data() + static_cast<std::size_t>(x) * 3, out_row);
      }
    }
  }

 private:
  std::filesystem::path path_;
  int width_ = 0;
  int height_ = 0;
  bool cache_whole_ = false;
  mutable std::once_flag decoded_once_;
  mutable RgbImage decoded_;
};

}  // namespace

struct PngRowWriter::State {
  std::filesystem::path path;
  std::FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ErrorSink sink;
  int width = 0;
  int height = 0;
  int channels = 0;
  int rows_written = 0;
  bool finished = false;

  ~State() {
    if (png != nullptr) png_destroy_write_struct(&png, &info);
    if (fp != nullptr) std::fclose(fp);
  }

  bool Begin(int level) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_init_io(png, fp);
    png_set_compression_level(png, level);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width),
                 static_cast<png_uint_32>(height), 8,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    return true;
  }

  bool Row(const std::uint8_t* row) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_write_row(png, row);
    return true;
  }

  bool End() {
    if (setjmp(png_jmpbuf(png))) return false;
    png_write_end(png, nullptr);
    return true;
  }

  [[noreturn]] void Fail() const {
    throw Error(Errc::kIo, fmt::format("PNG encode of '{}' failed: {}",
                                       path.string(), sink.message));
  }
};

PngRowWriter::PngRowWriter(const std::filesystem::path& path, int width,
                           int height, int channels, int compression_level)
    : state_(std::make_unique<State>()) {
  if (width < 1 || height < 1) {
    throw Error(Errc::kZeroDimensions, "cannot write an empty PNG");
  }
  if (channels != 1 && channels != 3) {
    throw Error(Errc::kInvalidArgument, "PNG writer supports 1 or 3 channels");
  }
  State& s = *state_;
  s.path = path;
  s.width = width;
  s.height = height;
  s.channels = channels;
  s.fp = std::fopen(path.c_str(), "wb");
  if (s.fp == nullptr) {
    throw Error(Errc::kIo, fmt::format("cannot create '{}'", path.string()));
  }
  s.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &s.sink, OnPngError,
                                  OnPngWarning);
  s.info = s.png ? png_create_info_struct(s.png) : nullptr;
  if (s.info == nullptr) throw Error(Errc::kIo, "libpng allocation failed");
  if (!s.Begin(compression_level)) s.Fail();
}

PngRowWriter::~PngRowWriter() = default;

void PngRowWriter::WriteRow(std::span<const std::uint8_t> row) {
  State& s = *state_;
  if (row.size() != static_cast<std::size_t>(s.width) * s.channels) {
    throw Error(Errc::kShapeMismatch, "PNG row has the wrong length");
  }
  if (s.rows_written >= s.height) {
    throw Error(Errc::kInvalidArgument, "PNG already has all rows");
  }
  if (!s.Row(row.data())) s.Fail();
  ++s.rows_written;
}

void PngRowWriter::Finish() {
  State& s = *state_;
  if (s.finished) return;
  if (s.rows_written != s.height) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("PNG '{}' got {} of {} rows", s.path.string(),
                            s.rows_written, s.height));
  }
  if (!s.End()) s.Fail();
  s.finished = true;
  std::fclose(s.fp);
  s.fp = nullptr;
}

void WritePng(const std::filesystem::path& path, const RgbImage& image,
              int compression_level) {
  PngRowWriter writer(path, image.width, image.height, 3, compression_level);
  const std::size_t row = static_cast<std::size_t>(image.width) * 3;
  for (int y = 0; y < image.height; ++y) {
    writer.WriteRow(std::span(image.at(0, y), row));
  }
  writer.Finish();
}

void WritePng(const std::filesystem::path& path, const GrayImage& image,
              int compression_level) {
  PngRowWriter writer(path, image.width, image.height, 1, compression_level);
  for (int y = 0; y < image.height; ++y) {
    writer.WriteRow(std::span(
        image.pixels.data() + static_cast<std::size_t>(y) * image.width,
        static_cast<std::size_t>(image.width)));
  }
  writer.Finish();
}

RgbImage ReadPng(const std::filesystem::path& path) {
  PngReader reader(path);
  CheckHeaderDims(reader, path);
  RgbImage image(reader.width(), reader.height());
  reader.ReadAll(image.pixels.data());
  return image;
}

GrayImage ReadPngGray(const std::filesystem::path& path) {
  const RgbImage rgb = ReadPng(path);
  GrayImage gray(rgb.width, rgb.height);
  for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
    gray.pixels[i] = rgb.pixels[i * 3];
  }
  return gray;
}

std::shared_ptr<const RegionSource> OpenPngSource(
    const std::filesystem::path& path, std::size_t full_decode_limit) {
  return std::make_shared<PngSource>(path, full_decode_limit);
}

}  // namespace clotpath

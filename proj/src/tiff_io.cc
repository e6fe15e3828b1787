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

#include "clotpath/tiff_io.h"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <list>
#include <map>
#include <mutex>
#include <optional>
#include <unordered_map>

#include <fmt/format.h>

#include "clotpath/error.h"

namespace clotpath {
namespace {

enum Tag : std::uint16_t {
  kImageWidth = 256,
  kImageLength = 257,
  kBitsPerSample = 258,
  kCompression = 259,
  kPhotometric = 262,
  kStripOffsets = 273,
  kSamplesPerPixel = 277,
  kRowsPerStrip = 278,
  kStripByteCounts = 279,
  kPlanarConfig = 284,
  kPredictor = 317,
  kTileWidth = 322,
  kTileLength = 323,
  kTileOffsets = 324,
  kTileByteCounts = 325,
};

enum FieldType : std::uint16_t {
  kByte = 1,
  kAscii = 2,
  kShort = 3,
  kLong = 4,
  kRational = 5,
  kLong8 = 16,
  kIfd8 = 18,
};

std::size_t TypeSize(std::uint16_t type) {
  switch (type) {
    case 1: case 2: case 6: case 7: return 1;
    case 3: case 8: return 2;
    case 4: case 9: case 11: case 13: return 4;
    case 5: case 10: case 12: case 16: case 17: case 18: return 8;
    default: return 0;
  }
}

constexpr std::uint16_t kAdobeDeflate = 32946;

/// Owns a POSIX descriptor; pread makes concurrent reads safe.
class File {
 public:
  explicit File(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_RDONLY);
    if (fd_ < 0) {
      throw Error(Errc::kIo, fmt::format("cannot open '{}'", path.string()));
    }
    const off_t end = ::lseek(fd_, 0, SEEK_END);
    size_ = end < 0 ? 0 : static_cast<std::uint64_t>(end);
  }
  ~File() {
    if (fd_ >= 0) ::close(fd_);
  }
  File(const File&) = delete;
  File& operator=(const File&) = delete;

  std::uint64_t size() const { return size_; }

  void ReadAt(std::uint64_t offset, void* dst, std::size_t n) const {
    if (offset > size_ || n > size_ - offset) {
      throw Error(Errc::kCorruptFile,
                  fmt::format("read of {} bytes at offset {} runs past end of "
                              "file ({} bytes)", n, offset, size_));
    }
    auto* out = static_cast<char*>(dst);
    std::size_t done = 0;
    while (done < n) {
      const ssize_t got = ::pread(fd_, out + done, n - done,
                                  static_cast<off_t>(offset + done));
      if (got <= 0) {
        throw Error(Errc::kIo, fmt::format("pread failed at offset {}",
                                           offset + done));
      }
      done += static_cast<std::size_t>(got);
    }
  }

 private:
  int fd_ = -1;
  std::uint64_t size_ = 0;
};

class ByteOrder {
 public:
  explicit ByteOrder(bool big) : big_(big) {}

  std::uint64_t Get(const unsigned char* p, std::size_t n) const {
    std::uint64_t v = 0;
    if (big_) {
      for (std::size_t i = 0; i < n; ++i) v = (v << 8) | p[i];
    } else {
      for (std::size_t i = n; i-- > 0;) v = (v << 8) | p[i];
    }
    return v;
  }

  void Put(unsigned char* p, std::uint64_t v, std::size_t n) const {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t shift = 8 * (big_ ? n - 1 - i : i);
      p[i] = static_cast<unsigned char>((v >> shift) & 0xff);
    }
  }

 private:
  bool big_;
};

struct Entry {
  std::uint16_t type = 0;
  std::uint64_t count = 0;
  std::vector<std::uint64_t> values;
};

std::map<std::uint16_t, Entry> ParseIfd(const File& file, const ByteOrder& bo,
                                        bool bigtiff, std::uint64_t offset) {
  const std::size_t count_size = bigtiff ? 8 : 2;
  const std::size_t entry_size = bigtiff ? 20 : 12;
  const std::size_t inline_size = bigtiff ? 8 : 4;

  unsigned char buf[8];
  file.ReadAt(offset, buf, count_size);
  const std::uint64_t n = bo.Get(buf, count_size);
  if (n == 0 || n > 4096) {
    throw Error(Errc::kCorruptFile, fmt::format("IFD claims {} entries", n));
  }
  std::vector<unsigned char> raw(n * entry_size);
  file.ReadAt(offset + count_size, raw.data(), raw.size());

  std::map<std::uint16_t, Entry> entries;
  for (std::uint64_t i = 0; i < n; ++i) {
    const unsigned char* e = raw.data() + i * entry_size;
    const auto tag = static_cast<std::uint16_t>(bo.Get(e, 2));
    Entry entry;
    entry.type = static_cast<std::uint16_t>(bo.Get(e + 2, 2));
    entry.count = bigtiff ? bo.Get(e + 4, 8) : bo.Get(e + 4, 4);
    const unsigned char* value_field = e + (bigtiff ? 12 : 8);
    const std::size_t elem = TypeSize(entry.type);
    const bool integral = entry.type == kByte || entry.type == kShort ||
                          entry.type == kLong || entry.type == kLong8 ||
                          entry.type == kIfd8;
    if (integral && elem != 0) {
      if (entry.count > (std::uint64_t{1} << 28)) {
        throw Error(Errc::kCorruptFile,
                    fmt::format("tag {} has {} values", tag, entry.count));
      }
      const std::size_t total = elem * entry.count;
      std::vector<unsigned char> data(total);
      if (total <= inline_size) {
        std::memcpy(data.data(), value_field, total);
      } else {
        const std::uint64_t where = bo.Get(value_field, inline_size);
        file.ReadAt(where, data.data(), total);
      }
      entry.values.resize(entry.count);
      for (std::uint64_t k = 0; k < entry.count; ++k) {
        entry.values[k] = bo.Get(data.data() + k * elem, elem);
      }
    }
    entries.emplace(tag, std::move(entry));
  }
  return entries;
}

std::uint64_t Scalar(const std::map<std::uint16_t, Entry>& entries,
                     std::uint16_t tag, std::optional<std::uint64_t> fallback) {
  auto it = entries.find(tag);
  if (it == entries.end() || it->second.values.empty()) {
    if (fallback) return *fallback;
    throw Error(Errc::kCorruptFile, fmt::format("missing TIFF tag {}", tag));
  }
  return it->second.values.front();
}

const std::vector<std::uint64_t>& Array(
    const std::map<std::uint16_t, Entry>& entries, std::uint16_t tag) {
  auto it = entries.find(tag);
  if (it == entries.end() || it->second.values.empty()) {
    throw Error(Errc::kCorruptFile, fmt::format("missing TIFF tag {}", tag));
  }
  return it->second.values;
}

TiffInfo ParseInfo(const File& file) {
  unsigned char header[16] = {};
  if (file.size() == 0) {
    throw Error(Errc::kCorruptFile, "TIFF file is empty");
  }
  if (file.size() < 8) {
    throw Error(Errc::kCorruptFile, "TIFF header truncated");
  }
  file.ReadAt(0, header, 8);
  TiffInfo info;
  if (header[0] == 'I' && header[1] == 'I') {
    info.big_endian = false;
  } else if (header[0] == 'M' && header[1] == 'M') {
    info.big_endian = true;
  } else {
    throw Error(Errc::kUnsupportedFormat, "not a TIFF byte-order mark");
  }
  const ByteOrder bo(info.big_endian);
  const std::uint64_t magic = bo.Get(header + 2, 2);
  std::uint64_t ifd_offset = 0;
  if (magic == 42) {
    ifd_offset = bo.Get(header + 4, 4);
  } else if (magic == 43) {
    info.bigtiff = true;
    file.ReadAt(0, header, 16);
    if (bo.Get(header + 4, 2) != 8) {
      throw Error(Errc::kUnsupportedFormat, "BigTIFF offset size is not 8");
    }
    ifd_offset = bo.Get(header + 8, 8);
  } else {
    throw Error(Errc::kUnsupportedFormat, "bad TIFF magic");
  }

  const auto entries = ParseIfd(file, bo, info.bigtiff, ifd_offset);
  info.width = static_cast<std::uint32_t>(Scalar(entries, kImageWidth, {}));
  info.height = static_cast<std::uint32_t>(Scalar(entries, kImageLength, {}));
  if (info.width == 0 || info.height == 0) {
    throw Error(Errc::kZeroDimensions, "TIFF has zero dimensions");
  }

  const std::uint64_t spp = Scalar(entries, kSamplesPerPixel, 1);
  if (spp != 3) {
    throw Error(Errc::kUnsupportedFormat,
                fmt::format("TIFF has {} samples per pixel, need 3", spp));
  }
  for (std::uint64_t bits : Array(entries, kBitsPerSample)) {
    if (bits != 8) {
      throw Error(Errc::kUnsupportedFormat,
                  fmt::format("TIFF has {} bits per sample, need 8", bits));
    }
  }
  if (Scalar(entries, kPhotometric, {}) != 2) {
    throw Error(Errc::kUnsupportedFormat, "TIFF photometric is not RGB");
  }
  if (Scalar(entries, kPlanarConfig, 1) != 1) {
    throw Error(Errc::kUnsupportedFormat, "planar TIFF layout not supported");
  }
  const std::uint64_t compression = Scalar(entries, kCompression, 1);
  if (compression == 1) {
    info.compression = TiffCompression::kNone;
  } else if (compression == 8 || compression == kAdobeDeflate) {
    info.compression = TiffCompression::kDeflate;
  } else {
    throw Error(Errc::kUnsupportedFormat,
                fmt::format("TIFF compression {} not supported", compression));
  }
  info.predictor = static_cast<std::uint16_t>(Scalar(entries, kPredictor, 1));
  if (info.predictor != 1 && info.predictor != 2) {
    throw Error(Errc::kUnsupportedFormat,
                fmt::format("TIFF predictor {} not supported", info.predictor));
  }

  info.tiled = entries.contains(kTileWidth);
  std::size_t expected_chunks = 0;
  if (info.tiled) {
    info.tile_width = static_cast<std::uint32_t>(Scalar(entries, kTileWidth, {}));
    info.tile_height =
        static_cast<std::uint32_t>(Scalar(entries, kTileLength, {}));
    if (info.tile_width == 0 || info.tile_height == 0) {
      throw Error(Errc::kCorruptFile, "TIFF tile size is zero");
    }
    info.chunk_offsets = Array(entries, kTileOffsets);
    info.chunk_byte_counts = Array(entries, kTileByteCounts);
    const std::size_t across = (info.width + info.tile_width - 1) / info.tile_width;
    const std::size_t down = (info.height + info.tile_height - 1) / info.tile_height;
    expected_chunks = across * down;
  } else {
    info.rows_per_strip = static_cast<std::uint32_t>(
        std::min<std::uint64_t>(Scalar(entries, kRowsPerStrip, info.height),
                                info.height));
    if (info.rows_per_strip == 0) {
      throw Error(Errc::kCorruptFile, "TIFF rows per strip is zero");
    }
    info.chunk_offsets = Array(entries, kStripOffsets);
    info.chunk_byte_counts = Array(entries, kStripByteCounts);
    expected_chunks = (info.height + info.rows_per_strip - 1) / info.rows_per_strip;
  }
  if (info.chunk_offsets.size() < expected_chunks ||
      info.chunk_byte_counts.size() < expected_chunks) {
    throw Error(Errc::kCorruptFile,
                fmt::format("TIFF lists {} chunks, layout needs {}",
                            info.chunk_offsets.size(), expected_chunks));
  }
  for (std::size_t i = 0; i < expected_chunks; ++i) {
    const std::uint64_t off = info.chunk_offsets[i];
    const std::uint64_t len = info.chunk_byte_counts[i];
    if (off > file.size() || len > file.size() - off) {
      throw Error(Errc::kCorruptFile,
                  fmt::format("TIFF chunk {} extends past end of file", i));
    }
  }
  info.chunk_offsets.resize(expected_chunks);
  info.chunk_byte_counts.resize(expected_chunks);
  return info;
}

void UndoHorizontalPredictor(std::uint8_t* data, std::size_t row_pixels,
                             std::size_t rows) {
  const std::size_t stride = row_pixels * 3;
  for (std::size_t r = 0; r < rows; ++r) {
    std::uint8_t* row = data + r * stride;
    for (std::size_t i = 3; i < stride; ++i) {
      row[i] = static_cast<std::uint8_t>(row[i] + row[i - 3]);
    }
  }
}

void ApplyHorizontalPredictor(std::uint8_t* data, std::size_t row_pixels,
                              std::size_t rows) {
  const std::size_t stride = row_pixels * 3;
  for (std::size_t r = 0; r < rows; ++r) {
    std::uint8_t* row = data + r * stride;
    for (std::size_t i = stride; i-- > 3;) {
      row[i] = static_cast<std::uint8_t>(row[i] - row[i - 3]);
    }
  }
}

class TiffSource final : public RegionSource {
 public:
  TiffSource(const std::filesystem::path& path, std::size_t cache_bytes)
      : file_(path), path_(path), cache_bytes_(cache_bytes) {
    info_ = ParseInfo(file_);
  }

  int width() const override { return static_cast<int>(info_.width); }
  int height() const override { return static_cast<int>(info_.height); }

  void Read(int x, int y, int w, int h,
            std::span<std::uint8_t> out) const override {
    const std::size_t out_row = static_cast<std::size_t>(w) * 3;
    if (info_.tiled) {
      const int tw = static_cast<int>(info_.tile_width);
      const int th = static_cast<int>(info_.tile_height);
      const int across = (width() + tw - 1) / tw;
      for (int ty = y / th; ty <= (y + h - 1) / th; ++ty) {
        for (int tx = x / tw; tx <= (x + w - 1) / tw; ++tx) {
          const auto chunk = Chunk(static_cast<std::size_t>(ty) * across + tx);
          const int x0 = std::max(x, tx * tw);
          const int x1 = std::min(x + w, (tx + 1) * tw);
          const int y0 = std::max(y, ty * th);
          const int y1 = std::min(y + h, (ty + 1) * th);
          const std::size_t span_bytes = static_cast<std::size_t>(x1 - x0) * 3;
          for (int row = y0; row < y1; ++row) {
            const std::uint8_t* src =
                chunk->data() +
                (static_cast<std::size_t>(row - ty * th) * tw + (x0 - tx * tw)) * 3;
            std::memcpy(out.data() + (row - y) * out_row +
                            static_cast<std::size_t>(x0 - x) * 3,
                        src, span_bytes);
          }
        }
      }
      return;
    }
    const int rps = static_cast<int>(info_.rows_per_strip);
    for (int s = y / rps; s <= (y + h - 1) / rps; ++s) {
      const auto chunk = Chunk(static_cast<std::size_t>(s));
      const int y0 = std::max(y, s * rps);
      const int y1 = std::min(y + h, (s + 1) * rps);
      for (int row = y0; row < y1; ++row) {
        const std::uint8_t* src =
            chunk->data() +
            (static_cast<std::size_t>(row - s * rps) * info_.width + x) * 3;
        std::memcpy(out.data() + (row - y) * out_row, src, out_row);
      }
    }
  }

 private:
  using Buffer = std::shared_ptr<const std::vector<std::uint8_t>>;

  std::size_t ChunkPixels(std::size_t index, std::size_t* row_pixels,
                          std::size_t* rows) const {
    if (info_.tiled) {
      *row_pixels = info_.tile_width;
      *rows = info_.tile_height;
    } else {
      *row_pixels = info_.width;
      const std::size_t first = index * info_.rows_per_strip;
      *rows = std::min<std::size_t>(info_.rows_per_strip, info_.height - first);
    }
    return *row_pixels * *rows;
  }

  Buffer Chunk(std::size_t index) const {
    {
      std::lock_guard lock(mutex_);
      auto it = cache_.find(index);
      if (it != cache_.end()) {
        lru_.splice(lru_.begin(), lru_, it->second.second);
        return it->second.first;
      }
    }
    Buffer decoded = Decode(index);
    std::lock_guard lock(mutex_);
    auto it = cache_.find(index);
    if (it != cache_.end()) return it->second.first;
    lru_.push_front(index);
    cache_.emplace(index, std::make_pair(decoded, lru_.begin()));
    cached_bytes_ += decoded->size();
    while (cached_bytes_ > cache_bytes_ && lru_.size() > 1) {
      const std::size_t victim = lru_.back();
      lru_.pop_back();
      auto v = cache_.find(victim);
      cached_bytes_ -= v->second.first->size();
      cache_.erase(v);
    }
    return decoded;
  }

  Buffer Decode(std::size_t index) const {
    std::size_t row_pixels = 0;
    std::size_t rows = 0;
    const std::size_t pixels = ChunkPixels(index, &row_pixels, &rows);
    const std::size_t want = pixels * 3;
    std::vector<std::uint8_t> raw(info_.chunk_byte_counts[index]);
    file_.ReadAt(info_.chunk_offsets[index], raw.data(), raw.size());
    auto out = std::make_shared<std::vector<std::uint8_t>>(want, 0);
    if (info_.compression == TiffCompression::kNone) {
      if (raw.size() < want) {
        throw Error(Errc::kCorruptFile,
                    fmt::format("TIFF chunk {} in '{}' holds {} bytes, needs {}",
                                index, path_.string(), raw.size(), want));
      }
      std::memcpy(out->data(), raw.data(), want);
    } else {
      uLongf out_len = static_cast<uLongf>(want);
      const int rc = ::uncompress(out->data(), &out_len, raw.data(),
                                  static_cast<uLong>(raw.size()));
      if (rc != Z_OK || out_len != want) {
        throw Error(Errc::kCorruptFile,
                    fmt::format("Deflate chunk {} in '{}' failed to decode "
                                "(zlib {}, {} of {} bytes)",
                                index, path_.string(), rc, out_len, want));
      }
    }
    if (info_.predictor == 2) {
      UndoHorizontalPredictor(out->data(), row_pixels, rows);
    }
    return out;
  }

  File file_;
  std::filesystem::path path_;
  TiffInfo info_;
  std::size_t cache_bytes_;
  mutable std::mutex mutex_;
  mutable std::list<std::size_t> lru_;
  mutable std::unordered_map<std::size_t,
                             std::pair<Buffer, std::list<std::size_t>::iterator>>
      cache_;
  mutable std::size_t cached_bytes_ = 0;
};

struct OutEntry {
  std::uint16_t tag;
  std::uint16_t type;
  std::vector<std::uint64_t> values;
};

}  // namespace

TiffInfo ReadTiffInfo(const std::filesystem::path& path) {
  File file(path);
  return ParseInfo(file);
}

std::shared_ptr<const RegionSource> OpenTiffSource(
    const std::filesystem::path& path, std::size_t cache_bytes) {
  return std::make_shared<TiffSource>(path, cache_bytes);
}

void WriteTiff(const std::filesystem::path& path, const RgbImage& image,
               const TiffWriteOptions& options) {
  if (image.width < 1 || image.height < 1) {
    throw Error(Errc::kZeroDimensions, "cannot write an empty TIFF");
  }
  if (options.tiled && (options.tile_width % 16 != 0 ||
                        options.tile_height % 16 != 0 ||
                        options.tile_width == 0 || options.tile_height == 0)) {
    throw Error(Errc::kInvalidArgument,
                "TIFF tile dimensions must be positive multiples of 16");
  }
  if (!options.tiled && options.rows_per_strip == 0) {
    throw Error(Errc::kInvalidArgument, "rows_per_strip must be positive");
  }
  const auto width = static_cast<std::uint32_t>(image.width);
  const auto height = static_cast<std::uint32_t>(image.height);

  // Serialize chunks.
  std::vector<std::vector<std::uint8_t>> chunks;
  auto emit = [&](std::vector<std::uint8_t> raw, std::size_t row_pixels,
                  std::size_t rows) {
    if (options.compression == TiffCompression::kDeflate) {
      if (options.predictor == 2) {
        ApplyHorizontalPredictor(raw.data(), row_pixels, rows);
      }
      uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
      std::vector<std::uint8_t> packed(bound);
      if (::compress2(packed.data(), &bound, raw.data(),
                      static_cast<uLong>(raw.size()), 6) != Z_OK) {
        throw Error(Errc::kIo, "zlib compression failed");
      }
      packed.resize(bound);
      chunks.push_back(std::move(packed));
    } else {
      chunks.push_back(std::move(raw));
    }
  };
  if (options.tiled) {
    const std::uint32_t tw = options.tile_width;
    const std::uint32_t th = options.tile_height;
    for (std::uint32_t ty = 0; ty < height; ty += th) {
      for (std::uint32_t tx = 0; tx < width; tx += tw) {
        std::vector<std::uint8_t> raw(static_cast<std::size_t>(tw) * th * 3, 0);
        const std::uint32_t cw = std::min(tw, width - tx);
        const std::uint32_t ch = std::min(th, height - ty);
        for (std::uint32_t r = 0; r < ch; ++r) {
          std::memcpy(raw.data() + static_cast<std::size_t>(r) * tw * 3,
                      image.at(static_cast<int>(tx), static_cast<int>(ty + r)),
                      static_cast<std::size_t>(cw) * 3);
        }
        emit(std::move(raw), tw, th);
      }
    }
  } else {
    const std::uint32_t rps = std::min(options.rows_per_strip, height);
    for (std::uint32_t y0 = 0; y0 < height; y0 += rps) {
      const std::uint32_t rows = std::min(rps, height - y0);
      const std::uint8_t* begin = image.at(0, static_cast<int>(y0));
      std::vector<std::uint8_t> raw(
          begin, begin + static_cast<std::size_t>(rows) * width * 3);
      emit(std::move(raw), width, rows);
    }
  }

  const bool big = options.bigtiff;
  const ByteOrder bo(options.big_endian);
  const std::size_t header_size = big ? 16 : 8;

  std::vector<std::uint64_t> offsets;
  std::vector<std::uint64_t> counts;
  std::uint64_t cursor = header_size;
  for (const auto& c : chunks) {
    offsets.push_back(cursor);
    counts.push_back(c.size());
    cursor += c.size();
  }
  if (cursor % 2 != 0) ++cursor;  // IFD on a word boundary
  const std::uint64_t ifd_offset = cursor;
  if (!big && ifd_offset > 0xffff0000ULL) {
    throw Error(Errc::kInvalidArgument, "image too large for classic TIFF");
  }
  const std::uint16_t offset_type = big ? kLong8 : kLong;

  std::vector<OutEntry> entries = {
      {kImageWidth, kLong, {width}},
      {kImageLength, kLong, {height}},
      {kBitsPerSample, kShort, {8, 8, 8}},
      {kCompression, kShort,
       {options.compression == TiffCompression::kDeflate ? 8u : 1u}},
      {kPhotometric, kShort, {2}},
      {kSamplesPerPixel, kShort, {3}},
      {kPlanarConfig, kShort, {1}},
  };
  if (options.compression == TiffCompression::kDeflate && options.predictor == 2) {
    entries.push_back({kPredictor, kShort, {2}});
  }
  if (options.tiled) {
    entries.push_back({kTileWidth, kLong, {options.tile_width}});
    entries.push_back({kTileLength, kLong, {options.tile_height}});
    entries.push_back({kTileOffsets, offset_type, offsets});
    entries.push_back({kTileByteCounts, offset_type, counts});
  } else {
    entries.push_back({kStripOffsets, offset_type, offsets});
    entries.push_back({kRowsPerStrip, kLong,
                       {std::min(options.rows_per_strip, height)}});
    entries.push_back({kStripByteCounts, offset_type, counts});
  }
  std::sort(entries.begin(), entries.end(),
            [](const OutEntry& a, const OutEntry& b) { return a.tag < b.tag; });

  const std::size_t count_size = big ? 8 : 2;
  const std::size_t entry_size = big ? 20 : 12;
  const std::size_t inline_size = big ? 8 : 4;
  const std::size_t next_size = big ? 8 : 4;
  std::vector<unsigned char> ifd(count_size + entries.size() * entry_size +
                                 next_size, 0);
  std::vector<unsigned char> overflow;
  const std::uint64_t overflow_base = ifd_offset + ifd.size();
  bo.Put(ifd.data(), entries.size(), count_size);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const OutEntry& e = entries[i];
    unsigned char* p = ifd.data() + count_size + i * entry_size;
    bo.Put(p, e.tag, 2);
    bo.Put(p + 2, e.type, 2);
    bo.Put(p + 4, e.values.size(), big ? 8 : 4);
    unsigned char* value_field = p + (big ? 12 : 8);
    const std::size_t elem = TypeSize(e.type);
    const std::size_t total = elem * e.values.size();
    std::vector<unsigned char> data(total);
    for (std::size_t k = 0; k < e.values.size(); ++k) {
      bo.Put(data.data() + k * elem, e.values[k], elem);
    }
    if (total <= inline_size) {
      std::memcpy(value_field, data.data(), total);
    } else {
      if (overflow.size() % 2 != 0) overflow.push_back(0);
      bo.Put(value_field, overflow_base + overflow.size(), inline_size);
      overflow.insert(overflow.end(), data.begin(), data.end());
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(Errc::kIo, fmt::format("cannot create '{}'", path.string()));
  }
  unsigned char header[16] = {};
  header[0] = header[1] = options.big_endian ? 'M' : 'I';
  bo.Put(header + 2, big ? 43 : 42, 2);
  if (big) {
    bo.Put(header + 4, 8, 2);
    bo.Put(header + 6, 0, 2);
    bo.Put(header + 8, ifd_offset, 8);
  } else {
    bo.Put(header + 4, ifd_offset, 4);
  }
  out.write(reinterpret_cast<const char*>(header),
            static_cast<std::streamsize>(header_size));
  std::uint64_t written = header_size;
  for (const auto& c : chunks) {
    out.write(reinterpret_cast<const char*>(c.data()),
              static_cast<std::streamsize>(c.size()));
    written += c.size();
  }
  while (written < ifd_offset) {
    out.put(0);
    ++written;
  }
  out.write(reinterpret_cast<const char*>(ifd.data()),
            static_cast<std::streamsize>(ifd.size()));
  out.write(reinterpret_cast<const char*>(overflow.data()),
            static_cast<std::streamsize>(overflow.size()));
  if (!out) {
    throw Error(Errc::kIo, fmt::format("write to '{}' failed", path.string()));
  }
}

}  // namespace clotpath

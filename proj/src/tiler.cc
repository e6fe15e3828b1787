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

#include "clotpath/tiler.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "clotpath/error.h"
#include "clotpath/parallel.h"

namespace clotpath {

using nlohmann::json;

std::string_view EdgePolicyName(EdgePolicy policy) {
  return policy == EdgePolicy::kDrop ? "drop" : "pad";
}

EdgePolicy ParseEdgePolicy(std::string_view name) {
  if (name == "drop") return EdgePolicy::kDrop;
  if (name == "pad") return EdgePolicy::kPad;
  throw Error(Errc::kInvalidArgument,
              fmt::format("unknown edge policy '{}' (drop|pad)", name));
}

std::string TileSpec::identity() const {
  return fmt::format("{}_x{}_y{}", slide_id, x, y);
}

std::string_view DiscardReasonName(DiscardReason reason) {
  switch (reason) {
    case DiscardReason::kNone: return "none";
    case DiscardReason::kLowContent: return "low_content";
    case DiscardReason::kBackground: return "background";
    case DiscardReason::kPartialEdge: return "partial_edge";
  }
  return "none";
}

DiscardReason ParseDiscardReason(std::string_view name) {
  if (name == "none") return DiscardReason::kNone;
  if (name == "low_content") return DiscardReason::kLowContent;
  if (name == "background") return DiscardReason::kBackground;
  if (name == "partial_edge") return DiscardReason::kPartialEdge;
  throw Error(Errc::kMalformed, fmt::format("unknown discard reason '{}'", name));
}

std::vector<TileSpec> PlanTiles(const SlideImage& slide, int tile_size,
                                int stride, EdgePolicy edge_policy) {
  if (tile_size < 1 || stride < 1) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("tile size {} and stride {} must be positive",
                            tile_size, stride));
  }
  const int w = slide.width();
  const int h = slide.height();
  // Origins along one axis.
  auto origins = [&](int extent) {
    std::vector<int> out;
    if (edge_policy == EdgePolicy::kDrop) {
      for (long long o = 0; o + tile_size <= extent; o += stride) {
        out.push_back(static_cast<int>(o));
      }
    } else {
      for (long long o = 0; o < extent; o += stride) {
        out.push_back(static_cast<int>(o));
        if (o + tile_size >= extent) break;
      }
    }
    return out;
  };
  const std::vector<int> xs = origins(w);
  const std::vector<int> ys = origins(h);
  std::vector<TileSpec> specs;
  specs.reserve(xs.size() * ys.size());
  for (int y : ys) {
    for (int x : xs) {
      TileSpec spec;
      spec.slide_id = slide.slide_id();
      spec.x = x;
      spec.y = y;
      spec.width = tile_size;
      spec.height = tile_size;
      spec.padded = x + tile_size > w || y + tile_size > h;
      specs.push_back(std::move(spec));
    }
  }
  return specs;
}

RgbImage ExtractTile(const SlideImage& slide, const TileSpec& spec,
                     Rgb pad_fill) {
  if (!spec.padded) return slide.ReadImage(spec.x, spec.y, spec.width, spec.height);
  RgbImage tile(spec.width, spec.height, pad_fill);
  const int in_w = std::max(0, std::min(spec.width, slide.width() - spec.x));
  const int in_h = std::max(0, std::min(spec.height, slide.height() - spec.y));
  if (in_w == 0 || in_h == 0) return tile;
  const std::vector<std::uint8_t> inner =
      slide.ReadRegion(spec.x, spec.y, in_w, in_h);
  const std::size_t row = static_cast<std::size_t>(in_w) * 3;
  for (int r = 0; r < in_h; ++r) {
    std::memcpy(tile.at(0, r), inner.data() + r * row, row);
  }
  return tile;
}

void ExtractTiles(const SlideImage& slide, std::span<const TileSpec> specs,
                  const ExtractOptions& options,
                  const std::function<void(const TileSpec&, RgbImage)>& sink) {
  ParallelMapOrdered<RgbImage>(
      specs.size(), options.workers,
      [&](std::size_t i) {
        try {
          return ExtractTile(slide, specs[i], options.pad_fill);
        } catch (const Error& e) {
          throw Error(e.code(), fmt::format("tile {}: {}", specs[i].identity(),
                                            e.what()));
        }
      },
      [&](std::size_t i, RgbImage tile) { sink(specs[i], std::move(tile)); });
}

namespace {

template <typename T>
nlohmann::ordered_json OptionalToJson(const std::optional<T>& value) {
  return value ? nlohmann::ordered_json(*value) : nlohmann::ordered_json(nullptr);
}

template <typename T>
std::optional<T> OptionalFromJson(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

nlohmann::ordered_json TileRecordToJson(const TileRecord& r) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["slide_id"] = r.spec.slide_id;
  j["x"] = r.spec.x;
  j["y"] = r.spec.y;
  j["width"] = r.spec.width;
  j["height"] = r.spec.height;
  j["padded"] = r.spec.padded;
  j["content_ratio"] = OptionalToJson(r.content_ratio);
  j["stage1_prob_cellular"] = OptionalToJson(r.stage1_prob_cellular);
  j["kept"] = r.kept;
  j["discard_reason"] = std::string(DiscardReasonName(r.discard_reason));
  j["patch_path"] = OptionalToJson(r.patch_path);
  j["label"] = OptionalToJson(r.label);
  return j;
}

TileRecord TileRecordFromJson(const json& j) {
  try {
    TileRecord r;
    r.spec.slide_id = j.at("slide_id").get<std::string>();
    r.spec.x = j.at("x").get<int>();
    r.spec.y = j.at("y").get<int>();
    r.spec.width = j.at("width").get<int>();
    r.spec.height = j.at("height").get<int>();
    r.spec.padded = j.value("padded", false);
    r.content_ratio = OptionalFromJson<double>(j, "content_ratio");
    r.stage1_prob_cellular = OptionalFromJson<double>(j, "stage1_prob_cellular");
    r.kept = j.at("kept").get<bool>();
    r.discard_reason =
        ParseDiscardReason(j.value("discard_reason", std::string("none")));
    r.patch_path = OptionalFromJson<std::string>(j, "patch_path");
    r.label = OptionalFromJson<std::string>(j, "label");
    if (r.kept && r.discard_reason != DiscardReason::kNone) {
      throw Error(Errc::kMalformed, "kept tile carries a discard reason");
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::kMalformed, fmt::format("bad tile record: {}", e.what()));
  }
}

std::string TileRecordToLine(const TileRecord& record) {
  return TileRecordToJson(record).dump();
}

void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(Errc::kIo, fmt::format("cannot create '{}'", tmp.string()));
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
      throw Error(Errc::kIo, fmt::format("write to '{}' failed", tmp.string()));
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(Errc::kIo, fmt::format("rename to '{}' failed: {}",
                                       path.string(), ec.message()));
  }
}

void WriteManifest(const std::filesystem::path& path,
                   std::span<const TileRecord> records) {
  std::string body;
  for (const TileRecord& r : records) {
    body += TileRecordToLine(r);
    body += '\n';
  }
  WriteFileAtomic(path, body);
}

std::vector<TileRecord> ReadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::kMissing,
                fmt::format("manifest '{}' not found", path.string()));
  }
  std::vector<TileRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(TileRecordFromJson(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(Errc::kMalformed, fmt::format("{}:{}: {}", path.string(),
                                                line_no, e.what()));
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("{}:{}: {}", path.string(), line_no,
                                        e.what()));
    }
  }
  return records;
}

void SortRecords(std::vector<TileRecord>& records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const TileRecord& a, const TileRecord& b) {
                     return std::tie(a.spec.slide_id, a.spec.y, a.spec.x) <
                            std::tie(b.spec.slide_id, b.spec.y, b.spec.x);
                   });
}

}  // namespace clotpath

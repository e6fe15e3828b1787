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

#include "clotpath/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "clotpath/error.h"
#include "clotpath/png_io.h"
#include "clotpath/seed.h"

namespace clotpath {

std::string_view ClotClassName(ClotClass c) {
  return c == ClotClass::kCE ? "CE" : "LAA";
}

ClotClass ParseClotClass(std::string_view name) {
  if (name == "CE") return ClotClass::kCE;
  if (name == "LAA") return ClotClass::kLAA;
  throw Error(Errc::kInvalidArgument,
              fmt::format("unknown clot class '{}' (expected CE or LAA)", name));
}

TextureParams DefaultTexture(ClotClass c) {
  TextureParams t;
  if (c == ClotClass::kCE) {
    t.mean_color = {180, 60, 80};
    t.color_stddev = 10.0;
    t.streak_density = 0.0;
  } else {
    t.mean_color = {130, 100, 150};
    t.color_stddev = 14.0;
    t.streak_density = 0.30;
  }
  return t;
}

namespace {

double Uniform(std::mt19937_64& rng) { return UnitInterval(rng()); }

void Validate(const SyntheticSlideConfig& c) {
  if (c.width_px < 1 || c.height_px < 1) {
    throw Error(Errc::kZeroDimensions,
                fmt::format("synthetic slide '{}' has zero dimensions",
                            c.slide_id));
  }
  if (c.blob_count < 0) {
    throw Error(Errc::kInvalidArgument, "blob_count must be nonnegative");
  }
  if (c.blob_count == 0) return;
  if (c.blob_radius_min_px < 1 || c.blob_radius_min_px > c.blob_radius_max_px) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("blob radius range [{}, {}] is invalid",
                            c.blob_radius_min_px, c.blob_radius_max_px));
  }
  if (2LL * c.blob_radius_max_px > std::min(c.width_px, c.height_px)) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("blob radius {} does not fit a {}x{} slide",
                            c.blob_radius_max_px, c.width_px, c.height_px));
  }
  const auto& t = c.texture();
  if (t.streak_density < 0.0 || t.streak_density > 1.0 ||
      t.color_stddev < 0.0 || t.streak_period_px < 1) {
    throw Error(Errc::kInvalidArgument, "texture parameters out of range");
  }
}

/// Standard normal from two hashed counters (Box-Muller).
double HashedNormal(std::uint64_t key) {
  const std::uint64_t a = SplitMix64(key);
  const std::uint64_t b = SplitMix64(a ^ 0x5851f42d4c957f2dULL);
  const double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = UnitInterval(b);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint8_t ClampByte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

SyntheticRenderer::SyntheticRenderer(SyntheticSlideConfig config)
    : config_(std::move(config)) {
  Validate(config_);
  std::mt19937_64 rng(DeriveSeed(config_.seed, "blobs"));
  const int w = config_.width_px;
  const int h = config_.height_px;
  for (int b = 0; b < config_.blob_count; ++b) {
    Blob blob;
    const int span = config_.blob_radius_max_px - config_.blob_radius_min_px;
    blob.radius = config_.blob_radius_min_px +
                  static_cast<int>(Uniform(rng) * (span + 1));
    blob.radius = std::min(blob.radius, config_.blob_radius_max_px);
    blob.streak_angle_rad = Uniform(rng) * std::numbers::pi;
    blob.streak_phase = Uniform(rng);
    // Rejection sampling for a non-overlapping, fully interior placement;
    // falls back to the last candidate when the slide is crowded.
    for (int attempt = 0; attempt < 200; ++attempt) {
      blob.center_x = blob.radius +
          static_cast<int>(Uniform(rng) * (w - 2 * blob.radius + 1));
      blob.center_y = blob.radius +
          static_cast<int>(Uniform(rng) * (h - 2 * blob.radius + 1));
      blob.center_x = std::min(blob.center_x, w - blob.radius);
      blob.center_y = std::min(blob.center_y, h - blob.radius);
      const bool clear = std::all_of(
          blobs_.begin(), blobs_.end(), [&](const Blob& other) {
            const double dx = blob.center_x - other.center_x;
            const double dy = blob.center_y - other.center_y;
            return std::hypot(dx, dy) >= blob.radius + other.radius + 1;
          });
      if (clear) break;
    }
    blobs_.push_back(blob);
  }
}

double SyntheticRenderer::analytic_blob_area() const {
  double area = 0.0;
  for (const Blob& b : blobs_) {
    area += std::numbers::pi * b.radius * b.radius;
  }
  return area;
}

void SyntheticRenderer::RenderRows(int y0, int rows,
                                   std::span<std::uint8_t> rgb,
                                   std::span<std::uint8_t> mask) const {
  const int w = config_.width_px;
  const std::size_t need = static_cast<std::size_t>(w) * rows;
  if (rgb.size() != need * 3 || mask.size() != need) {
    throw Error(Errc::kShapeMismatch, "render buffers have the wrong size");
  }
  const Rgb bg = config_.background_color;
  const TextureParams& tex = config_.texture();
  const std::uint64_t noise_seed = DeriveSeed(config_.seed, "noise");

  for (int r = 0; r < rows; ++r) {
    const int y = y0 + r;
    std::uint8_t* out = rgb.data() + static_cast<std::size_t>(r) * w * 3;
    std::uint8_t* m = mask.data() + static_cast<std::size_t>(r) * w;
    for (int x = 0; x < w; ++x) {
      out[3 * x] = bg[0];
      out[3 * x + 1] = bg[1];
      out[3 * x + 2] = bg[2];
      m[x] = 0;
    }
    for (const Blob& blob : blobs_) {
      const long dy = y - blob.center_y;
      const long r2 = static_cast<long>(blob.radius) * blob.radius - dy * dy;
      if (r2 < 0) continue;
      const int half = static_cast<int>(std::floor(std::sqrt(static_cast<double>(r2))));
      const int x_begin = std::max(0, blob.center_x - half);
      const int x_end = std::min(w - 1, blob.center_x + half);
      const double cos_a = std::cos(blob.streak_angle_rad);
      const double sin_a = std::sin(blob.streak_angle_rad);
      for (int x = x_begin; x <= x_end; ++x) {
        if (m[x] != 0) continue;  // first blob wins
        double scale = 1.0;
        if (tex.streak_density > 0.0) {
          const double s = (x * cos_a + y * sin_a) / tex.streak_period_px +
                           blob.streak_phase;
          if (s - std::floor(s) < tex.streak_density) scale = tex.streak_darkness;
        }
        const std::uint64_t pixel_key =
            noise_seed ^ ((static_cast<std::uint64_t>(y) << 32) |
                          static_cast<std::uint32_t>(x));
        std::uint8_t* px = out + 3 * x;
        for (int c = 0; c < 3; ++c) {
          const double noise =
              tex.color_stddev * HashedNormal(SplitMix64(pixel_key + c));
          px[c] = ClampByte(tex.mean_color[c] * scale + noise);
        }
        if (px[0] == bg[0] && px[1] == bg[1] && px[2] == bg[2]) {
          px[0] = bg[0] == 0 ? 1 : static_cast<std::uint8_t>(bg[0] - 1);
        }
        m[x] = 255;
      }
    }
  }
}

SyntheticSlide GenerateSyntheticSlide(const SyntheticSlideConfig& config) {
  SyntheticRenderer renderer(config);
  RgbImage image(config.width_px, config.height_px);
  GrayImage mask(config.width_px, config.height_px);
  renderer.RenderRows(0, config.height_px, image.pixels, mask.pixels);
  return SyntheticSlide{SlideImage::FromImage(config.slide_id, std::move(image)),
                        std::move(mask), renderer.blobs()};
}

void WriteSyntheticSlidePng(const SyntheticSlideConfig& config,
                            const std::filesystem::path& slide_path,
                            const std::filesystem::path& mask_path,
                            int compression_level) {
  SyntheticRenderer renderer(config);
  const int w = config.width_px;
  const int h = config.height_px;
  constexpr int kBand = 64;
  PngRowWriter slide_out(slide_path, w, h, 3, compression_level);
  PngRowWriter mask_out(mask_path, w, h, 1, compression_level);
  std::vector<std::uint8_t> rgb;
  std::vector<std::uint8_t> mask;
  for (int y0 = 0; y0 < h; y0 += kBand) {
    const int rows = std::min(kBand, h - y0);
    rgb.resize(static_cast<std::size_t>(w) * rows * 3);
    mask.resize(static_cast<std::size_t>(w) * rows);
    renderer.RenderRows(y0, rows, rgb, mask);
    for (int r = 0; r < rows; ++r) {
      slide_out.WriteRow(std::span<const std::uint8_t>(
          rgb.data() + static_cast<std::size_t>(r) * w * 3,
          static_cast<std::size_t>(w) * 3));
      mask_out.WriteRow(std::span<const std::uint8_t>(
          mask.data() + static_cast<std::size_t>(r) * w,
          static_cast<std::size_t>(w)));
    }
  }
  slide_out.Finish();
  mask_out.Finish();
}

}  // namespace clotpath

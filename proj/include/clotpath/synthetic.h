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
#include <string>
#include <string_view>
#include <vector>

#include "clotpath/image.h"
#include "clotpath/slide_io.h"

namespace clotpath {

enum class ClotClass { kCE, kLAA };

std::string_view ClotClassName(ClotClass c);
/// Parses "CE" or "LAA"; throws kInvalidArgument otherwise.
ClotClass ParseClotClass(std::string_view name);

/// Texture inside a clot blob: Gaussian color noise around `mean_color`
/// plus dark parallel streaks covering `streak_density` of the blob area.
struct TextureParams {
  Rgb mean_color{0, 0, 0};
  double color_stddev = 0.0;
  double streak_density = 0.0;
  int streak_period_px = 24;
  double streak_darkness = 0.35;  // streak color = mean * darkness
};

/// Defaults differ in every channel by at least 40 levels, in saturation,
/// and in streak density.
TextureParams DefaultTexture(ClotClass c);

struct SyntheticSlideConfig {
  std::string slide_id = "synthetic";
  int width_px = 2400;
  int height_px = 2400;
  ClotClass class_label = ClotClass::kCE;
  int blob_count = 3;
  int blob_radius_min_px = 300;
  int blob_radius_max_px = 600;
  Rgb background_color = kWhite;
  TextureParams ce_texture = DefaultTexture(ClotClass::kCE);
  TextureParams laa_texture = DefaultTexture(ClotClass::kLAA);
  std::uint64_t seed = 0;

  const TextureParams& texture() const {
    return class_label == ClotClass::kCE ? ce_texture : laa_texture;
  }
};

struct Blob {
  int center_x = 0;
  int center_y = 0;
  int radius = 0;
  double streak_angle_rad = 0.0;
  double streak_phase = 0.0;
};

/// Deterministic renderer: every pixel is a pure function of the config,
/// so bands can be rendered independently.
class SyntheticRenderer {
 public:
  explicit SyntheticRenderer(SyntheticSlideConfig config);

  const SyntheticSlideConfig& config() const { return config_; }
  const std::vector<Blob>& blobs() const { return blobs_; }
  double analytic_blob_area() const;

  /// Renders rows [y0, y0 + rows) into `rgb` (width*rows*3) and `mask`
  /// (width*rows, 0 or 255).
  void RenderRows(int y0, int rows, std::span<std::uint8_t> rgb,
                  std::span<std::uint8_t> mask) const;

 private:
  SyntheticSlideConfig config_;
  std::vector<Blob> blobs_;
};

struct SyntheticSlide {
  SlideImage slide;
  GrayImage mask;  // 255 = blob pixel
  std::vector<Blob> blobs;
};

/// Renders the whole slide in memory. Throws kInvalidArgument when a blob
/// cannot fit (2 * max radius larger than the smaller slide dimension).
SyntheticSlide GenerateSyntheticSlide(const SyntheticSlideConfig& config);

/// Streams the slide and its mask to PNG files band by band; memory stays
/// at O(width * band) regardless of slide size.
void WriteSyntheticSlidePng(const SyntheticSlideConfig& config,
                            const std::filesystem::path& slide_path,
                            const std::filesystem::path& mask_path,
                            int compression_level = 1);

}  // namespace clotpath

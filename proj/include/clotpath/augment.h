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

#include <array>
#include <cstdint>
#include <random>
#include <string_view>

#include "clotpath/image.h"

namespace clotpath {

struct AugmentationConfig {
  double apply_probability = 0.5;
  double sharpness_factor = 2.0;
  double brightness = 0.2;
  double hue = 0.5;
  double saturation = 0.5;
  double rotate_limit_deg = 90.0;
  int resize_to = 256;
  std::array<double, 3> normalize_mean{0.485, 0.456, 0.406};
  std::array<double, 3> normalize_std{0.229, 0.224, 0.225};
  std::uint64_t seed = 0;

  /// Throws kInvalidArgument when a field is out of range.
  void Validate() const;
};

// Geometric ops. All preserve the buffer shape.
RgbImage HFlip(const RgbImage& tile);
RgbImage VFlip(const RgbImage& tile);
/// Lossless counter-clockwise rotation by quarter_turns * 90 degrees.
/// Square tiles only for odd quarter turns.
RgbImage Rot90(const RgbImage& tile, int quarter_turns = 1);

/// Fixed smoothing kernel (1 1 1; 1 5 1; 1 1 1) / 13, rounded to integers;
/// the one-pixel border is copied unchanged.
RgbImage SharpnessBlur(const RgbImage& tile);
/// blur + factor * (tile - blur), clamped. factor 1 is the identity.
RgbImage AdjustSharpness(const RgbImage& tile, double factor);

/// Counter-clockwise rotation about the tile center with bilinear sampling;
/// samples outside the source take `fill`. Multiples of 90 degrees on
/// square tiles (and 0 / 180 on any tile) take the lossless path.
RgbImage Rotate(const RgbImage& tile, double angle_deg, Rgb fill = kWhite);

struct JitterFactors {
  double brightness = 1.0;   // RGB scale
  double saturation = 1.0;   // blend factor against luma
  double hue_shift = 0.0;    // fraction of the hue circle
};

/// Draws f_b ~ U[1-b, 1+b], f_s ~ U[max(0, 1-s), 1+s], hue ~ U[-h, h].
JitterFactors SampleJitter(double brightness, double saturation, double hue,
                           std::mt19937_64& rng);

/// Brightness, then saturation, then hue rotation in HSV; each step clamps
/// to [0, 255] and the result is rounded once at the end.
RgbImage ApplyColorJitter(const RgbImage& tile, const JitterFactors& factors);

inline RgbImage ColorJitter(const RgbImage& tile, double brightness,
                            double saturation, double hue,
                            std::mt19937_64& rng) {
  return ApplyColorJitter(tile, SampleJitter(brightness, saturation, hue, rng));
}

/// Bilinear resampling with half-pixel centers to to x to.
RgbImage Resize(const RgbImage& tile, int to);
RgbImage Resize(const RgbImage& tile, int to_width, int to_height);

/// (pixel / 255 - mean) / std per channel.
FloatTensor Normalize(const RgbImage& tile,
                      const std::array<double, 3>& mean,
                      const std::array<double, 3>& std);
RgbImage Denormalize(const FloatTensor& tensor,
                     const std::array<double, 3>& mean,
                     const std::array<double, 3>& std);

enum AugmentOp : unsigned {
  kOpHFlip = 1u << 0,
  kOpVFlip = 1u << 1,
  kOpSharpness = 1u << 2,
  kOpRotate = 1u << 3,
  kOpColorJitter = 1u << 4,
};
inline constexpr std::array<AugmentOp, 5> kStochasticOps{
    kOpHFlip, kOpVFlip, kOpSharpness, kOpRotate, kOpColorJitter};

struct AugmentResult {
  RgbImage image;      // resized, before normalization
  FloatTensor tensor;  // normalized
  unsigned fired = 0;  // AugmentOp bits applied
};

enum class AugmentMode { kTrain, kEval };

/// Training mode applies each stochastic op independently with
/// config.apply_probability, drawing from an RNG seeded by
/// (config.seed, tile_identity); both modes then resize and normalize.
AugmentResult AugmentPipeline(const RgbImage& tile,
                              const AugmentationConfig& config,
                              std::string_view tile_identity,
                              AugmentMode mode);

}  // namespace clotpath

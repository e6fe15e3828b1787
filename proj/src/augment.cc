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

#include "clotpath/augment.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <fmt/format.h>

#include "clotpath/error.h"
#include "clotpath/seed.h"

namespace clotpath {

void AugmentationConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(Errc::kInvalidArgument, "augmentation config: " + what);
  };
  if (!(apply_probability >= 0.0 && apply_probability <= 1.0)) {
    fail("apply_probability must lie in [0, 1]");
  }
  if (resize_to < 1) fail("resize_to must be positive");
  if (sharpness_factor < 0.0) fail("sharpness_factor must be nonnegative");
  if (brightness < 0.0 || saturation < 0.0) {
    fail("brightness and saturation must be nonnegative");
  }
  if (hue < 0.0 || hue > 0.5) fail("hue must lie in [0, 0.5]");
  if (rotate_limit_deg < 0.0) fail("rotate_limit_deg must be nonnegative");
  for (double s : normalize_std) {
    if (!(s > 0.0)) fail("normalize_std components must be positive");
  }
}

namespace {

std::uint8_t RoundByte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

RgbImage HFlip(const RgbImage& tile) {
  RgbImage out(tile.width, tile.height);
  for (int y = 0; y < tile.height; ++y) {
    for (int x = 0; x < tile.width; ++x) {
      std::copy_n(tile.at(tile.width - 1 - x, y), 3, out.at(x, y));
    }
  }
  return out;
}

RgbImage VFlip(const RgbImage& tile) {
  RgbImage out(tile.width, tile.height);
  const std::size_t row = static_cast<std::size_t>(tile.width) * 3;
  for (int y = 0; y < tile.height; ++y) {
    std::copy_n(tile.at(0, tile.height - 1 - y), row, out.at(0, y));
  }
  return out;
}

RgbImage Rot90(const RgbImage& tile, int quarter_turns) {
  const int k = ((quarter_turns % 4) + 4) % 4;
  if (k == 0) return tile;
  if (k == 2) return HFlip(VFlip(tile));
  if (tile.width != tile.height) {
    throw Error(Errc::kShapeMismatch, "quarter-turn rotation needs a square tile");
  }
  const int n = tile.width;
  RgbImage out(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      // Counter-clockwise: the top-right corner moves to the top-left.
      const int sx = k == 1 ? n - 1 - y : y;
      const int sy = k == 1 ? x : n - 1 - x;
      std::copy_n(tile.at(sx, sy), 3, out.at(x, y));
    }
  }
  return out;
}

RgbImage SharpnessBlur(const RgbImage& tile) {
  RgbImage out = tile;
  if (tile.width < 3 || tile.height < 3) return out;
  for (int y = 1; y < tile.height - 1; ++y) {
    for (int x = 1; x < tile.width - 1; ++x) {
      for (int c = 0; c < 3; ++c) {
        int sum = 4 * tile.at(x, y)[c];  // center weight 5 = 1 + 4
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) sum += tile.at(x + dx, y + dy)[c];
        }
        out.at(x, y)[c] = static_cast<std::uint8_t>((2 * sum + 13) / 26);
      }
    }
  }
  return out;
}

RgbImage AdjustSharpness(const RgbImage& tile, double factor) {
  if (factor < 0.0) {
    throw Error(Errc::kInvalidArgument, "sharpness factor must be nonnegative");
  }
  const RgbImage blur = SharpnessBlur(tile);
  RgbImage out(tile.width, tile.height);
  for (std::size_t i = 0; i < tile.pixels.size(); ++i) {
    const double b = blur.pixels[i];
    out.pixels[i] = RoundByte(b + factor * (tile.pixels[i] - b));
  }
  return out;
}

RgbImage Rotate(const RgbImage& tile, double angle_deg, Rgb fill) {
  const double turns = angle_deg / 90.0;
  const double nearest = std::round(turns);
  if (turns == nearest) {
    const int k = static_cast<int>(std::fmod(nearest, 4.0));
    if (tile.width == tile.height || k % 2 == 0) return Rot90(tile, k);
  }
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double cx = (tile.width - 1) / 2.0;
  const double cy = (tile.height - 1) / 2.0;
  RgbImage out(tile.width, tile.height, fill);
  auto sample = [&](int x, int y, int c) -> double {
    if (x < 0 || y < 0 || x >= tile.width || y >= tile.height) return fill[c];
    return tile.at(x, y)[c];
  };
  for (int y = 0; y < tile.height; ++y) {
    for (int x = 0; x < tile.width; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double sx = cx + cos_t * dx - sin_t * dy;
      const double sy = cy + sin_t * dx + cos_t * dy;
      if (sx <= -1.0 || sy <= -1.0 || sx >= tile.width || sy >= tile.height) {
        continue;
      }
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0;
      const double fy = sy - y0;
      for (int c = 0; c < 3; ++c) {
        const double top = sample(x0, y0, c) * (1 - fx) + sample(x0 + 1, y0, c) * fx;
        const double bottom =
            sample(x0, y0 + 1, c) * (1 - fx) + sample(x0 + 1, y0 + 1, c) * fx;
        out.at(x, y)[c] = RoundByte(top * (1 - fy) + bottom * fy);
      }
    }
  }
  return out;
}

JitterFactors SampleJitter(double brightness, double saturation, double hue,
                           std::mt19937_64& rng) {
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * UnitInterval(rng());
  };
  JitterFactors f;
  f.brightness = uniform(std::max(0.0, 1.0 - brightness), 1.0 + brightness);
  f.saturation = uniform(std::max(0.0, 1.0 - saturation), 1.0 + saturation);
  f.hue_shift = uniform(-hue, hue);
  return f;
}

namespace {

struct Hsv {
  double h;  // [0, 1)
  double s;
  double v;
};

Hsv ToHsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out{0.0, mx > 0.0 ? delta / mx : 0.0, mx};
  if (delta <= 0.0) return out;
  double h = 0.0;
  if (mx == r) {
    h = (g - b) / delta;
  } else if (mx == g) {
    h = 2.0 + (b - r) / delta;
  } else {
    h = 4.0 + (r - g) / delta;
  }
  h /= 6.0;
  out.h = h - std::floor(h);
  return out;
}

void FromHsv(const Hsv& hsv, double* rgb) {
  if (hsv.s <= 0.0) {
    rgb[0] = rgb[1] = rgb[2] = hsv.v;
    return;
  }
  const double h6 = (hsv.h - std::floor(hsv.h)) * 6.0;
  const int sector = static_cast<int>(std::floor(h6)) % 6;
  const double f = h6 - std::floor(h6);
  const double p = hsv.v * (1.0 - hsv.s);
  const double q = hsv.v * (1.0 - hsv.s * f);
  const double t = hsv.v * (1.0 - hsv.s * (1.0 - f));
  const double v = hsv.v;
  switch (sector) {
    case 0: rgb[0] = v; rgb[1] = t; rgb[2] = p; break;
    case 1: rgb[0] = q; rgb[1] = v; rgb[2] = p; break;
    case 2: rgb[0] = p; rgb[1] = v; rgb[2] = t; break;
    case 3: rgb[0] = p; rgb[1] = q; rgb[2] = v; break;
    case 4: rgb[0] = t; rgb[1] = p; rgb[2] = v; break;
    default: rgb[0] = v; rgb[1] = p; rgb[2] = q; break;
  }
}

}  // namespace

RgbImage ApplyColorJitter(const RgbImage& tile, const JitterFactors& f) {
  RgbImage out(tile.width, tile.height);
  const bool do_brightness = f.brightness != 1.0;
  const bool do_saturation = f.saturation != 1.0;
  const bool do_hue = f.hue_shift != 0.0;
  for (std::size_t i = 0; i < tile.pixel_count(); ++i) {
    double px[3] = {static_cast<double>(tile.pixels[3 * i]),
                    static_cast<double>(tile.pixels[3 * i + 1]),
                    static_cast<double>(tile.pixels[3 * i + 2])};
    if (do_brightness) {
      for (double& v : px) v = std::clamp(v * f.brightness, 0.0, 255.0);
    }
    if (do_saturation) {
      const double gray = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
      for (double& v : px) {
        v = std::clamp(gray + f.saturation * (v - gray), 0.0, 255.0);
      }
    }
    if (do_hue) {
      Hsv hsv = ToHsv(px[0], px[1], px[2]);
      hsv.h += f.hue_shift;
      FromHsv(hsv, px);
      for (double& v : px) v = std::clamp(v, 0.0, 255.0);
    }
    for (int c = 0; c < 3; ++c) out.pixels[3 * i + c] = RoundByte(px[c]);
  }
  return out;
}

RgbImage Resize(const RgbImage& tile, int to) { return Resize(tile, to, to); }

RgbImage Resize(const RgbImage& tile, int to_width, int to_height) {
  if (to_width < 1 || to_height < 1) {
    throw Error(Errc::kInvalidArgument, "resize target must be positive");
  }
  if (to_width == tile.width && to_height == tile.height) return tile;
  RgbImage out(to_width, to_height);
  const double scale_x = static_cast<double>(tile.width) / to_width;
  const double scale_y = static_cast<double>(tile.height) / to_height;
  // Precompute horizontal taps.
  std::vector<int> x0s(to_width);
  std::vector<double> fxs(to_width);
  for (int x = 0; x < to_width; ++x) {
    const double sx = std::clamp((x + 0.5) * scale_x - 0.5, 0.0,
                                 static_cast<double>(tile.width - 1));
    x0s[x] = std::min(static_cast<int>(sx), std::max(0, tile.width - 2));
    fxs[x] = sx - x0s[x];
  }
  for (int y = 0; y < to_height; ++y) {
    const double sy = std::clamp((y + 0.5) * scale_y - 0.5, 0.0,
                                 static_cast<double>(tile.height - 1));
    const int y0 = std::min(static_cast<int>(sy), std::max(0, tile.height - 2));
    const int y1 = std::min(y0 + 1, tile.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < to_width; ++x) {
      const int x0 = x0s[x];
      const int x1 = std::min(x0 + 1, tile.width - 1);
      const double fx = fxs[x];
      for (int c = 0; c < 3; ++c) {
        const double top = tile.at(x0, y0)[c] * (1 - fx) + tile.at(x1, y0)[c] * fx;
        const double bottom =
            tile.at(x0, y1)[c] * (1 - fx) + tile.at(x1, y1)[c] * fx;
        out.at(x, y)[c] = RoundByte(top * (1 - fy) + bottom * fy);
      }
    }
  }
  return out;
}

FloatTensor Normalize(const RgbImage& tile, const std::array<double, 3>& mean,
                      const std::array<double, 3>& std) {
  FloatTensor out;
  out.width = tile.width;
  out.height = tile.height;
  out.values.resize(tile.pixels.size());
  for (std::size_t i = 0; i < tile.pixels.size(); ++i) {
    const int c = static_cast<int>(i % 3);
    out.values[i] =
        static_cast<float>((tile.pixels[i] / 255.0 - mean[c]) / std[c]);
  }
  return out;
}

RgbImage Denormalize(const FloatTensor& tensor,
                     const std::array<double, 3>& mean,
                     const std::array<double, 3>& std) {
  RgbImage out(tensor.width, tensor.height);
  for (std::size_t i = 0; i < tensor.values.size(); ++i) {
    const int c = static_cast<int>(i % 3);
    out.pixels[i] = RoundByte((tensor.values[i] * std[c] + mean[c]) * 255.0);
  }
  return out;
}

AugmentResult AugmentPipeline(const RgbImage& tile,
                              const AugmentationConfig& config,
                              std::string_view tile_identity,
                              AugmentMode mode) {
  AugmentResult result;
  if (mode == AugmentMode::kTrain) {
    std::mt19937_64 rng(
        DeriveSeed(config.seed, std::string("augment/") + std::string(tile_identity)));
    // Firing decisions are drawn first so each op's Bernoulli draw does not
    // depend on which other ops fired.
    for (AugmentOp op : kStochasticOps) {
      if (UnitInterval(rng()) < config.apply_probability) result.fired |= op;
    }
    RgbImage work = tile;
    if (result.fired & kOpHFlip) work = HFlip(work);
    if (result.fired & kOpVFlip) work = VFlip(work);
    if (result.fired & kOpSharpness) {
      work = AdjustSharpness(work, config.sharpness_factor);
    }
    if (result.fired & kOpRotate) {
      const double angle = -config.rotate_limit_deg +
                           2.0 * config.rotate_limit_deg * UnitInterval(rng());
      work = Rotate(work, angle);
    }
    if (result.fired & kOpColorJitter) {
      work = ColorJitter(work, config.brightness, config.saturation, config.hue,
                         rng);
    }
    result.image = Resize(work, config.resize_to);
  } else {
    result.image = Resize(tile, config.resize_to);
  }
  result.tensor =
      Normalize(result.image, config.normalize_mean, config.normalize_std);
  return result;
}

}  // namespace clotpath

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

#include <map>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "clotpath/error.h"
#include "test_util.h"

namespace clotpath {
namespace {

using testing::RandomImage;
using testing::TempDir;

SlideImage Blank(int w, int h, Rgb fill = kWhite) {
  return SlideImage::FromImage("s", RgbImage(w, h, fill));
}

TEST(PlanTiles, ExactDivision) {
  EXPECT_EQ(PlanTiles(Blank(1800, 1200)).size(), 6u);
}

TEST(PlanTiles, RightMarginDropped) {
  const auto specs = PlanTiles(Blank(1900, 1200));
  ASSERT_EQ(specs.size(), 6u);
  for (const auto& s : specs) {
    EXPECT_LE(s.x + s.width, 1900);
    EXPECT_FALSE(s.padded);
  }
}

TEST(PlanTiles, PadAddsFlaggedColumn) {
  const auto specs = PlanTiles(Blank(1900, 1200), 600, 600, EdgePolicy::kPad);
  ASSERT_EQ(specs.size(), 8u);
  int padded = 0;
  for (const auto& s : specs) {
    EXPECT_EQ(s.padded, s.x == 1800) << s.identity();
    padded += s.padded;
  }
  EXPECT_EQ(padded, 2);
}

TEST(PlanTiles, OrderedByRowThenColumnOnStrideGrid) {
  const auto specs = PlanTiles(Blank(1000, 700), 200, 150, EdgePolicy::kDrop);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    EXPECT_EQ(specs[i].x % 150, 0);
    EXPECT_EQ(specs[i].y % 150, 0);
    EXPECT_EQ(specs[i].width, 200);
    if (i > 0) {
      const auto& p = specs[i - 1];
      EXPECT_TRUE(p.y < specs[i].y || (p.y == specs[i].y && p.x < specs[i].x));
    }
  }
}

TEST(PlanTiles, CountFormulaForDrop) {
  for (int w : {600, 601, 1199, 1200, 2500}) {
    for (int stride : {100, 300, 600, 700}) {
      const auto specs = PlanTiles(Blank(w, 900), 600, stride);
      const std::size_t want = static_cast<std::size_t>(((w - 600) / stride + 1) *
                                                        ((900 - 600) / stride + 1));
      EXPECT_EQ(specs.size(), want) << w << " " << stride;
    }
  }
}

TEST(PlanTiles, TileLargerThanSlideGivesEmptyPlan) {
  EXPECT_TRUE(PlanTiles(Blank(500, 500)).empty());
}

TEST(PlanTiles, InvalidSizesRejected) {
  EXPECT_THROW(PlanTiles(Blank(500, 500), 0), Error);
  EXPECT_THROW(PlanTiles(Blank(500, 500), 100, 0), Error);
}

TEST(ExtractTile, SingleSpecIsWholeImage) {
  const RgbImage img = RandomImage(600, 600, 1);
  const SlideImage slide = SlideImage::FromImage("s", img);
  const auto specs = PlanTiles(slide);
  ASSERT_EQ(specs.size(), 1u);
  EXPECT_EQ(ExtractTile(slide, specs[0]), img);
}

TEST(ExtractTile, PaddingUsesFill) {
  const SlideImage slide = Blank(700, 600, Rgb{0, 0, 0});
  const auto specs = PlanTiles(slide, 600, 600, EdgePolicy::kPad);
  ASSERT_EQ(specs.size(), 2u);
  const RgbImage tile = ExtractTile(slide, specs[1]);
  ASSERT_EQ(tile.width, 600);
  ASSERT_EQ(tile.height, 600);
  for (int y = 0; y < 600; y += 7) {
    for (int x = 0; x < 600; x += 3) {
      const std::uint8_t want = x < 100 ? 0 : 255;
      ASSERT_EQ(tile.at(x, y)[0], want) << x << "," << y;
      ASSERT_EQ(tile.at(x, y)[2], want);
    }
  }
  const RgbImage red = ExtractTile(slide, specs[1], Rgb{200, 0, 0});
  EXPECT_EQ(red.at(599, 599)[0], 200);
  EXPECT_EQ(red.at(599, 599)[1], 0);
}

std::map<TileSpec, RgbImage> Collect(const SlideImage& slide,
                                     const std::vector<TileSpec>& specs,
                                     int workers,
                                     std::vector<TileSpec>* order = nullptr) {
  std::map<TileSpec, RgbImage> out;
  ExtractTiles(slide, specs, ExtractOptions{kWhite, workers},
               [&](const TileSpec& s, RgbImage px) {
                 if (order) order->push_back(s);
                 out.emplace(s, std::move(px));
               });
  return out;
}

TEST(ExtractTiles, SerialAndParallelIdentical) {
  const SlideImage slide = SlideImage::FromImage("s", RandomImage(400, 400, 2));
  const auto specs = PlanTiles(slide, 50, 50);
  ASSERT_EQ(specs.size(), 64u);
  std::vector<TileSpec> order;
  const auto serial = Collect(slide, specs, 1);
  const auto parallel = Collect(slide, specs, 8, &order);
  EXPECT_EQ(serial, parallel);
  EXPECT_EQ(order, specs);
}

TEST(ExtractTiles, FailureNamesTile) {
  const SlideImage slide = Blank(100, 100);
  std::vector<TileSpec> specs = PlanTiles(slide, 50, 50);
  specs.push_back(TileSpec{"s", 90, 90, 50, 50, false});
  try {
    Collect(slide, specs, 2);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("s_x90_y90"), std::string::npos)
        << e.what();
  }
}

TEST(Coverage, PadCoversEveryPixel) {
  for (int stride : {37, 50}) {
    const SlideImage slide = Blank(173, 121);
    GrayImage hit(173, 121, 0);
    for (const auto& s : PlanTiles(slide, 50, stride, EdgePolicy::kPad)) {
      for (int y = s.y; y < std::min(121, s.y + s.height); ++y) {
        for (int x = s.x; x < std::min(173, s.x + s.width); ++x) hit.at(x, y) = 1;
      }
    }
    EXPECT_EQ(hit, GrayImage(173, 121, 1)) << stride;
  }
}

TEST(Coverage, InteriorTilesDisjointWhenStrideEqualsSize) {
  const SlideImage slide = Blank(330, 260);
  GrayImage hits(330, 260, 0);
  for (const auto& s : PlanTiles(slide, 40, 40)) {
    for (int y = s.y; y < s.y + s.height; ++y) {
      for (int x = s.x; x < s.x + s.width; ++x) {
        ASSERT_EQ(hits.at(x, y), 0);
        hits.at(x, y) = 1;
      }
    }
  }
}

TEST(Manifest, FieldNamesInOrder) {
  TileRecord r;
  r.spec = TileSpec{"slide", 600, 1200, 600, 600, false};
  r.content_ratio = 0.5;
  const auto j = TileRecordToJson(r);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{
                      "slide_id", "x", "y", "width", "height", "padded",
                      "content_ratio", "stage1_prob_cellular", "kept",
                      "discard_reason", "patch_path", "label"}));
  EXPECT_TRUE(j["stage1_prob_cellular"].is_null());
  EXPECT_EQ(j["discard_reason"], "none");
}

TEST(Manifest, RoundTrip) {
  TempDir dir;
  std::vector<TileRecord> records(3);
  records[0].spec = TileSpec{"a", 0, 0, 600, 600, false};
  records[0].content_ratio = 0.125;
  records[1].spec = TileSpec{"a", 600, 0, 600, 600, true};
  records[1].content_ratio = 0.1;
  records[1].kept = false;
  records[1].discard_reason = DiscardReason::kLowContent;
  records[1].patch_path = "tiles/a_x600_y0.png";
  records[2].spec = TileSpec{"b", 0, 600, 600, 600, false};
  records[2].content_ratio = 1.0 / 3.0;
  records[2].stage1_prob_cellular = 0.875;
  records[2].label = "CE";
  WriteManifest(dir / "m.jsonl", records);
  EXPECT_EQ(ReadManifest(dir / "m.jsonl"), records);
}

TEST(Manifest, KeptWithReasonIsMalformed) {
  EXPECT_THROW(TileRecordFromJson(nlohmann::json::parse(
                   R"({"slide_id":"a","x":0,"y":0,"width":1,"height":1,)"
                   R"("padded":false,"content_ratio":0.5,)"
                   R"("stage1_prob_cellular":null,"kept":true,)"
                   R"("discard_reason":"low_content","patch_path":null,"label":null})")),
               Error);
}

TEST(Manifest, SortRecordsBySlideThenRowThenColumn) {
  std::vector<TileRecord> r(4);
  r[0].spec = TileSpec{"b", 0, 0};
  r[1].spec = TileSpec{"a", 600, 600};
  r[2].spec = TileSpec{"a", 1200, 0};
  r[3].spec = TileSpec{"a", 0, 600};
  SortRecords(r);
  EXPECT_EQ(r[0].spec.identity(), "a_x1200_y0");
  EXPECT_EQ(r[1].spec.identity(), "a_x0_y600");
  EXPECT_EQ(r[2].spec.identity(), "a_x600_y600");
  EXPECT_EQ(r[3].spec.identity(), "b_x0_y0");
}

}  // namespace
}  // namespace clotpath

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

#include "clotpath/cli.h"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "clotpath/csv.h"
#include "clotpath/metrics.h"
#include "clotpath/tiler.h"
#include "test_util.h"

namespace clotpath {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

const fs::path kFixtures = CLOTPATH_FIXTURE_DIR;

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "clotpath");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> SmallSynth(const fs::path& out, int per_class,
                                    int radius_max = 200) {
  return {"synth", "--out", out.string(), "--slides", std::to_string(per_class),
          "--width", "600", "--height", "600", "--blobs", "1",
          "--blob-radius-min", "120", "--blob-radius-max",
          std::to_string(radius_max), "--seed", "5"};
}

nlohmann::json ReadJson(const fs::path& p) {
  return nlohmann::json::parse(ReadFileText(p));
}

TEST(Cli, HelpExitsZero) {
  const CliRun r = Cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("run-all"), std::string::npos);
  EXPECT_EQ(Cli({"tile", "--help"}).code, 0);
}

TEST(Cli, UnknownSubcommandFails) {
  EXPECT_NE(Cli({"frobnicate"}).code, 0);
  EXPECT_NE(Cli({}).code, 0);
}

TEST(Cli, SynthWritesSlidesLabelsAndConfig) {
  TempDir dir;
  const CliRun r = Cli(SmallSynth(dir / "s", 10));
  ASSERT_EQ(r.code, 0) << r.err;
  int slides = 0, masks = 0;
  for (const auto& e : fs::directory_iterator(dir / "s" / "slides")) {
    const std::string name = e.path().filename().string();
    (name.find("_mask") != std::string::npos ? masks : slides)++;
  }
  EXPECT_EQ(slides, 20);
  EXPECT_EQ(masks, 20);
  EXPECT_EQ(ReadSlideLabels(dir / "s" / "labels.csv").size(), 20u);
  EXPECT_TRUE(fs::exists(dir / "s" / "slides" / "CE_000.png"));
  EXPECT_TRUE(fs::exists(dir / "s" / "slides" / "LAA_009_mask.png"));
  EXPECT_EQ(ReadJson(dir / "s" / "config.json")["seed"], 5);
}

TEST(Cli, SynthRerunIsByteIdentical) {
  TempDir dir;
  ASSERT_EQ(Cli(SmallSynth(dir / "a", 2)).code, 0);
  ASSERT_EQ(Cli(SmallSynth(dir / "b", 2)).code, 0);
  for (const char* name : {"CE_000.png", "CE_001_mask.png", "LAA_001.png"}) {
    EXPECT_EQ(ReadFileText(dir / "a" / "slides" / name),
              ReadFileText(dir / "b" / "slides" / name))
        << name;
  }
}

TEST(Cli, SynthZeroSlides) {
  TempDir dir;
  const CliRun r = Cli(SmallSynth(dir / "s", 0));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(ReadSlideLabels(dir / "s" / "labels.csv").empty());
}

TEST(Cli, FailedSynthLeavesNoPartialOutput) {
  TempDir dir;
  const CliRun r = Cli(SmallSynth(dir / "s", 2, 400));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "s"));
}

TEST(Cli, FailedTileRemovesPatches) {
  TempDir dir;
  ASSERT_EQ(Cli(SmallSynth(dir / "s", 1)).code, 0);
  // A zero-byte file that sorts after the good slides.
  std::ofstream(dir / "s" / "slides" / "ZZ_broken.png").close();
  fs::create_directories(dir / "t");
  const CliRun r = Cli({"tile", "--input", (dir / "s" / "slides").string(), "--out",
                     (dir / "t").string(), "--tile-size", "200",
                     "--save-patches"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("corrupt"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "t" / "patches"));
  EXPECT_FALSE(fs::exists(dir / "t" / "manifest.jsonl"));
  // Pre-existing directory stays.
  EXPECT_TRUE(fs::exists(dir / "t"));
}

TEST(Cli, TileManifestIndependentOfWorkers) {
  TempDir dir;
  ASSERT_EQ(Cli(SmallSynth(dir / "s", 2)).code, 0);
  const std::string input = (dir / "s" / "slides").string();
  for (const char* w : {"1", "8"}) {
    const CliRun r = Cli({"tile", "--input", input, "--out",
                       (dir / (std::string("t") + w)).string(), "--tile-size",
                       "150", "--workers", w, "--save-patches"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  // Patch paths live under different output dirs; compare the rest.
  auto strip = [](std::vector<TileRecord> v) {
    for (auto& r : v) r.patch_path = fs::path(*r.patch_path).filename().string();
    return v;
  };
  EXPECT_EQ(strip(ReadManifest(dir / "t1" / "manifest.jsonl")),
            strip(ReadManifest(dir / "t8" / "manifest.jsonl")));
  EXPECT_EQ(ReadManifest(dir / "t1" / "manifest.jsonl").size(), 4u * 16u);
  EXPECT_TRUE(fs::exists(dir / "t1" / "patches" / "CE_000_x150_y300.png"));
  EXPECT_EQ(ReadFileText(dir / "t1" / "patches" / "CE_000_x150_y300.png"),
            ReadFileText(dir / "t8" / "patches" / "CE_000_x150_y300.png"));
}

TEST(Cli, ConfigFileEnvAndFlagPrecedence) {
  TempDir dir;
  ASSERT_EQ(Cli(SmallSynth(dir / "s", 1)).code, 0);
  {
    std::ofstream cfg(dir / "run.json");
    cfg << R"({"tile_size": 200, "workers": 3, "min_content_ratio": 0.4})";
  }
  const std::string input = (dir / "s" / "slides").string();
  ASSERT_EQ(Cli({"tile", "--config", (dir / "run.json").string(), "--input",
                 input, "--out", (dir / "a").string()})
                .code,
            0);
  nlohmann::json a = ReadJson(dir / "a" / "config.json");
  EXPECT_EQ(a["tile_size"], 200);
  EXPECT_EQ(a["workers"], 3);
  EXPECT_EQ(a["min_content_ratio"], 0.4);

  setenv("CLOTPATH_WORKERS", "2", 1);
  ASSERT_EQ(Cli({"tile", "--config", (dir / "run.json").string(), "--input",
                 input, "--out", (dir / "b").string(), "--tile-size", "300"})
                .code,
            0);
  const nlohmann::json b = ReadJson(dir / "b" / "config.json");
  EXPECT_EQ(b["tile_size"], 300);
  EXPECT_EQ(b["workers"], 2);
  ASSERT_EQ(Cli({"tile", "--config", (dir / "run.json").string(), "--input",
                 input, "--out", (dir / "c").string(), "--workers", "4"})
                .code,
            0);
  EXPECT_EQ(ReadJson(dir / "c" / "config.json")["workers"], 4);
  unsetenv("CLOTPATH_WORKERS");
  EXPECT_EQ(ReadManifest(dir / "b" / "manifest.jsonl").size(), 8u);
}

TEST(Cli, BadConfigFileIsReported) {
  TempDir dir;
  std::ofstream(dir / "bad.json") << "{ not json";
  const CliRun r = Cli({"split", "--config", (dir / "bad.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bad.json"), std::string::npos);
}

TEST(Cli, EvaluateExternalScoresFixture) {
  TempDir dir;
  const CliRun r = Cli({"evaluate", "--scores", (kFixtures / "scores.csv").string(),
                     "--labels", (kFixtures / "labels.csv").string(), "--out",
                     (dir / "r").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const nlohmann::json j = ReadJson(dir / "r" / "report.json");
  ASSERT_EQ(j["reports"].size(), 2u);
  EXPECT_EQ(j["reports"][0]["level"], "tile");
  EXPECT_EQ(j["reports"][0]["n"], 6);
  EXPECT_EQ(j["reports"][1]["n"], 3);
  EXPECT_TRUE(fs::exists(dir / "r" / "report.txt"));
  EXPECT_TRUE(fs::exists(dir / "r" / "config.json"));
  EXPECT_NE(r.out.find("scores"), std::string::npos);
}

TEST(Cli, EvaluateMissingScoresNamesKey) {
  TempDir dir;
  {
    std::ofstream labels(dir / "labels.csv");
    labels << "slide_id,label\ns1,CE\ns9,LAA\n";
  }
  const CliRun r = Cli({"evaluate", "--scores", (kFixtures / "scores.csv").string(),
                     "--labels", (dir / "labels.csv").string(), "--out",
                     (dir / "r").string(), "--level", "slide"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("s9"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "r" / "report.json"));
}

TEST(Cli, SplitCommand) {
  TempDir dir;
  ASSERT_EQ(Cli(SmallSynth(dir / "s", 10)).code, 0);
  const CliRun r = Cli({"split", "--labels", (dir / "s" / "labels.csv").string(),
                     "--out", (dir / "p").string(), "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const SplitAssignment s = ReadSplit(dir / "p" / "split.csv");
  EXPECT_EQ(s.SlidesIn(Split::kTrain).size(), 14u);
  EXPECT_EQ(s.assignment.size(), 20u);
  EXPECT_FALSE(s.SlidesIn(Split::kTest).empty());
  EXPECT_TRUE(fs::exists(dir / "p" / "config.json"));
}

TEST(Cli, RunAllSmallSyntheticWritesEveryStage) {
  TempDir dir;
  const fs::path out = dir / "run";
  const CliRun r = Cli({"run-all", "--synthetic", "--out", out.string(),
                     "--slides", "7", "--width", "1200", "--height", "1200",
                     "--blobs", "2", "--blob-radius-min", "200",
                     "--blob-radius-max", "280", "--tile-size", "300",
                     "--max-epochs", "60", "--swa-start", "40", "--lr", "3e-3", "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err << r.out;
  for (const char* stage : {"synth", "split", "tiles", "stage1_features",
                            "stage1_model", "filtered", "features",
                            "stage2_model", "predict", "report"}) {
    EXPECT_TRUE(fs::exists(out / stage / "config.json")) << stage;
  }
  EXPECT_TRUE(fs::exists(out / "config.json"));
  EXPECT_TRUE(fs::exists(out / "stage2_model" / "model.json"));
  EXPECT_TRUE(fs::exists(out / "report" / "report.txt"));
  // Every blob-free tile is discarded before stage 2.
  const auto tiles = ReadManifest(out / "tiles" / "manifest.jsonl");
  const auto filtered = ReadManifest(out / "filtered" / "manifest.jsonl");
  ASSERT_EQ(tiles.size(), filtered.size());
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    if (tiles[i].label == "background") {
      EXPECT_FALSE(filtered[i].kept) << i;
    }
  }
}

}  // namespace
}  // namespace clotpath

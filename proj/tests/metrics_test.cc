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

#include "clotpath/metrics.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "clotpath/error.h"
#include "oracles.h"
#include "test_util.h"

namespace clotpath {
namespace {

using testing::TempDir;

TEST(Wmcll, HandExample) {
  EvalBatch b;
  b.num_classes = 2;
  b.labels = {0, 1};
  b.probs = {0.8, 0.2, 0.3, 0.7};
  b.weights = {2.0, 1.0};
  const double want = -0.5 * (2.0 * std::log(0.8) + std::log(0.7));
  EXPECT_NEAR(Wmcll(b), want, 1e-15);
  EXPECT_NEAR(Wmcll(b), 0.40148, 5e-6);
}

TEST(Wmcll, PerfectAndUniform) {
  EvalBatch b;
  b.num_classes = 3;
  b.labels = {0, 2, 1};
  b.probs = {1, 0, 0, 0, 0, 1, 0, 1, 0};
  EXPECT_EQ(Wmcll(b), 0.0);
  b.probs.assign(9, 1.0 / 3.0);
  EXPECT_NEAR(Wmcll(b), std::log(3.0), 1e-15);
}

TEST(Wmcll, ClippedTermIsFinite) {
  EvalBatch b;
  b.num_classes = 2;
  b.labels = {0, 0};
  b.probs = {0.0, 1.0, 1.0, 0.0};
  b.weights = {1.5, 1.0};
  const double want = -1.5 * std::log(1e-15) / 2.0;
  EXPECT_NEAR(Wmcll(b), want, 1e-12);
  EXPECT_NEAR(-std::log(1e-15), 34.54, 0.005);
}

TEST(Wmcll, EmptyAndInvalidBatches) {
  EvalBatch b;
  EXPECT_THROW(Wmcll(b), Error);
  b.labels = {0};
  b.probs = {0.7, 0.7};
  EXPECT_THROW(Wmcll(b), Error);
  b.probs = {0.5, 0.5};
  b.labels = {2};
  EXPECT_THROW(Wmcll(b), Error);
  b.labels = {0};
  b.weights = {1.0, 0.0};
  EXPECT_THROW(Wmcll(b), Error);
}

TEST(Wmcll, RandomBatchesMatchDirectEvaluation) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int m = std::array<int, 3>{2, 3, 5}[trial % 3];
    const int n = 1 + static_cast<int>(rng() % 64);
    EvalBatch b;
    b.num_classes = m;
    std::vector<std::vector<int>> y(n, std::vector<int>(m, 0));
    std::vector<std::vector<double>> p(n, std::vector<double>(m));
    for (int i = 0; i < n; ++i) {
      const int label = static_cast<int>(rng() % m);
      b.labels.push_back(label);
      y[i][label] = 1;
      double s = 0;
      for (double& v : p[i]) s += (v = u(rng) < 0.05 ? 0.0 : u(rng));
      if (s == 0) {
        p[i][0] = s = 1;
      }
      for (double& v : p[i]) b.probs.push_back(v /= s);
    }
    for (int j = 0; j < m; ++j) b.weights.push_back(0.1 + 3 * u(rng));
    ASSERT_NEAR(Wmcll(b), oracle::Wmcll(y, p, b.weights), 1e-12) << trial;
    ASSERT_GE(Wmcll(b), 0.0);
  }
}

TEST(InverseFrequencyWeights, Formula) {
  const std::vector<int> labels{0, 0, 0, 1};
  const auto w = InverseFrequencyWeights(labels, 3);
  EXPECT_DOUBLE_EQ(w[0], 4.0 / (3.0 * 3.0));
  EXPECT_DOUBLE_EQ(w[1], 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(w[2], 1.0);
}

TEST(Confusion, FourSampleExample) {
  const std::vector<int> t{0, 0, 1, 1}, p{0, 1, 1, 1};
  const ConfusionCounts c = Confusion(t, p, 2);
  EXPECT_EQ(c.tp[0], 1);
  EXPECT_EQ(c.fn[0], 1);
  EXPECT_EQ(c.fp[0], 0);
  EXPECT_EQ(c.tn[0], 2);
  EXPECT_EQ(c.tp[1], 2);
  EXPECT_EQ(c.fp[1], 1);
  EXPECT_EQ(c.fn[1], 0);
  EXPECT_EQ(c.tn[1], 1);
  EXPECT_EQ(c.at(0, 1), 1);
  EXPECT_EQ(c.total, 4);
}

TEST(Confusion, AllCorrectIsDiagonal) {
  const std::vector<int> t{0, 1, 2, 2, 1};
  const ConfusionCounts c = Confusion(t, t, 3);
  for (int j = 0; j < 3; ++j) {
    EXPECT_EQ(c.fp[j], 0);
    EXPECT_EQ(c.fn[j], 0);
  }
  EXPECT_EQ(c.trace(), 5);
}

TEST(Confusion, Errors) {
  const std::vector<int> a{0, 1}, b{0};
  EXPECT_THROW(Confusion(a, b, 2), Error);
  const std::vector<int> bad{0, 3};
  EXPECT_THROW(Confusion(a, bad, 2), Error);
}

TEST(Metrics, PrecisionExample) {
  const ConfusionCounts c = ConfusionFromMatrix({3, 1, 1, 0}, 2);
  // Class 0: TP = 3 and FP = 1 (one class-1 sample predicted 0).
  const ConfusionCounts d = ConfusionFromMatrix({3, 0, 1, 5}, 2);
  EXPECT_DOUBLE_EQ(Precision(d, 0).value, 0.75);
  EXPECT_DOUBLE_EQ(Recall(c, 0).value, 0.75);
}

TEST(Metrics, HarmonicMeanOfEqualsExact) {
  const Metric f = F1FromPrecisionRecall(0.9345, 0.9345);
  EXPECT_EQ(f.value, 0.9345);
  EXPECT_FALSE(f.degenerate);
}

TEST(Metrics, DegenerateZeroDivisions) {
  // Class 1 is never predicted and never true.
  const ConfusionCounts c = ConfusionFromMatrix({4, 0, 0, 0}, 2);
  const Metric p = Precision(c, 1);
  EXPECT_EQ(p.value, 0.0);
  EXPECT_TRUE(p.degenerate);
  EXPECT_TRUE(Recall(c, 1).degenerate);
  EXPECT_TRUE(F1(c, 1).degenerate);
  EXPECT_FALSE(Precision(c, 0).degenerate);
  EXPECT_TRUE(Accuracy(ConfusionFromMatrix({0, 0, 0, 0}, 2)).degenerate);
}

TEST(Metrics, ClassAccuracyIsOneVsRest) {
  const ConfusionCounts c = ConfusionFromMatrix({5, 1, 0, 2, 3, 1, 0, 0, 4}, 3);
  for (int j = 0; j < 3; ++j) {
    const double want = static_cast<double>(c.tp[j] + c.tn[j]) / c.total;
    EXPECT_DOUBLE_EQ(ClassAccuracy(c, j).value, want);
  }
  EXPECT_DOUBLE_EQ(Accuracy(c).value, 12.0 / 16.0);
}

ConfusionCounts RandomConfusion(std::mt19937_64& rng) {
  const int m = 2 + static_cast<int>(rng() % 4);
  std::vector<std::int64_t> mat(static_cast<std::size_t>(m * m));
  for (auto& v : mat) v = static_cast<std::int64_t>(rng() % 50);
  mat[0] += 1;
  return ConfusionFromMatrix(mat, m);
}

TEST(Metrics, RandomIdentities) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const ConfusionCounts c = RandomConfusion(rng);
    const Averages micro = MicroAverages(c);
    const double acc = Accuracy(c).value;
    ASSERT_NEAR(micro.precision.value, acc, 1e-12);
    ASSERT_NEAR(micro.recall.value, acc, 1e-12);
    std::int64_t total = 0;
    for (auto v : c.matrix) total += v;
    ASSERT_EQ(total, c.total);
    for (int j = 0; j < c.num_classes; ++j) {
      std::int64_t row = 0;
      for (int p = 0; p < c.num_classes; ++p) row += c.at(j, p);
      ASSERT_EQ(c.tp[j] + c.fn[j], row);
      const Metric p = Precision(c, j), r = Recall(c, j), f = F1(c, j);
      if (p.degenerate || r.degenerate || f.degenerate) continue;
      const double hm = 2 * (r.value * p.value) / (r.value + p.value);
      ASSERT_NEAR(f.value, hm, 1e-12);
      ASSERT_LE(f.value, std::max(p.value, r.value) + 1e-15);
      ASSERT_GE(f.value, std::min(p.value, r.value) - 1e-15);
    }
  }
}

TEST(Metrics, MacroIsMeanOfClasses) {
  const ConfusionCounts c = ConfusionFromMatrix({5, 1, 2, 3}, 2);
  const Averages macro = MacroAverages(c);
  EXPECT_DOUBLE_EQ(macro.precision.value,
                   (Precision(c, 0).value + Precision(c, 1).value) / 2);
  EXPECT_DOUBLE_EQ(macro.recall.value,
                   (Recall(c, 0).value + Recall(c, 1).value) / 2);
}

EvalInput SixtyFortyInput() {
  EvalInput in;
  in.class_names = {"CE", "LAA"};
  in.slide_labels = {{"a", "CE"}, {"b", "LAA"}};
  // Slide a: 3 tiles lean CE, 2 lean LAA. Slide b: all lean LAA.
  const std::vector<Probabilities> a{{0.9, 0.1}, {0.8, 0.2}, {0.7, 0.3},
                                     {0.4, 0.6}, {0.3, 0.7}};
  for (int i = 0; i < 5; ++i) in.scores[{"a", 600 * i, 0}] = a[i];
  for (int i = 0; i < 2; ++i) in.scores[{"b", 600 * i, 0}] = {0.2, 0.8};
  return in;
}

TEST(Evaluate, TileAndSlideLevelsDiffer) {
  const EvalInput in = SixtyFortyInput();
  const EvalReport tile = Evaluate(in, EvalLevel::kTile);
  const EvalReport slide = Evaluate(in, EvalLevel::kSlide);
  EXPECT_EQ(tile.n, 7);
  EXPECT_EQ(slide.n, 2);
  EXPECT_DOUBLE_EQ(tile.accuracy.value, 5.0 / 7.0);
  EXPECT_DOUBLE_EQ(slide.accuracy.value, 1.0);
  EXPECT_NE(tile.wmcll, slide.wmcll);
  // Slide a mean = (0.62, 0.38); slide b = (0.2, 0.8).
  EXPECT_NEAR(slide.wmcll, -0.5 * (std::log(0.62) + std::log(0.8)), 1e-12);
}

TEST(Evaluate, PerfectSlidePredictions) {
  EvalInput in;
  in.class_names = {"CE", "LAA"};
  in.slide_labels = {{"a", "CE"}, {"b", "LAA"}};
  in.scores[{"a", 0, 0}] = {1.0, 0.0};
  in.scores[{"b", 0, 0}] = {0.0, 1.0};
  const EvalReport r = Evaluate(in, EvalLevel::kSlide);
  EXPECT_EQ(r.accuracy.value, 1.0);
  EXPECT_EQ(r.wmcll, 0.0);
  EXPECT_EQ(r.m, 2);
}

TEST(Evaluate, MissingPredictionsListed) {
  EvalInput in = SixtyFortyInput();
  in.slide_labels["c"] = "CE";
  try {
    Evaluate(in, EvalLevel::kSlide);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kMissing);
    EXPECT_NE(std::string(e.what()).find("c"), std::string::npos);
  }
  in = SixtyFortyInput();
  in.tiles = std::vector<TileKey>{{"a", 0, 0}, {"a", 99, 99}};
  try {
    Evaluate(in, EvalLevel::kTile);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kMissing);
    EXPECT_NE(std::string(e.what()).find("(a, 99, 99)"), std::string::npos)
        << e.what();
  }
}

TEST(Evaluate, InverseFrequencyWeightsApplied) {
  EvalInput in = SixtyFortyInput();
  in.inverse_frequency_weights = true;
  const EvalReport r = Evaluate(in, EvalLevel::kTile);
  ASSERT_EQ(r.weights.size(), 2u);
  EXPECT_DOUBLE_EQ(r.weights[0], 7.0 / (2.0 * 5.0));
  EXPECT_DOUBLE_EQ(r.weights[1], 7.0 / (2.0 * 2.0));
}

TEST(Report, JsonAndTable) {
  const EvalInput in = SixtyFortyInput();
  std::vector<EvalReport> reports{Evaluate(in, EvalLevel::kTile, "linear"),
                                  Evaluate(in, EvalLevel::kSlide, "linear"),
                                  Evaluate(in, EvalLevel::kSlide, "other")};
  const auto j = ReportToJson(reports[0]);
  for (const char* key : {"wmcll", "accuracy", "per_class", "confusion_matrix", "n",
                          "m", "level"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  const std::string table = FormatReportTable(reports);
  for (const char* col : {"Model", "Log Loss", "Accuracy", "Precision",
                          "Recall", "F1-Score"}) {
    EXPECT_NE(table.find(col), std::string::npos) << col;
  }
  int lines = 0;
  for (char ch : table) lines += ch == '\n';
  EXPECT_GE(lines, 4);
  EXPECT_NE(table.find("other"), std::string::npos);
}

std::vector<SlideLabel> Slides(int per_class) {
  std::vector<SlideLabel> s;
  for (int i = 0; i < per_class; ++i) {
    s.push_back({"CE_" + std::to_string(i), "CE"});
    s.push_back({"LAA_" + std::to_string(i), "LAA"});
  }
  return s;
}

TEST(Split, ThousandSlidesProportions) {
  const auto slides = Slides(500);
  const SplitAssignment a = SplitDataset(slides, SplitRatios{}, 7);
  std::map<std::pair<std::string, Split>, int> counts;
  for (const auto& [id, split] : a.assignment) counts[{a.labels.at(id), split}]++;
  for (const std::string label : {"CE", "LAA"}) {
    const auto count = [&](Split s) { return counts[std::make_pair(label, s)]; };
    EXPECT_NEAR(count(Split::kTrain), 350, 1);
    EXPECT_NEAR(count(Split::kValidation), 75, 1);
    EXPECT_NEAR(count(Split::kTest), 75, 1);
  }
  EXPECT_NEAR(a.SlidesIn(Split::kTrain).size(), 700u, 1);
  EXPECT_NEAR(a.SlidesIn(Split::kValidation).size(), 150u, 1);
  EXPECT_NEAR(a.SlidesIn(Split::kTest).size(), 150u, 1);
  // Reference patch proportions: 60489 / 86414 and 12962 / 86414.
  EXPECT_NEAR(60489.0 / 86414.0, 0.70, 0.001);
  EXPECT_NEAR(12962.0 / 86414.0, 0.15, 0.001);
}

TEST(Split, NoLeakageAndComplete) {
  const auto slides = Slides(37);
  const SplitAssignment a = SplitDataset(slides, SplitRatios{}, 1);
  std::set<std::string> seen;
  for (Split s : {Split::kTrain, Split::kValidation, Split::kTest}) {
    for (const auto& id : a.SlidesIn(s)) EXPECT_TRUE(seen.insert(id).second) << id;
  }
  EXPECT_EQ(seen.size(), slides.size());
}

TEST(Split, DeterministicAndSeedSensitive) {
  const auto slides = Slides(40);
  EXPECT_EQ(SplitDataset(slides, {}, 3).assignment,
            SplitDataset(slides, {}, 3).assignment);
  EXPECT_NE(SplitDataset(slides, {}, 3).assignment,
            SplitDataset(slides, {}, 4).assignment);
  // Input order does not matter.
  auto reversed = slides;
  std::reverse(reversed.begin(), reversed.end());
  EXPECT_EQ(SplitDataset(reversed, {}, 3).assignment,
            SplitDataset(slides, {}, 3).assignment);
}

TEST(Split, TinyStratumGoesToTrainWithWarning) {
  const std::vector<SlideLabel> one{{"only", "CE"}};
  const SplitAssignment a = SplitDataset(one, {}, 0);
  EXPECT_EQ(a.assignment.at("only"), Split::kTrain);
  EXPECT_FALSE(a.warnings.empty());
}

TEST(Split, BadRatiosAndDuplicatesRejected) {
  EXPECT_THROW(SplitDataset(Slides(5), SplitRatios{0.5, 0.3, 0.3}, 0), Error);
  std::vector<SlideLabel> dup{{"a", "CE"}, {"a", "LAA"}};
  EXPECT_THROW(SplitDataset(dup, {}, 0), Error);
}

TEST(Split, CsvRoundTrip) {
  TempDir dir;
  const SplitAssignment a = SplitDataset(Slides(10), {}, 9);
  WriteSplit(dir / "split.csv", a);
  const SplitAssignment b = ReadSplit(dir / "split.csv");
  EXPECT_EQ(b.assignment, a.assignment);
  EXPECT_EQ(b.labels, a.labels);
}

}  // namespace
}  // namespace clotpath

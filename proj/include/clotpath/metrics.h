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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "clotpath/classifier.h"

namespace clotpath {

inline constexpr double kDefaultClipEps = 1e-15;

/// N samples over M classes. `labels[i]` is the index of the true class
/// (the one-hot row y_i); `probs` is N x M row-major; `weights` holds w_j
/// and defaults to all ones when empty.
struct EvalBatch {
  int num_classes = 2;
  std::vector<int> labels;
  std::vector<double> probs;
  std::vector<double> weights;

  std::size_t size() const { return labels.size(); }
  double prob(std::size_t i, int j) const {
    return probs[i * static_cast<std::size_t>(num_classes) + j];
  }
  /// Throws kShapeMismatch / kInvalidArgument on broken invariants.
  void Validate() const;
};

/// -1/N sum_i sum_j w_j y_ij log(clip(p_ij)), natural log, probabilities
/// clipped to [clip_eps, 1]. Throws kEmptyInput when N = 0.
double Wmcll(const EvalBatch& batch, double clip_eps = kDefaultClipEps);

/// w_j = N / (M * count_j); classes absent from `labels` get weight 1.
std::vector<double> InverseFrequencyWeights(std::span<const int> labels,
                                            int num_classes);

struct ConfusionCounts {
  int num_classes = 0;
  /// matrix[t * M + p]: samples with true class t predicted as p.
  std::vector<std::int64_t> matrix;
  std::vector<std::int64_t> tp, fp, fn, tn;
  std::int64_t total = 0;

  std::int64_t at(int truth, int predicted) const {
    return matrix[static_cast<std::size_t>(truth) * num_classes + predicted];
  }
  std::int64_t trace() const;
};

/// Throws kShapeMismatch on length mismatch and kInvalidArgument for labels
/// outside [0, M).
ConfusionCounts Confusion(std::span<const int> y_true,
                          std::span<const int> y_pred, int num_classes);

/// Counts from a full M x M matrix; fills the one-vs-rest fields.
ConfusionCounts ConfusionFromMatrix(std::vector<std::int64_t> matrix,
                                    int num_classes);

/// A ratio that is 0 and flagged when its denominator is 0.
struct Metric {
  double value = 0.0;
  bool degenerate = false;
};

/// Correctly classified samples over N (trace / N).
Metric Accuracy(const ConfusionCounts& c);
/// (TP + TN) / (TP + FP + FN + TN) for one class against the rest.
Metric ClassAccuracy(const ConfusionCounts& c, int cls);
Metric Precision(const ConfusionCounts& c, int cls);
Metric Recall(const ConfusionCounts& c, int cls);
Metric F1(const ConfusionCounts& c, int cls);
/// 2 * (recall * precision) / (recall + precision).
Metric F1FromPrecisionRecall(double precision, double recall);

struct Averages {
  Metric precision;
  Metric recall;
  Metric f1;
};

/// Pooled TP/FP/FN over classes.
Averages MicroAverages(const ConfusionCounts& c);
/// Unweighted mean of the per-class values.
Averages MacroAverages(const ConfusionCounts& c);

enum class EvalLevel { kTile, kSlide };
std::string_view EvalLevelName(EvalLevel level);
EvalLevel ParseEvalLevel(std::string_view name);

struct EvalInput {
  std::vector<std::string> class_names;
  std::map<TileKey, Probabilities> scores;
  /// slide_id -> class name. Only these slides are evaluated.
  std::map<std::string, std::string> slide_labels;
  /// Kept tiles to evaluate; when unset every scored tile of a labeled
  /// slide is used.
  std::optional<std::vector<TileKey>> tiles;
  AggregateMethod aggregate = AggregateMethod::kMean;
  /// Empty means all ones.
  std::vector<double> weights;
  bool inverse_frequency_weights = false;
};

struct ClassReport {
  std::string name;
  Metric precision;
  Metric recall;
  Metric f1;
  Metric accuracy;
  std::int64_t support = 0;
};

struct EvalReport {
  std::string name;
  EvalLevel level = EvalLevel::kSlide;
  std::int64_t n = 0;
  int m = 0;
  double wmcll = 0.0;
  Metric accuracy;
  std::vector<ClassReport> per_class;
  Averages micro;
  Averages macro;
  ConfusionCounts confusion;
  std::vector<double> weights;
};

/// Builds the batch for `level` and scores it. Missing predictions (tiles
/// or slides without scores) throw kMissing listing the keys.
EvalReport Evaluate(const EvalInput& input, EvalLevel level,
                    std::string name = "model");

nlohmann::ordered_json ReportToJson(const EvalReport& report);

/// Aligned text table with one row per report.
std::string FormatReportTable(std::span<const EvalReport> reports);

enum class Split { kTrain, kValidation, kTest };
std::string_view SplitName(Split split);
Split ParseSplit(std::string_view name);

struct SplitRatios {
  double train = 0.70;
  double validation = 0.15;
  double test = 0.15;
};

struct SlideLabel {
  std::string slide_id;
  std::string label;
};

struct SplitAssignment {
  std::map<std::string, Split> assignment;
  std::map<std::string, std::string> labels;
  std::uint64_t seed = 0;
  SplitRatios ratios;
  std::vector<std::string> warnings;

  std::vector<std::string> SlidesIn(Split split) const;
};

/// Stratified by label, at slide granularity: each stratum is sorted by id,
/// shuffled with a seed derived from (seed, label) and cut into contiguous
/// train / validation / test runs of round(r * n) slides. Strata with fewer
/// slides than splits go entirely to train with a warning.
SplitAssignment SplitDataset(std::span<const SlideLabel> slides,
                             const SplitRatios& ratios, std::uint64_t seed);

/// CSV slide_id,label,split.
void WriteSplit(const std::filesystem::path& path, const SplitAssignment& s);
SplitAssignment ReadSplit(const std::filesystem::path& path);

/// CSV slide_id,label.
std::vector<SlideLabel> ReadSlideLabels(const std::filesystem::path& path);
void WriteSlideLabels(const std::filesystem::path& path,
                      std::span<const SlideLabel> labels);

}  // namespace clotpath

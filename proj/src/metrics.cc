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

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "clotpath/csv.h"
#include "clotpath/error.h"
#include "clotpath/seed.h"

namespace clotpath {

void EvalBatch::Validate() const {
  if (num_classes < 1) {
    throw Error(Errc::kInvalidArgument, "EvalBatch needs at least one class");
  }
  const std::size_t m = static_cast<std::size_t>(num_classes);
  if (probs.size() != labels.size() * m) {
    throw Error(Errc::kShapeMismatch,
                fmt::format("{} probabilities for {} samples x {} classes",
                            probs.size(), labels.size(), m));
  }
  if (!weights.empty() && weights.size() != m) {
    throw Error(Errc::kShapeMismatch,
                fmt::format("{} class weights for {} classes", weights.size(),
                            m));
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw Error(Errc::kInvalidArgument,
                  fmt::format("class weight {} must be positive", w));
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw Error(Errc::kInvalidArgument,
                  fmt::format("sample {} has label {} outside [0, {})", i,
                              labels[i], num_classes));
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double v = probs[i * m + j];
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw Error(Errc::kInvalidArgument,
                    fmt::format("sample {} has probability {} for class {}", i,
                                v, j));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error(Errc::kInvalidArgument,
                  fmt::format("probabilities of sample {} sum to {}", i, sum));
    }
  }
}

double Wmcll(const EvalBatch& batch, double clip_eps) {
  batch.Validate();
  if (batch.size() == 0) {
    throw Error(Errc::kEmptyInput, "WMCLL of an empty batch");
  }
  // Only the true class has y_ij = 1, so the inner sum has one term.
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const int j = batch.labels[i];
    const double w = batch.weights.empty() ? 1.0 : batch.weights[j];
    const double p = std::clamp(batch.prob(i, j), clip_eps, 1.0);
    sum += w * std::log(p);
  }
  return -sum / static_cast<double>(batch.size());
}

std::vector<double> InverseFrequencyWeights(std::span<const int> labels,
                                            int num_classes) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw Error(Errc::kInvalidArgument,
                  fmt::format("label {} outside [0, {})", y, num_classes));
    }
    ++counts[y];
  }
  std::vector<double> w(counts.size(), 1.0);
  const double n = static_cast<double>(labels.size());
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] > 0) w[j] = n / (num_classes * static_cast<double>(counts[j]));
  }
  return w;
}

std::int64_t ConfusionCounts::trace() const {
  std::int64_t t = 0;
  for (int j = 0; j < num_classes; ++j) t += at(j, j);
  return t;
}

ConfusionCounts ConfusionFromMatrix(std::vector<std::int64_t> matrix,
                                    int num_classes) {
  const std::size_t m = static_cast<std::size_t>(num_classes);
  if (matrix.size() != m * m) {
    throw Error(Errc::kShapeMismatch,
                fmt::format("confusion matrix has {} cells, expected {}",
                            matrix.size(), m * m));
  }
  ConfusionCounts c;
  c.num_classes = num_classes;
  c.matrix = std::move(matrix);
  for (std::int64_t v : c.matrix) c.total += v;
  c.tp.assign(m, 0);
  c.fp.assign(m, 0);
  c.fn.assign(m, 0);
  c.tn.assign(m, 0);
  for (int j = 0; j < num_classes; ++j) {
    std::int64_t row = 0;
    std::int64_t col = 0;
    for (int k = 0; k < num_classes; ++k) {
      row += c.at(j, k);
      col += c.at(k, j);
    }
    c.tp[j] = c.at(j, j);
    c.fn[j] = row - c.tp[j];
    c.fp[j] = col - c.tp[j];
    c.tn[j] = c.total - c.tp[j] - c.fn[j] - c.fp[j];
  }
  return c;
}

ConfusionCounts Confusion(std::span<const int> y_true,
                          std::span<const int> y_pred, int num_classes) {
  if (y_true.size() != y_pred.size()) {
    throw Error(Errc::kShapeMismatch,
                fmt::format("{} true labels but {} predictions", y_true.size(),
                            y_pred.size()));
  }
  if (num_classes < 1) {
    throw Error(Errc::kInvalidArgument, "confusion needs at least one class");
  }
  const std::size_t m = static_cast<std::size_t>(num_classes);
  std::vector<std::int64_t> matrix(m * m, 0);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes) {
      throw Error(Errc::kInvalidArgument,
                  fmt::format("sample {}: labels ({}, {}) outside [0, {})", i,
                              t, p, num_classes));
    }
    ++matrix[static_cast<std::size_t>(t) * m + p];
  }
  return ConfusionFromMatrix(std::move(matrix), num_classes);
}

namespace {

Metric Ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return Metric{0.0, true};
  return Metric{static_cast<double>(num) / static_cast<double>(den), false};
}

}  // namespace

Metric Accuracy(const ConfusionCounts& c) { return Ratio(c.trace(), c.total); }

Metric ClassAccuracy(const ConfusionCounts& c, int cls) {
  return Ratio(c.tp[cls] + c.tn[cls],
               c.tp[cls] + c.fp[cls] + c.fn[cls] + c.tn[cls]);
}

Metric Precision(const ConfusionCounts& c, int cls) {
  return Ratio(c.tp[cls], c.tp[cls] + c.fp[cls]);
}

Metric Recall(const ConfusionCounts& c, int cls) {
  return Ratio(c.tp[cls], c.tp[cls] + c.fn[cls]);
}

Metric F1FromPrecisionRecall(double precision, double recall) {
  const double den = recall + precision;
  if (den == 0.0) return Metric{0.0, true};
  return Metric{2.0 * (recall * precision) / den, false};
}

Metric F1(const ConfusionCounts& c, int cls) {
  const Metric p = Precision(c, cls);
  const Metric r = Recall(c, cls);
  Metric f = F1FromPrecisionRecall(p.value, r.value);
  f.degenerate = f.degenerate || p.degenerate || r.degenerate;
  return f;
}

Averages MicroAverages(const ConfusionCounts& c) {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  for (int j = 0; j < c.num_classes; ++j) {
    tp += c.tp[j];
    fp += c.fp[j];
    fn += c.fn[j];
  }
  Averages a;
  a.precision = Ratio(tp, tp + fp);
  a.recall = Ratio(tp, tp + fn);
  a.f1 = F1FromPrecisionRecall(a.precision.value, a.recall.value);
  a.f1.degenerate =
      a.f1.degenerate || a.precision.degenerate || a.recall.degenerate;
  return a;
}

Averages MacroAverages(const ConfusionCounts& c) {
  Averages a;
  if (c.num_classes == 0) {
    a.precision.degenerate = a.recall.degenerate = a.f1.degenerate = true;
    return a;
  }
  for (int j = 0; j < c.num_classes; ++j) {
    const Metric p = Precision(c, j);
    const Metric r = Recall(c, j);
    const Metric f = F1(c, j);
    a.precision.value += p.value;
    a.recall.value += r.value;
    a.f1.value += f.value;
    a.precision.degenerate = a.precision.degenerate || p.degenerate;
    a.recall.degenerate = a.recall.degenerate || r.degenerate;
    a.f1.degenerate = a.f1.degenerate || f.degenerate;
  }
  a.precision.value /= c.num_classes;
  a.recall.value /= c.num_classes;
  a.f1.value /= c.num_classes;
  return a;
}

std::string_view EvalLevelName(EvalLevel level) {
  return level == EvalLevel::kTile ? "tile" : "slide";
}

EvalLevel ParseEvalLevel(std::string_view name) {
  if (name == "tile") return EvalLevel::kTile;
  if (name == "slide") return EvalLevel::kSlide;
  throw Error(Errc::kInvalidArgument,
              fmt::format("unknown evaluation level '{}'", name));
}

namespace {

std::string ListKeys(const std::vector<std::string>& keys) {
  constexpr std::size_t kShown = 20;
  std::string out;
  for (std::size_t i = 0; i < keys.size() && i < kShown; ++i) {
    if (i > 0) out += ", ";
    out += keys[i];
  }
  if (keys.size() > kShown) {
    out += fmt::format(", ... ({} more)", keys.size() - kShown);
  }
  return out;
}

}  // namespace

EvalReport Evaluate(const EvalInput& input, EvalLevel level,
                    std::string name) {
  const int m = static_cast<int>(input.class_names.size());
  if (m < 1) throw Error(Errc::kInvalidArgument, "no class names to evaluate");
  std::map<std::string, int> class_index;
  for (int j = 0; j < m; ++j) class_index[input.class_names[j]] = j;
  auto label_of = [&](const std::string& slide) {
    const std::string& label = input.slide_labels.at(slide);
    auto it = class_index.find(label);
    if (it == class_index.end()) {
      throw Error(Errc::kInvalidArgument,
                  fmt::format("slide {} has label '{}' which is not a scored "
                              "class",
                              slide, label));
    }
    return it->second;
  };

  // Tiles of labeled slides that take part, in key order.
  std::vector<TileKey> tiles;
  if (input.tiles) {
    for (const TileKey& k : *input.tiles) {
      if (input.slide_labels.count(k.slide_id)) tiles.push_back(k);
    }
    std::sort(tiles.begin(), tiles.end());
  } else {
    for (const auto& [k, p] : input.scores) {
      if (input.slide_labels.count(k.slide_id)) tiles.push_back(k);
    }
  }
  std::vector<std::string> missing;
  for (const TileKey& k : tiles) {
    if (!input.scores.count(k)) missing.push_back(k.ToString());
  }
  if (!missing.empty()) {
    throw Error(Errc::kMissing,
                fmt::format("{} tiles have no prediction: {}", missing.size(),
                            ListKeys(missing)));
  }

  EvalBatch batch;
  batch.num_classes = m;
  auto add = [&](int label, const Probabilities& p) {
    if (static_cast<int>(p.size()) != m) {
      throw Error(Errc::kShapeMismatch,
                  fmt::format("prediction has {} classes, expected {}",
                              p.size(), m));
    }
    batch.labels.push_back(label);
    batch.probs.insert(batch.probs.end(), p.begin(), p.end());
  };
  if (level == EvalLevel::kTile) {
    for (const TileKey& k : tiles) add(label_of(k.slide_id), input.scores.at(k));
  } else {
    std::map<std::string, std::vector<Probabilities>> by_slide;
    for (const TileKey& k : tiles) {
      by_slide[k.slide_id].push_back(input.scores.at(k));
    }
    for (const auto& [slide, label] : input.slide_labels) {
      if (!by_slide.count(slide)) missing.push_back(slide);
    }
    if (!missing.empty()) {
      throw Error(Errc::kMissing,
                  fmt::format("{} slides have no predicted tiles: {}",
                              missing.size(), ListKeys(missing)));
    }
    for (const auto& [slide, probs] : by_slide) {
      add(label_of(slide), AggregateSlide(probs, input.aggregate));
    }
  }
  if (batch.size() == 0) {
    throw Error(Errc::kEmptyInput, "nothing to evaluate");
  }
  if (input.inverse_frequency_weights) {
    batch.weights = InverseFrequencyWeights(batch.labels, m);
  } else if (!input.weights.empty()) {
    batch.weights = input.weights;
  }

  EvalReport report;
  report.name = std::move(name);
  report.level = level;
  report.n = static_cast<std::int64_t>(batch.size());
  report.m = m;
  report.wmcll = Wmcll(batch);
  std::vector<int> predicted(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    predicted[i] = Argmax(std::span<const double>(
        batch.probs.data() + i * static_cast<std::size_t>(m),
        static_cast<std::size_t>(m)));
  }
  report.confusion = Confusion(batch.labels, predicted, m);
  report.accuracy = Accuracy(report.confusion);
  for (int j = 0; j < m; ++j) {
    ClassReport cr;
    cr.name = input.class_names[j];
    cr.precision = Precision(report.confusion, j);
    cr.recall = Recall(report.confusion, j);
    cr.f1 = F1(report.confusion, j);
    cr.accuracy = ClassAccuracy(report.confusion, j);
    cr.support = report.confusion.tp[j] + report.confusion.fn[j];
    report.per_class.push_back(std::move(cr));
  }
  report.micro = MicroAverages(report.confusion);
  report.macro = MacroAverages(report.confusion);
  report.weights = batch.weights.empty()
                       ? std::vector<double>(static_cast<std::size_t>(m), 1.0)
                       : batch.weights;
  return report;
}

namespace {

nlohmann::ordered_json MetricJson(const Metric& metric) {
  return {{"value", metric.value}, {"degenerate", metric.degenerate}};
}

nlohmann::ordered_json AveragesJson(const Averages& a) {
  return {{"precision", MetricJson(a.precision)},
          {"recall", MetricJson(a.recall)},
          {"f1", MetricJson(a.f1)}};
}

}  // namespace

nlohmann::ordered_json ReportToJson(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["name"] = report.name;
  j["level"] = EvalLevelName(report.level);
  j["n"] = report.n;
  j["m"] = report.m;
  j["weights"] = report.weights;
  j["wmcll"] = report.wmcll;
  j["accuracy"] = MetricJson(report.accuracy);
  j["micro"] = AveragesJson(report.micro);
  j["macro"] = AveragesJson(report.macro);
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (const ClassReport& c : report.per_class) {
    classes.push_back({{"class", c.name},
                       {"support", c.support},
                       {"accuracy", MetricJson(c.accuracy)},
                       {"precision", MetricJson(c.precision)},
                       {"recall", MetricJson(c.recall)},
                       {"f1", MetricJson(c.f1)}});
  }
  j["per_class"] = std::move(classes);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (int t = 0; t < report.confusion.num_classes; ++t) {
    std::vector<std::int64_t> row;
    for (int p = 0; p < report.confusion.num_classes; ++p) {
      row.push_back(report.confusion.at(t, p));
    }
    rows.push_back(row);
  }
  j["confusion_matrix"] = std::move(rows);
  return j;
}

std::string FormatReportTable(std::span<const EvalReport> reports) {
  std::size_t name_width = 5;
  for (const EvalReport& r : reports) {
    name_width = std::max(name_width, r.name.size());
  }
  std::string out = fmt::format(
      "{:<{}}  {:<5}  {:>6}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}\n", "Model",
      name_width, "Level", "N", "Log Loss", "Accuracy", "Precision", "Recall",
      "F1-Score");
  out += std::string(out.size() - 1, '-') + "\n";
  for (const EvalReport& r : reports) {
    out += fmt::format(
        "{:<{}}  {:<5}  {:>6}  {:>9.4f}  {:>9.4f}  {:>9.4f}  {:>9.4f}  "
        "{:>9.4f}\n",
        r.name, name_width, EvalLevelName(r.level), r.n, r.wmcll,
        r.accuracy.value, r.micro.precision.value, r.micro.recall.value,
        r.micro.f1.value);
  }
  return out;
}

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "unknown";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw Error(Errc::kInvalidArgument, fmt::format("unknown split '{}'", name));
}

std::vector<std::string> SplitAssignment::SlidesIn(Split split) const {
  std::vector<std::string> out;
  for (const auto& [id, s] : assignment) {
    if (s == split) out.push_back(id);
  }
  return out;
}

SplitAssignment SplitDataset(std::span<const SlideLabel> slides,
                             const SplitRatios& ratios, std::uint64_t seed) {
  if (!(ratios.train > 0.0 && ratios.validation > 0.0 && ratios.test > 0.0) ||
      std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("split ratios ({}, {}, {}) must be positive and "
                            "sum to 1",
                            ratios.train, ratios.validation, ratios.test));
  }
  SplitAssignment out;
  out.seed = seed;
  out.ratios = ratios;
  std::map<std::string, std::vector<std::string>> strata;
  for (const SlideLabel& s : slides) {
    if (!out.labels.emplace(s.slide_id, s.label).second) {
      throw Error(Errc::kDuplicateKey,
                  fmt::format("slide {} listed twice", s.slide_id));
    }
    strata[s.label].push_back(s.slide_id);
  }
  for (auto& [label, ids] : strata) {
    std::sort(ids.begin(), ids.end());
    const std::size_t n = ids.size();
    if (n < 3) {
      out.warnings.push_back(
          fmt::format("class {} has {} slide(s), fewer than the 3 splits; all "
                      "assigned to train",
                      label, n));
      for (const auto& id : ids) out.assignment[id] = Split::kTrain;
      continue;
    }
    std::mt19937_64 rng(DeriveSeed(seed, "split/" + label));
    SeededShuffle(rng, ids);
    const auto n_train = static_cast<std::size_t>(
        std::llround(ratios.train * static_cast<double>(n)));
    const auto n_val = std::min(
        n - n_train, static_cast<std::size_t>(std::llround(
                         ratios.validation * static_cast<double>(n))));
    for (std::size_t i = 0; i < n; ++i) {
      out.assignment[ids[i]] = i < n_train           ? Split::kTrain
                               : i < n_train + n_val ? Split::kValidation
                                                     : Split::kTest;
    }
  }
  return out;
}

void WriteSplit(const std::filesystem::path& path, const SplitAssignment& s) {
  std::string out = "slide_id,label,split\n";
  for (const auto& [id, split] : s.assignment) {
    out += fmt::format("{},{},{}\n", id, s.labels.at(id), SplitName(split));
  }
  WriteFileAtomic(path, out);
}

SplitAssignment ReadSplit(const std::filesystem::path& path) {
  const CsvTable csv = ReadCsv(path);
  const int id = csv.Column("slide_id");
  const int label = csv.Column("label");
  const int split = csv.Column("split");
  if (id < 0 || label < 0 || split < 0) {
    throw Error(Errc::kMalformed,
                fmt::format("{}: expected columns slide_id,label,split",
                            path.string()));
  }
  SplitAssignment s;
  for (const auto& row : csv.rows) {
    if (!s.assignment.emplace(row[id], ParseSplit(row[split])).second) {
      throw Error(Errc::kDuplicateKey,
                  fmt::format("{}: slide {} listed twice", path.string(),
                              row[id]));
    }
    s.labels[row[id]] = row[label];
  }
  return s;
}

std::vector<SlideLabel> ReadSlideLabels(const std::filesystem::path& path) {
  const CsvTable csv = ReadCsv(path);
  const int id = csv.Column("slide_id");
  const int label = csv.Column("label");
  if (id < 0 || label < 0) {
    throw Error(Errc::kMalformed,
                fmt::format("{}: expected columns slide_id,label",
                            path.string()));
  }
  std::vector<SlideLabel> out;
  for (const auto& row : csv.rows) out.push_back({row[id], row[label]});
  return out;
}

void WriteSlideLabels(const std::filesystem::path& path,
                      std::span<const SlideLabel> labels) {
  std::string out = "slide_id,label\n";
  for (const SlideLabel& s : labels) {
    out += fmt::format("{},{}\n", s.slide_id, s.label);
  }
  WriteFileAtomic(path, out);
}

}  // namespace clotpath

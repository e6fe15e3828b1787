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

#include "clotpath/classifier.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "clotpath/csv.h"
#include "clotpath/error.h"

namespace clotpath {

std::string_view ClassSetName(ClassSet set) {
  switch (set) {
    case ClassSet::kBackgroundCellular:
      return "background_cellular";
    case ClassSet::kClotOrigin:
      return "clot_origin";
  }
  return "unknown";
}

ClassSet ParseClassSet(std::string_view name) {
  if (name == "background_cellular") return ClassSet::kBackgroundCellular;
  if (name == "clot_origin") return ClassSet::kClotOrigin;
  throw Error(Errc::kInvalidArgument, fmt::format("unknown class set '{}'", name));
}

const std::vector<std::string>& ClassNames(ClassSet set) {
  static const std::vector<std::string> kStage1{"background", "cellular"};
  static const std::vector<std::string> kStage2{"CE", "LAA"};
  return set == ClassSet::kBackgroundCellular ? kStage1 : kStage2;
}

int ClassIndex(ClassSet set, std::string_view label) {
  const auto& names = ClassNames(set);
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == label) return static_cast<int>(i);
  }
  throw Error(Errc::kInvalidArgument,
              fmt::format("label '{}' is not in class set {}", label,
                          ClassSetName(set)));
}

LinearModel LinearModel::Zero(ClassSet set) {
  LinearModel model;
  model.class_set = set;
  const std::size_t m = ClassNames(set).size();
  model.weights.assign(m * kFeatureCount, 0.0);
  model.biases.assign(m, 0.0);
  return model;
}

void LinearModel::Validate() const {
  const std::size_t m = ClassNames(class_set).size();
  if (biases.size() != m || weights.size() != m * kFeatureCount) {
    throw Error(Errc::kShapeMismatch,
                fmt::format("model for {} needs {}x{} weights and {} biases, "
                            "got {} and {}",
                            ClassSetName(class_set), m, kFeatureCount, m,
                            weights.size(), biases.size()));
  }
  if (layout_version != kFeatureLayoutVersion) {
    throw Error(Errc::kLayoutMismatch,
                fmt::format("model feature layout {} does not match {}",
                            layout_version, kFeatureLayoutVersion));
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i])) {
      throw Error(Errc::kNonFinite, fmt::format("weight {} is not finite", i));
    }
  }
  for (std::size_t i = 0; i < biases.size(); ++i) {
    if (!std::isfinite(biases[i])) {
      throw Error(Errc::kNonFinite, fmt::format("bias {} is not finite", i));
    }
  }
}

nlohmann::ordered_json ModelToJson(const LinearModel& model) {
  nlohmann::ordered_json j;
  j["class_set"] = ClassSetName(model.class_set);
  j["classes"] = ClassNames(model.class_set);
  j["layout_version"] = model.layout_version;
  j["feature_names"] = kFeatureNames;
  j["weights"] = model.weights;
  j["biases"] = model.biases;
  j["metadata"] = {{"seed", model.metadata.seed},
                   {"epochs", model.metadata.epochs},
                   {"final_val_wmcll", model.metadata.final_val_wmcll},
                   {"learning_rate", model.metadata.learning_rate}};
  return j;
}

LinearModel ModelFromJson(const nlohmann::json& j) {
  LinearModel model;
  try {
    model.class_set = ParseClassSet(j.at("class_set").get<std::string>());
    model.layout_version = j.at("layout_version").get<int>();
    model.weights = j.at("weights").get<std::vector<double>>();
    model.biases = j.at("biases").get<std::vector<double>>();
    if (j.contains("metadata")) {
      const auto& meta = j.at("metadata");
      model.metadata.seed = meta.value("seed", std::uint64_t{0});
      model.metadata.epochs = meta.value("epochs", 0);
      model.metadata.final_val_wmcll = meta.value("final_val_wmcll", 0.0);
      model.metadata.learning_rate = meta.value("learning_rate", 0.0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kMalformed, fmt::format("model JSON: {}", e.what()));
  }
  model.Validate();
  return model;
}

void SaveModel(const std::filesystem::path& path, const LinearModel& model) {
  model.Validate();
  WriteFileAtomic(path, ModelToJson(model).dump(2) + "\n");
}

LinearModel LoadModel(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadFileText(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kMalformed,
                fmt::format("{}: {}", path.string(), e.what()));
  }
  return ModelFromJson(j);
}

Probabilities Softmax(std::span<const double> logits) {
  Probabilities p(logits.size(), 0.0);
  if (logits.empty()) return p;
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    p[j] = std::exp(logits[j] - top);
    sum += p[j];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> Logits(const LinearModel& model, const FeatureVector& f) {
  const int m = model.num_classes();
  std::vector<double> z(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    double acc = model.biases[j];
    for (int k = 0; k < kFeatureCount; ++k) {
      acc += model.weight(j, k) * f.values[k];
    }
    z[j] = acc;
  }
  return z;
}

Probabilities PredictProba(const LinearModel& model, const FeatureVector& f) {
  if (f.layout_version != model.layout_version) {
    throw Error(Errc::kLayoutMismatch,
                fmt::format("feature layout {} does not match model layout {}",
                            f.layout_version, model.layout_version));
  }
  return Softmax(Logits(model, f));
}

int Argmax(std::span<const double> probs) {
  int best = 0;
  for (std::size_t j = 1; j < probs.size(); ++j) {
    if (probs[j] > probs[best]) best = static_cast<int>(j);
  }
  return best;
}

void Stage1Filter(const LinearModel& model, std::span<TileRecord> records,
                  std::span<const FeatureVector> features, double threshold) {
  if (model.class_set != ClassSet::kBackgroundCellular) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("stage-1 filter needs a {} model, got {}",
                            ClassSetName(ClassSet::kBackgroundCellular),
                            ClassSetName(model.class_set)));
  }
  if (records.size() != features.size()) {
    throw Error(Errc::kShapeMismatch,
                fmt::format("{} records but {} feature vectors",
                            records.size(), features.size()));
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double p = PredictProba(model, features[i])[kCellularIndex];
    TileRecord& r = records[i];
    r.stage1_prob_cellular = p;
    if (r.kept && p < threshold) {
      r.kept = false;
      r.discard_reason = DiscardReason::kBackground;
    }
  }
}

std::string TileKey::ToString() const {
  return fmt::format("({}, {}, {})", slide_id, x, y);
}

ScoreTable ParseExternalScores(std::string_view text, std::string_view source) {
  const CsvTable csv = ParseCsv(text, source);
  if (csv.header.size() < 5 || csv.header[0] != "slide_id" ||
      csv.header[1] != "x" || csv.header[2] != "y") {
    throw Error(Errc::kMalformed,
                fmt::format("{}: header must be slide_id,x,y,p_<class>,... "
                            "with at least two classes",
                            source));
  }
  ScoreTable table;
  for (std::size_t c = 3; c < csv.header.size(); ++c) {
    const std::string& name = csv.header[c];
    if (name.size() < 3 || name.compare(0, 2, "p_") != 0) {
      throw Error(Errc::kMalformed,
                  fmt::format("{}: column '{}' must be named p_<class>", source,
                              name));
    }
    table.class_names.push_back(name.substr(2));
  }
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& cells = csv.rows[r];
    const std::string where = fmt::format("{}: row {}", source, r + 2);
    TileKey key{cells[0], ParseInt(cells[1], where), ParseInt(cells[2], where)};
    if (key.slide_id.empty()) {
      throw Error(Errc::kMalformed, fmt::format("{}: empty slide_id", where));
    }
    Probabilities p;
    double sum = 0.0;
    for (std::size_t c = 3; c < cells.size(); ++c) {
      const double v = ParseDouble(cells[c], where);
      if (v < 0.0) {
        throw Error(Errc::kMalformed,
                    fmt::format("{}: negative probability {}", where, v));
      }
      p.push_back(v);
      sum += v;
    }
    if (sum < 0.99 || sum > 1.01) {
      throw Error(Errc::kMalformed,
                  fmt::format("{}: probabilities sum to {}, outside "
                              "[0.99, 1.01]",
                              where, sum));
    }
    for (double& v : p) v /= sum;
    const std::string name = key.ToString();
    if (!table.scores.emplace(std::move(key), std::move(p)).second) {
      throw Error(Errc::kDuplicateKey,
                  fmt::format("{}: duplicate tile key {}", where, name));
    }
  }
  return table;
}

ScoreTable LoadExternalScores(const std::filesystem::path& path) {
  return ParseExternalScores(ReadFileText(path), path.string());
}

void WriteScores(const std::filesystem::path& path, const ScoreTable& table) {
  std::string out = "slide_id,x,y";
  for (const auto& name : table.class_names) out += ",p_" + name;
  out += '\n';
  for (const auto& [key, probs] : table.scores) {
    out += fmt::format("{},{},{}", key.slide_id, key.x, key.y);
    for (double v : probs) out += fmt::format(",{}", v);
    out += '\n';
  }
  WriteFileAtomic(path, out);
}

std::string_view AggregateMethodName(AggregateMethod method) {
  switch (method) {
    case AggregateMethod::kMean:
      return "mean";
    case AggregateMethod::kMajority:
      return "majority";
    case AggregateMethod::kMaxConfidence:
      return "max_confidence";
  }
  return "unknown";
}

AggregateMethod ParseAggregateMethod(std::string_view name) {
  if (name == "mean") return AggregateMethod::kMean;
  if (name == "majority") return AggregateMethod::kMajority;
  if (name == "max_confidence") return AggregateMethod::kMaxConfidence;
  throw Error(Errc::kInvalidArgument,
              fmt::format("unknown aggregation method '{}'", name));
}

namespace {

// Sums each class column in sorted order so the result is independent of
// tile order down to the last bit.
Probabilities MeanOf(std::span<const Probabilities> tiles) {
  const std::size_t m = tiles.front().size();
  Probabilities out(m, 0.0);
  std::vector<double> column(tiles.size());
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < tiles.size(); ++i) column[i] = tiles[i][j];
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (double v : column) sum += v;
    out[j] = sum / static_cast<double>(tiles.size());
  }
  double total = 0.0;
  for (double v : out) total += v;
  if (total > 0.0) {
    for (double& v : out) v /= total;
  }
  return out;
}

}  // namespace

Probabilities AggregateSlide(std::span<const Probabilities> tile_probs,
                             AggregateMethod method) {
  if (tile_probs.empty()) {
    throw Error(Errc::kEmptyInput, "slide has no kept tiles to aggregate");
  }
  const std::size_t m = tile_probs.front().size();
  for (const auto& p : tile_probs) {
    if (p.size() != m) {
      throw Error(Errc::kShapeMismatch,
                  "tile distributions have different class counts");
    }
  }
  switch (method) {
    case AggregateMethod::kMean:
      return MeanOf(tile_probs);
    case AggregateMethod::kMajority: {
      std::vector<std::size_t> votes(m, 0);
      for (const auto& p : tile_probs) ++votes[Argmax(p)];
      const std::size_t top = *std::max_element(votes.begin(), votes.end());
      if (std::count(votes.begin(), votes.end(), top) > 1) {
        return MeanOf(tile_probs);
      }
      Probabilities out(m, 0.0);
      out[std::max_element(votes.begin(), votes.end()) - votes.begin()] = 1.0;
      return out;
    }
    case AggregateMethod::kMaxConfidence: {
      // Ties on the peak probability go to the lexicographically largest
      // distribution, which keeps the choice order-free.
      const Probabilities* best = &tile_probs.front();
      double best_peak = *std::max_element(best->begin(), best->end());
      for (const auto& p : tile_probs) {
        const double peak = *std::max_element(p.begin(), p.end());
        if (peak > best_peak || (peak == best_peak && p > *best)) {
          best = &p;
          best_peak = peak;
        }
      }
      return *best;
    }
  }
  return MeanOf(tile_probs);
}

}  // namespace clotpath

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
#include <map>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "clotpath/classifier.h"
#include "clotpath/csv.h"
#include "clotpath/error.h"
#include "clotpath/features.h"
#include "clotpath/parallel.h"
#include "clotpath/pipeline.h"
#include "clotpath/seed.h"
#include "clotpath/synthetic.h"
#include "clotpath/trainer.h"

namespace clotpath {

namespace fs = std::filesystem;

namespace {

// Removes everything it tracked unless Commit() ran, so a failed command
// leaves no half-written outputs behind.
class OutputGuard {
 public:
  explicit OutputGuard(const fs::path& dir) : dir_(dir) {
    if (dir.empty()) {
      throw Error(Errc::kInvalidArgument, "output directory is empty");
    }
    created_dir_ = !fs::exists(dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
      throw Error(Errc::kIo, fmt::format("cannot create output directory {}: {}",
                                         dir.string(), ec.message()));
    }
  }
  OutputGuard(const OutputGuard&) = delete;
  OutputGuard& operator=(const OutputGuard&) = delete;

  ~OutputGuard() {
    if (committed_) return;
    std::error_code ec;
    for (auto it = tracked_.rbegin(); it != tracked_.rend(); ++it) {
      fs::remove_all(*it, ec);
    }
    if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }

  fs::path Track(const fs::path& path) {
    tracked_.push_back(path);
    return path;
  }
  /// Tracks a subdirectory, creating it; only new directories are removed.
  fs::path TrackDir(const fs::path& path) {
    if (!fs::exists(path)) tracked_.push_back(path);
    fs::create_directories(path);
    return path;
  }
  const fs::path& dir() const { return dir_; }
  void Commit() { committed_ = true; }

 private:
  fs::path dir_;
  bool created_dir_ = false;
  bool committed_ = false;
  std::vector<fs::path> tracked_;
};

void WriteConfig(OutputGuard& guard, const RunConfig& config) {
  SaveRunConfig(guard.Track(guard.dir() / "config.json"), config);
}

fs::path Require(const fs::path& path, std::string_view what,
                 std::string_view producer) {
  if (path.empty() || !fs::exists(path)) {
    throw Error(Errc::kMissing,
                fmt::format("missing {} '{}' (produced by `{}`)", what,
                            path.string(), producer));
  }
  return path;
}

int Workers(const RunConfig& config) { return ResolveWorkers(config.workers); }

std::map<std::string, std::string> LabelMap(const fs::path& path) {
  std::map<std::string, std::string> out;
  for (const SlideLabel& s : ReadSlideLabels(path)) {
    if (!out.emplace(s.slide_id, s.label).second) {
      throw Error(Errc::kDuplicateKey,
                  fmt::format("{}: slide {} listed twice", path.string(),
                              s.slide_id));
    }
  }
  return out;
}

struct TileSet {
  std::vector<TileRecord> records;
  std::map<std::string, SlideEntry> slides;
};

TileSet LoadTiles(const RunConfig& config, std::string_view producer) {
  const fs::path dir = config.tiles_dir;
  if (dir.empty()) {
    throw Error(Errc::kMissing, fmt::format("--tiles directory not given (produced by `{}`)", producer));
  }
  TileSet set;
  set.records =
      ReadManifest(Require(dir / "manifest.jsonl", "tile manifest", producer));
  for (SlideEntry& e :
       ReadSlideIndex(Require(dir / "slides.csv", "slide index", producer))) {
    set.slides.emplace(e.slide_id, std::move(e));
  }
  SortRecords(set.records);
  return set;
}

// Calls fn(slide, first, count) for each run of records sharing a slide.
template <typename Fn>
void ForEachSlide(const TileSet& set, std::span<TileRecord> records, Fn&& fn) {
  std::size_t begin = 0;
  while (begin < records.size()) {
    std::size_t end = begin;
    while (end < records.size() &&
           records[end].spec.slide_id == records[begin].spec.slide_id) {
      ++end;
    }
    const std::string& id = records[begin].spec.slide_id;
    auto it = set.slides.find(id);
    if (it == set.slides.end()) {
      throw Error(Errc::kMissing,
                  fmt::format("slide {} is not in the slide index", id));
    }
    const SlideImage slide = OpenSlide(it->second.path, id);
    fn(slide, records.subspan(begin, end - begin));
    begin = end;
  }
}

}  // namespace

void CmdSynth(const RunConfig& config, std::ostream& log) {
  config.Validate();
  OutputGuard guard(config.output_dir);
  const fs::path slides_dir = guard.TrackDir(guard.dir() / "slides");
  std::vector<SyntheticSlideConfig> jobs;
  std::vector<SlideLabel> labels;
  for (const std::string& cls : config.synth.classes) {
    for (int k = 0; k < config.synth.slides_per_class; ++k) {
      SyntheticSlideConfig s;
      s.slide_id = fmt::format("{}_{:03}", cls, k);
      s.width_px = config.synth.width_px;
      s.height_px = config.synth.height_px;
      s.class_label = ParseClotClass(cls);
      s.blob_count = config.synth.blob_count;
      s.blob_radius_min_px = config.synth.blob_radius_min_px;
      s.blob_radius_max_px = config.synth.blob_radius_max_px;
      s.seed = StageSeed(config, "synth/" + s.slide_id);
      guard.Track(slides_dir / (s.slide_id + ".png"));
      guard.Track(slides_dir / (s.slide_id + "_mask.png"));
      labels.push_back({s.slide_id, cls});
      jobs.push_back(std::move(s));
    }
  }
  ParallelFor(jobs.size(), Workers(config), [&](std::size_t i) {
    const auto& s = jobs[i];
    WriteSyntheticSlidePng(s, slides_dir / (s.slide_id + ".png"),
                           slides_dir / (s.slide_id + "_mask.png"));
  });
  WriteSlideLabels(guard.Track(guard.dir() / "labels.csv"), labels);
  WriteConfig(guard, config);
  guard.Commit();
  fmt::print(log, "synth: wrote {} slides to {}\n", jobs.size(),
             slides_dir.string());
}

void CmdTile(const RunConfig& config, std::ostream& log) {
  config.Validate();
  if (config.inputs.empty()) {
    throw Error(Errc::kMissing, "tile: no slide inputs given (--input)");
  }
  std::vector<SlideEntry> entries;
  for (const std::string& input : config.inputs) {
    for (SlideEntry& e : DiscoverSlides(input)) {
      e.path = fs::absolute(e.path);
      if (!e.mask_path.empty()) e.mask_path = fs::absolute(e.mask_path);
      entries.push_back(std::move(e));
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const SlideEntry& a, const SlideEntry& b) {
              return a.slide_id < b.slide_id;
            });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].slide_id == entries[i - 1].slide_id) {
      throw Error(Errc::kDuplicateKey,
                  fmt::format("two slides share the id {}: {} and {}",
                              entries[i].slide_id, entries[i - 1].path.string(),
                              entries[i].path.string()));
    }
  }

  OutputGuard guard(config.output_dir);
  TilingOptions options;
  options.tile_size = config.tile_size;
  options.stride = config.stride;
  options.edge_policy = config.edge_policy;
  options.workers = Workers(config);
  if (config.save_patches) {
    options.patch_dir = guard.TrackDir(guard.dir() / "patches");
  }
  std::vector<TileRecord> records;
  for (const SlideEntry& e : entries) {
    const SlideImage slide = OpenSlide(e.path, e.slide_id);
    std::optional<SlideImage> mask;
    if (!e.mask_path.empty()) mask = OpenSlide(e.mask_path, e.slide_id + "_mask");
    std::vector<TileRecord> tiles =
        TileAndMeasure(slide, options, mask ? &*mask : nullptr);
    std::move(tiles.begin(), tiles.end(), std::back_inserter(records));
  }
  SortRecords(records);
  WriteManifest(guard.Track(guard.dir() / "manifest.jsonl"), records);
  WriteSlideIndex(guard.Track(guard.dir() / "slides.csv"), entries);
  WriteConfig(guard, config);
  guard.Commit();
  fmt::print(log, "tile: {} slides, {} tiles\n", entries.size(),
             records.size());
}

void CmdFilter(const RunConfig& config, std::ostream& log) {
  config.Validate();
  TileSet set = LoadTiles(config, "tile");
  ApplyContentFilter(set.records, config.min_content_ratio);
  if (!config.stage1.model_path.empty()) {
    const LinearModel model = LoadModel(
        Require(config.stage1.model_path, "stage-1 model", "train-bg"));
    ForEachSlide(set, set.records,
                 [&](const SlideImage& slide, std::span<TileRecord> tiles) {
                   const auto features =
                       ComputeStage1Features(slide, tiles, Workers(config));
                   Stage1Filter(model, tiles, features,
                                config.stage1.threshold);
                 });
  }
  std::vector<SlideEntry> entries;
  for (const auto& [id, e] : set.slides) entries.push_back(e);

  OutputGuard guard(config.output_dir);
  WriteManifest(guard.Track(guard.dir() / "manifest.jsonl"), set.records);
  WriteSlideIndex(guard.Track(guard.dir() / "slides.csv"), entries);
  WriteConfig(guard, config);
  guard.Commit();
  std::size_t kept = 0, low = 0, background = 0;
  for (const TileRecord& r : set.records) {
    kept += r.kept ? 1 : 0;
    low += r.discard_reason == DiscardReason::kLowContent ? 1 : 0;
    background += r.discard_reason == DiscardReason::kBackground ? 1 : 0;
  }
  fmt::print(log, "filter: {} tiles, {} kept, {} low_content, {} background\n",
             set.records.size(), kept, low, background);
}

void CmdFeatures(const RunConfig& config, int stage, std::ostream& log) {
  config.Validate();
  if (stage != 1 && stage != 2) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("feature stage must be 1 or 2, got {}", stage));
  }
  TileSet set = LoadTiles(config, stage == 1 ? "tile" : "filter");
  std::vector<TileRecord> selected;
  for (const TileRecord& r : set.records) {
    if (stage == 1 ? r.label.has_value() : r.kept) selected.push_back(r);
  }
  std::map<std::string, std::string> labels;
  if (stage == 2 && !config.labels_path.empty()) {
    labels = LabelMap(Require(config.labels_path, "labels file", "synth"));
  }
  std::optional<SplitAssignment> split;
  if (!config.split_path.empty()) {
    split = ReadSplit(Require(config.split_path, "split file", "split"));
  }
  AugmentationConfig augmentation = config.augmentation;
  augmentation.seed = StageSeed(config, "augment");

  std::vector<FeatureRow> rows;
  rows.reserve(selected.size());
  ForEachSlide(set, selected, [&](const SlideImage& slide,
                                  std::span<TileRecord> tiles) {
    const std::string& id = slide.slide_id();
    std::vector<FeatureVector> features;
    if (stage == 1) {
      features = ComputeStage1Features(slide, tiles, Workers(config));
    } else {
      bool train_slide = false;
      if (split && config.augment_training) {
        auto it = split->assignment.find(id);
        train_slide = it != split->assignment.end() && it->second == Split::kTrain;
      }
      features = ComputeStage2Features(
          slide, tiles, augmentation,
          train_slide ? AugmentMode::kTrain : AugmentMode::kEval,
          Workers(config));
    }
    for (std::size_t i = 0; i < tiles.size(); ++i) {
      FeatureRow row;
      row.slide_id = id;
      row.x = tiles[i].spec.x;
      row.y = tiles[i].spec.y;
      row.features = features[i];
      if (stage == 1) {
        row.label = tiles[i].label;
      } else if (auto it = labels.find(id); it != labels.end()) {
        row.label = it->second;
      }
      rows.push_back(std::move(row));
    }
  });

  OutputGuard guard(config.output_dir);
  WriteFeatureCsv(guard.Track(guard.dir() / "features.csv"), rows);
  WriteConfig(guard, config);
  guard.Commit();
  fmt::print(log, "features: stage {}, {} rows\n", stage, rows.size());
}

namespace {

void TrainFromFeatures(const RunConfig& config, ClassSet set,
                       std::string_view tag, std::string_view producer,
                       std::ostream& log) {
  config.Validate();
  const std::vector<FeatureRow> rows = ReadFeatureCsv(
      Require(config.features_path, "feature file", producer));
  std::optional<SplitAssignment> split;
  if (!config.split_path.empty()) {
    split = ReadSplit(Require(config.split_path, "split file", "split"));
  }
  Dataset train;
  Dataset val;
  for (const FeatureRow& row : rows) {
    if (!row.label) {
      throw Error(Errc::kMissing,
                  fmt::format("feature row ({}, {}, {}) has no label",
                              row.slide_id, row.x, row.y));
    }
    Dataset* target = nullptr;
    if (split) {
      auto it = split->assignment.find(row.slide_id);
      if (it == split->assignment.end()) continue;
      if (it->second == Split::kTrain) target = &train;
      if (it->second == Split::kValidation) target = &val;
    } else {
      // Without a split file, 15% of tiles are held out by a per-tile hash.
      const std::string identity =
          fmt::format("{}_x{}_y{}", row.slide_id, row.x, row.y);
      const double u =
          UnitInterval(DeriveSeed(StageSeed(config, "holdout"), identity));
      target = u < 0.15 ? &val : &train;
    }
    if (!target) continue;
    target->x.push_back(row.features);
    target->y.push_back(ClassIndex(set, *row.label));
  }

  TrainConfig train_config = config.train;
  train_config.seed = StageSeed(config, std::string(tag));
  OutputGuard guard(config.output_dir);
  TrainResult result;
  if (config.search.trials > 0) {
    SearchConfig search = config.search;
    search.seed = StageSeed(config, std::string(tag) + "/search");
    search.workers = Workers(config);
    SearchResult sr = RandomSearch(train, val, set, train_config, search);
    WriteTrialsCsv(guard.Track(guard.dir() / "trials.csv"), sr.trials);
    result = std::move(sr.best);
    fmt::print(log, "{}: best of {} trials is #{} (lr {:.3g})\n", tag,
               sr.trials.size(), sr.best_index, sr.best_trial().lr);
  } else {
    result = Train(train, val, set, train_config);
  }
  SaveModel(guard.Track(guard.dir() / "model.json"), result.model);
  WriteHistoryCsv(guard.Track(guard.dir() / "history.csv"), result.history);
  WriteConfig(guard, config);
  guard.Commit();
  fmt::print(log,
             "{}: {} train / {} val rows, {} epochs, train accuracy {:.4f}, "
             "val WMCLL {:.4f}\n",
             tag, train.size(), val.size(), result.model.metadata.epochs,
             DatasetAccuracy(result.model, train),
             result.model.metadata.final_val_wmcll);
}

}  // namespace

void CmdTrainBackground(const RunConfig& config, std::ostream& log) {
  TrainFromFeatures(config, ClassSet::kBackgroundCellular, "train/stage1",
                    "features --stage 1", log);
}

void CmdTrainClot(const RunConfig& config, std::ostream& log) {
  TrainFromFeatures(config, ClassSet::kClotOrigin, "train/stage2",
                    "features --stage 2", log);
}

void CmdPredict(const RunConfig& config, std::ostream& log) {
  config.Validate();
  const LinearModel model =
      LoadModel(Require(config.stage2.model_path, "model", "train-clot"));
  const std::vector<FeatureRow> rows =
      ReadFeatureCsv(Require(config.features_path, "feature file", "features"));
  ScoreTable table;
  table.class_names = ClassNames(model.class_set);
  for (const FeatureRow& row : rows) {
    TileKey key{row.slide_id, row.x, row.y};
    if (table.scores.count(key)) {
      throw Error(Errc::kDuplicateKey,
                  fmt::format("feature file lists tile {} twice", key.ToString()));
    }
    table.scores.emplace(std::move(key), PredictProba(model, row.features));
  }
  OutputGuard guard(config.output_dir);
  WriteScores(guard.Track(guard.dir() / "scores.csv"), table);
  WriteConfig(guard, config);
  guard.Commit();
  fmt::print(log, "predict: scored {} tiles\n", table.scores.size());
}

std::vector<EvalReport> CmdEvaluate(const RunConfig& config,
                                    std::ostream& log) {
  config.Validate();
  std::vector<std::string> score_files = config.scores_paths;
  if (score_files.empty() && !config.stage2.scores_path.empty()) {
    score_files.push_back(config.stage2.scores_path);
  }
  if (score_files.empty()) {
    throw Error(Errc::kMissing, "evaluate: no score file given (--scores)");
  }
  std::map<std::string, std::string> labels =
      LabelMap(Require(config.labels_path, "labels file", "synth"));
  if (!config.split_path.empty()) {
    const SplitAssignment split =
        ReadSplit(Require(config.split_path, "split file", "split"));
    const Split wanted = ParseSplit(config.eval.split);
    std::erase_if(labels, [&](const auto& kv) {
      auto it = split.assignment.find(kv.first);
      return it == split.assignment.end() || it->second != wanted;
    });
  }
  std::optional<std::vector<TileKey>> tiles;
  if (!config.manifest_path.empty()) {
    tiles.emplace();
    for (const TileRecord& r :
         ReadManifest(Require(config.manifest_path, "manifest", "filter"))) {
      if (r.kept) tiles->push_back(KeyOf(r.spec));
    }
  }
  std::vector<EvalLevel> levels;
  if (config.eval.level != "slide") levels.push_back(EvalLevel::kTile);
  if (config.eval.level != "tile") levels.push_back(EvalLevel::kSlide);

  std::set<std::string> stems;
  for (const auto& f : score_files) stems.insert(fs::path(f).stem().string());
  const bool unique_stems = stems.size() == score_files.size();

  std::vector<EvalReport> reports;
  for (const std::string& file : score_files) {
    const ScoreTable table =
        LoadExternalScores(Require(file, "score file", "predict"));
    EvalInput input;
    input.class_names = table.class_names;
    input.scores = table.scores;
    input.slide_labels = labels;
    input.tiles = tiles;
    input.aggregate = config.stage2.aggregate;
    input.weights = config.eval.class_weights;
    input.inverse_frequency_weights = config.eval.inverse_frequency;
    const std::string name =
        unique_stems ? fs::path(file).stem().string() : file;
    for (EvalLevel level : levels) {
      reports.push_back(Evaluate(input, level, name));
    }
  }

  nlohmann::ordered_json j;
  j["aggregate"] = AggregateMethodName(config.stage2.aggregate);
  j["reports"] = nlohmann::ordered_json::array();
  for (const EvalReport& r : reports) j["reports"].push_back(ReportToJson(r));
  const std::string table = FormatReportTable(reports);

  OutputGuard guard(config.output_dir);
  WriteFileAtomic(guard.Track(guard.dir() / "report.json"), j.dump(2) + "\n");
  WriteFileAtomic(guard.Track(guard.dir() / "report.txt"), table);
  WriteConfig(guard, config);
  guard.Commit();
  log << table;
  return reports;
}

void CmdSplit(const RunConfig& config, std::ostream& log) {
  config.Validate();
  const std::vector<SlideLabel> slides =
      ReadSlideLabels(Require(config.labels_path, "labels file", "synth"));
  const SplitAssignment split =
      SplitDataset(slides, config.split, StageSeed(config, "split"));
  for (const std::string& w : split.warnings) {
    fmt::print(log, "split: warning: {}\n", w);
  }
  OutputGuard guard(config.output_dir);
  WriteSplit(guard.Track(guard.dir() / "split.csv"), split);
  WriteConfig(guard, config);
  guard.Commit();
  fmt::print(log, "split: {} train, {} validation, {} test\n",
             split.SlidesIn(Split::kTrain).size(),
             split.SlidesIn(Split::kValidation).size(),
             split.SlidesIn(Split::kTest).size());
}

std::vector<EvalReport> CmdRunAll(const RunConfig& config, bool synthetic,
                                  std::ostream& log) {
  config.Validate();
  const fs::path out = config.output_dir;
  RunConfig base = config;
  auto stage = [&](const char* dir) {
    RunConfig c = base;
    c.output_dir = (out / dir).string();
    return c;
  };

  if (synthetic) {
    CmdSynth(stage("synth"), log);
    base.inputs = {(out / "synth" / "slides").string()};
    base.labels_path = (out / "synth" / "labels.csv").string();
  } else if (base.inputs.empty() || base.labels_path.empty()) {
    throw Error(Errc::kMissing,
                "run-all needs --synthetic or both --input and --labels");
  }

  CmdSplit(stage("split"), log);
  base.split_path = (out / "split" / "split.csv").string();

  CmdTile(stage("tiles"), log);
  base.tiles_dir = (out / "tiles").string();

  if (base.stage1.model_path.empty()) {
    const auto records = ReadManifest(out / "tiles" / "manifest.jsonl");
    const bool labeled = std::any_of(records.begin(), records.end(),
                                     [](const TileRecord& r) { return r.label.has_value(); });
    if (labeled) {
      CmdFeatures(stage("stage1_features"), 1, log);
      RunConfig c = stage("stage1_model");
      c.features_path = (out / "stage1_features" / "features.csv").string();
      CmdTrainBackground(c, log);
      base.stage1.model_path = (out / "stage1_model" / "model.json").string();
    } else {
      fmt::print(log,
                 "run-all: no mask labels and no --stage1-model; stage-1 "
                 "filter skipped\n");
    }
  }

  CmdFilter(stage("filtered"), log);
  base.tiles_dir = (out / "filtered").string();
  base.manifest_path = (out / "filtered" / "manifest.jsonl").string();

  if (base.stage2.scores_path.empty()) {
    CmdFeatures(stage("features"), 2, log);
    base.features_path = (out / "features" / "features.csv").string();
    if (base.stage2.model_path.empty()) {
      CmdTrainClot(stage("stage2_model"), log);
      base.stage2.model_path = (out / "stage2_model" / "model.json").string();
    }
    CmdPredict(stage("predict"), log);
    base.scores_paths = {(out / "predict" / "scores.csv").string()};
  } else {
    base.scores_paths = {base.stage2.scores_path};
  }

  std::vector<EvalReport> reports = CmdEvaluate(stage("report"), log);
  SaveRunConfig(out / "config.json", base);
  return reports;
}

namespace {

std::string PreScanConfig(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string_view arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.starts_with("--config=")) return std::string(arg.substr(9));
  }
  return {};
}

bool HasArg(int argc, const char* const* argv, std::string_view flag) {
  for (int i = 1; i < argc; ++i) {
    const std::string_view arg = argv[i];
    if (arg == flag || (arg.starts_with(flag) && arg.size() > flag.size() &&
                        arg[flag.size()] == '=')) {
      return true;
    }
  }
  return false;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  RunConfig cfg;
  std::string config_path;
  bool stride_given = false;
  try {
    config_path = PreScanConfig(argc, argv);
    if (!config_path.empty()) {
      LoadRunConfig(config_path, cfg);
      stride_given = nlohmann::json::parse(ReadFileText(config_path),
                                           nullptr, false)
                         .contains("stride");
    }
    if (const char* env = std::getenv(std::string(kWorkersEnvVar).c_str())) {
      cfg.workers = ParseInt(env, kWorkersEnvVar);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App app{"clotpath: tile, filter, classify and evaluate whole-slide "
               "clot images"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  std::string edge_policy(EdgePolicyName(cfg.edge_policy));
  std::string aggregate(AggregateMethodName(cfg.stage2.aggregate));
  int feature_stage = 2;
  bool synthetic = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path,
                    "JSON run config; flags given on the command line win");
    sub->add_option("--out", cfg.output_dir, "Output directory");
    sub->add_option("--seed", cfg.seed,
                    "Run seed; every stage and tile seed derives from it");
    sub->add_option("--workers", cfg.workers,
                    fmt::format("Worker threads (< 1: all cores; env {})",
                                kWorkersEnvVar));
  };
  auto tiling = [&](CLI::App* sub) {
    sub->add_option("--input", cfg.inputs,
                    "Slide files or directories (.png, .tif, .tiff)");
    sub->add_option("--tile-size", cfg.tile_size, "Tile edge in pixels");
    sub->add_option("--stride", cfg.stride, "Tile stride in pixels");
    sub->add_option("--edge-policy", edge_policy, "Edge tiles: drop or pad")
        ->check(CLI::IsMember({"drop", "pad"}));
    sub->add_flag("--save-patches", cfg.save_patches,
                  "Also write every tile as PNG under <out>/patches");
  };
  auto filtering = [&](CLI::App* sub) {
    sub->add_option("--min-content-ratio", cfg.min_content_ratio,
                    "Tiles at or below this Otsu foreground ratio are "
                    "discarded");
    sub->add_option("--stage1-model", cfg.stage1.model_path,
                    "Background/cellular model applied after the content "
                    "filter");
    sub->add_option("--stage1-threshold", cfg.stage1.threshold,
                    "Minimum P(cellular) to keep a tile");
  };
  auto augmenting = [&](CLI::App* sub) {
    auto& a = cfg.augmentation;
    sub->add_option("--apply-probability", a.apply_probability,
                    "Probability each training augmentation fires");
    sub->add_option("--sharpness-factor", a.sharpness_factor,
                    "Sharpness adjustment factor");
    sub->add_option("--brightness", a.brightness, "Color jitter brightness");
    sub->add_option("--hue", a.hue, "Color jitter hue");
    sub->add_option("--saturation", a.saturation, "Color jitter saturation");
    sub->add_option("--rotate-limit", a.rotate_limit_deg,
                    "Rotation limit in degrees");
    sub->add_option("--resize-to", a.resize_to, "Stage-2 input edge");
    sub->add_flag("--augment,!--no-augment", cfg.augment_training,
                  "Augment training-split tiles");
  };
  auto hyperparameters = [&](CLI::App* sub) {
    auto& t = cfg.train;
    sub->add_option("--max-epochs", t.max_epochs, "Epoch limit");
    sub->add_option("--batch-size", t.batch_size, "Mini-batch size");
    sub->add_option("--lr", t.lr, "AdamW learning rate when not searching");
    sub->add_option("--weight-decay", t.weight_decay,
                    "Decoupled weight decay");
    sub->add_option("--patience", t.early_stop.patience,
                    "Early-stopping patience in epochs");
    sub->add_option("--min-delta", t.early_stop.min_delta,
                    "Minimum validation WMCLL improvement");
    sub->add_flag("--early-stop,!--no-early-stop", t.early_stop.enabled,
                  "Stop when validation WMCLL stalls");
    sub->add_option("--swa-start", t.swa.start_epoch,
                    "First epoch averaged by SWA");
    sub->add_flag("--swa,!--no-swa", t.swa.enabled,
                  "Return the stochastic weight average");
    sub->add_option("--class-weights", t.class_weights,
                    "Loss weight per class")
        ->delimiter(',');
    sub->add_option("--search-trials", cfg.search.trials,
                    "Random learning-rate search trials (0: train once)");
    sub->add_option("--lr-min", cfg.search.lr_min, "Search range low end");
    sub->add_option("--lr-max", cfg.search.lr_max, "Search range high end");
  };
  auto training = [&](CLI::App* sub) {
    sub->add_option("--features", cfg.features_path, "Feature CSV");
    sub->add_option("--split", cfg.split_path, "Split CSV from `split`");
    hyperparameters(sub);
  };
  auto splitting = [&](CLI::App* sub) {
    sub->add_option("--train-ratio", cfg.split.train, "Train share");
    sub->add_option("--val-ratio", cfg.split.validation, "Validation share");
    sub->add_option("--test-ratio", cfg.split.test, "Test share");
  };
  auto synthesizing = [&](CLI::App* sub) {
    auto& s = cfg.synth;
    sub->add_option("--slides,--slides-per-class", s.slides_per_class,
                    "Slides per class");
    sub->add_option("--classes", s.classes, "Classes to generate")
        ->delimiter(',');
    sub->add_option("--width", s.width_px, "Slide width in pixels");
    sub->add_option("--height", s.height_px, "Slide height in pixels");
    sub->add_option("--blobs", s.blob_count, "Clot blobs per slide");
    sub->add_option("--blob-radius-min", s.blob_radius_min_px,
                    "Smallest blob radius");
    sub->add_option("--blob-radius-max", s.blob_radius_max_px,
                    "Largest blob radius");
  };
  auto evaluating = [&](CLI::App* sub) {
    sub->add_option("--scores", cfg.scores_paths,
                    "Tile score CSV (repeat for several models)");
    sub->add_option("--labels", cfg.labels_path, "Slide labels CSV");
    sub->add_option("--split", cfg.split_path,
                    "Split CSV; restricts evaluation to --eval-split");
    sub->add_option("--eval-split", cfg.eval.split, "Split to evaluate")
        ->check(CLI::IsMember({"train", "validation", "test"}));
    sub->add_option("--manifest", cfg.manifest_path,
                    "Filtered manifest; only kept tiles are scored");
    sub->add_option("--level", cfg.eval.level, "tile, slide or both")
        ->check(CLI::IsMember({"tile", "slide", "both"}));
    sub->add_option("--aggregate", aggregate,
                    "Tile-to-slide rule: mean, majority, max_confidence")
        ->check(CLI::IsMember({"mean", "majority", "max_confidence"}));
    sub->add_option("--weights", cfg.eval.class_weights,
                    "WMCLL class weights (default all 1)")
        ->delimiter(',');
    sub->add_flag("--inverse-frequency", cfg.eval.inverse_frequency,
                  "Use N / (M * count_j) class weights");
  };

  CLI::App* synth = app.add_subcommand("synth", "Generate synthetic slides");
  common(synth);
  synthesizing(synth);

  CLI::App* tile = app.add_subcommand("tile", "Tile slides and measure content");
  common(tile);
  tiling(tile);

  CLI::App* filter = app.add_subcommand(
      "filter", "Apply the content filter and optional stage-1 model");
  common(filter);
  filter->add_option("--tiles", cfg.tiles_dir, "Output directory of `tile`");
  filtering(filter);

  CLI::App* features =
      app.add_subcommand("features", "Extract tile feature vectors");
  common(features);
  features->add_option("--tiles", cfg.tiles_dir,
                       "Directory with manifest.jsonl and slides.csv");
  features->add_option("--stage", feature_stage,
                       "1: mask-labeled tiles at 128 px; 2: kept tiles at "
                       "256 px")
      ->check(CLI::IsMember({1, 2}));
  features->add_option("--labels", cfg.labels_path, "Slide labels CSV");
  features->add_option("--split", cfg.split_path,
                       "Split CSV; training slides are augmented");
  augmenting(features);

  CLI::App* train_bg =
      app.add_subcommand("train-bg", "Train the background/cellular model");
  common(train_bg);
  training(train_bg);

  CLI::App* train_clot =
      app.add_subcommand("train-clot", "Train the CE/LAA model");
  common(train_clot);
  training(train_clot);

  CLI::App* predict =
      app.add_subcommand("predict", "Score feature rows with a model");
  common(predict);
  predict->add_option("--features", cfg.features_path, "Feature CSV");
  predict->add_option("--model", cfg.stage2.model_path, "Model JSON");

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Report WMCLL and classification metrics");
  common(evaluate);
  evaluating(evaluate);

  CLI::App* split = app.add_subcommand("split", "Stratified slide split");
  common(split);
  split->add_option("--labels", cfg.labels_path, "Slide labels CSV");
  splitting(split);

  CLI::App* run_all =
      app.add_subcommand("run-all", "Run the whole pipeline end to end");
  common(run_all);
  run_all->add_flag("--synthetic", synthetic, "Generate synthetic input first");
  synthesizing(run_all);
  tiling(run_all);
  filtering(run_all);
  augmenting(run_all);
  hyperparameters(run_all);
  run_all->add_option("--stage2-model", cfg.stage2.model_path,
                      "Use this CE/LAA model instead of training one");
  run_all->add_option("--stage2-scores", cfg.stage2.scores_path,
                      "Evaluate these external tile scores instead");
  run_all->add_option("--labels", cfg.labels_path, "Slide labels CSV");
  run_all->add_option("--level", cfg.eval.level, "tile, slide or both")
      ->check(CLI::IsMember({"tile", "slide", "both"}));
  run_all->add_option("--aggregate", aggregate,
                      "Tile-to-slide rule: mean, majority, max_confidence")
      ->check(CLI::IsMember({"mean", "majority", "max_confidence"}));
  splitting(run_all);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  // Without an explicit stride, tiles abut.
  if (!stride_given && !HasArg(argc, argv, "--stride")) cfg.stride = cfg.tile_size;
  try {
    cfg.edge_policy = ParseEdgePolicy(edge_policy);
    cfg.stage2.aggregate = ParseAggregateMethod(aggregate);
    if (synth->parsed()) CmdSynth(cfg, out);
    if (tile->parsed()) CmdTile(cfg, out);
    if (filter->parsed()) CmdFilter(cfg, out);
    if (features->parsed()) CmdFeatures(cfg, feature_stage, out);
    if (train_bg->parsed()) CmdTrainBackground(cfg, out);
    if (train_clot->parsed()) CmdTrainClot(cfg, out);
    if (predict->parsed()) CmdPredict(cfg, out);
    if (evaluate->parsed()) CmdEvaluate(cfg, out);
    if (split->parsed()) CmdSplit(cfg, out);
    if (run_all->parsed()) CmdRunAll(cfg, synthetic, out);
  } catch (const Error& e) {
    err << "error [" << ErrcName(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace clotpath

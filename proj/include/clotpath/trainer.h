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
#include <span>
#include <vector>

#include "clotpath/classifier.h"
#include "clotpath/features.h"

namespace clotpath {

/// Feature rows with class indices.
struct Dataset {
  std::vector<FeatureVector> x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
};

struct OptimizerState {
  std::int64_t t = 0;
  std::vector<double> m;
  std::vector<double> v;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  /// Zero moments for `n` parameters.
  static OptimizerState ForParams(std::size_t n, double lr = 3e-4,
                                  double weight_decay = 0.01);
};

/// One AdamW step with decoupled weight decay:
///   params -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * params).
/// Throws kShapeMismatch, or kNonFinite naming the first bad index.
void AdamWStep(OptimizerState& state, std::span<double> params,
               std::span<const double> grads);

/// Flattened parameters: weights row-major then biases.
std::vector<double> FlattenParams(const LinearModel& model);
void UnflattenParams(std::span<const double> params, LinearModel& model);

struct LossAndGrads {
  double loss = 0.0;
  /// Same layout as FlattenParams.
  std::vector<double> grads;
};

/// Weighted log loss of `model` on the samples selected by `indices`
/// (all samples when empty) and its exact gradient. The loss is computed
/// through log-softmax, so it matches the WMCLL away from the clipping
/// floor. Empty `class_weights` means all ones.
LossAndGrads ComputeLossAndGrads(const LinearModel& model,
                                 const Dataset& data,
                                 std::span<const double> class_weights,
                                 std::span<const std::size_t> indices = {});

/// Running mean: (n * avg + next) / (n + 1). n = 0 returns `next`.
std::vector<double> SwaUpdate(std::span<const double> running_avg,
                              std::span<const double> next, std::int64_t n);

/// Counts epochs without an improvement of at least min_delta.
class EarlyStopping {
 public:
  EarlyStopping(int patience, double min_delta);

  /// Feeds one epoch's monitored value; true when training should stop.
  bool Update(double value);

  double best() const { return best_; }
  int best_epoch() const { return best_epoch_; }
  bool improved_last() const { return improved_last_; }

 private:
  int patience_;
  double min_delta_;
  double best_;
  int best_epoch_ = 0;
  int epoch_ = 0;
  int stale_ = 0;
  bool improved_last_ = false;
};

struct EarlyStopConfig {
  bool enabled = true;
  int patience = 10;
  double min_delta = 1e-4;
};

struct SwaConfig {
  bool enabled = true;
  /// 1-based epoch from which end-of-epoch weights are averaged.
  int start_epoch = 150;
};

struct TrainConfig {
  int max_epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double lr = 3e-4;
  double weight_decay = 0.01;
  EarlyStopConfig early_stop;
  SwaConfig swa;
  /// Empty means all ones.
  std::vector<double> class_weights;
  /// Optimize on z-scored features and fold the scaling back into the
  /// returned weights.
  bool standardize = true;

  /// Throws kInvalidArgument on out-of-range fields.
  void Validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_wmcll = 0.0;
  double lr = 0.0;
  bool stopped_early = false;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_wmcll = 0.0;
  /// Number of checkpoints in the SWA average (0: best checkpoint returned).
  int swa_models = 0;
  bool stopped_early = false;
};

struct TrainResult {
  LinearModel model;
  TrainHistory history;
};

/// Mini-batch AdamW from a zero model. Each epoch shuffles with a seed
/// derived from (config.seed, epoch). Returns the SWA average when enabled
/// and at least one epoch reached swa.start_epoch, else the checkpoint with
/// the lowest validation WMCLL. Throws kDivergence naming the epoch if the
/// loss stops being finite.
TrainResult Train(const Dataset& train, const Dataset& val, ClassSet set,
                  const TrainConfig& config);

/// Validation WMCLL of `model` on `data`.
double DatasetWmcll(const LinearModel& model, const Dataset& data,
                    std::span<const double> class_weights = {});

/// Fraction of samples whose argmax matches the label.
double DatasetAccuracy(const LinearModel& model, const Dataset& data);

void WriteHistoryCsv(const std::filesystem::path& path,
                     const TrainHistory& history);

struct TrialResult {
  int trial = 0;
  double lr = 0.0;
  double val_wmcll = 0.0;
  int epochs_run = 0;
};

struct SearchConfig {
  int trials = 50;
  double lr_min = 1e-6;
  double lr_max = 1e-3;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct SearchResult {
  int best_index = 0;
  std::vector<TrialResult> trials;
  TrainResult best;

  const TrialResult& best_trial() const { return trials[best_index]; }
};

/// Log-uniform learning rate per trial, drawn from a seed derived from
/// (search.seed, trial index). Trials may run concurrently; the best is the
/// lowest final validation WMCLL with ties going to the earlier trial.
SearchResult RandomSearch(const Dataset& train, const Dataset& val,
                          ClassSet set, const TrainConfig& base,
                          const SearchConfig& search);

/// Learning rate of trial `index`.
double SampleTrialLr(const SearchConfig& search, int index);

void WriteTrialsCsv(const std::filesystem::path& path,
                    std::span<const TrialResult> trials);

}  // namespace clotpath

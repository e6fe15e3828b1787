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

#include "clotpath/trainer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

#include <fmt/format.h>

#include "clotpath/error.h"
#include "clotpath/metrics.h"
#include "clotpath/parallel.h"
#include "clotpath/seed.h"
#include "clotpath/tiler.h"

namespace clotpath {

OptimizerState OptimizerState::ForParams(std::size_t n, double lr,
                                         double weight_decay) {
  OptimizerState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.lr = lr;
  s.weight_decay = weight_decay;
  return s;
}

void AdamWStep(OptimizerState& state, std::span<double> params,
               std::span<const double> grads) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw Error(Errc::kShapeMismatch,
                fmt::format("AdamW shapes differ: params {}, grads {}, "
                            "moments {}/{}",
                            params.size(), grads.size(), state.m.size(),
                            state.v.size()));
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw Error(Errc::kNonFinite,
                  fmt::format("gradient {} is not finite ({})", i, grads[i]));
    }
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= state.lr * (m_hat / (std::sqrt(v_hat) + state.eps) +
                             state.weight_decay * params[i]);
  }
}

std::vector<double> FlattenParams(const LinearModel& model) {
  std::vector<double> p(model.weights);
  p.insert(p.end(), model.biases.begin(), model.biases.end());
  return p;
}

void UnflattenParams(std::span<const double> params, LinearModel& model) {
  if (params.size() != model.weights.size() + model.biases.size()) {
    throw Error(Errc::kShapeMismatch,
                fmt::format("{} parameters for a model with {}", params.size(),
                            model.weights.size() + model.biases.size()));
  }
  std::copy_n(params.begin(), model.weights.size(), model.weights.begin());
  std::copy(params.begin() + static_cast<std::ptrdiff_t>(model.weights.size()),
            params.end(), model.biases.begin());
}

LossAndGrads ComputeLossAndGrads(const LinearModel& model,
                                 const Dataset& data,
                                 std::span<const double> class_weights,
                                 std::span<const std::size_t> indices) {
  const int m = model.num_classes();
  const std::size_t count = indices.empty() ? data.size() : indices.size();
  if (count == 0) throw Error(Errc::kEmptyInput, "loss of an empty batch");
  if (!class_weights.empty() &&
      class_weights.size() != static_cast<std::size_t>(m)) {
    throw Error(Errc::kShapeMismatch,
                fmt::format("{} class weights for {} classes",
                            class_weights.size(), m));
  }
  LossAndGrads out;
  out.grads.assign(model.weights.size() + model.biases.size(), 0.0);
  double* grad_w = out.grads.data();
  double* grad_b = out.grads.data() + model.weights.size();
  const double inv_n = 1.0 / static_cast<double>(count);
  std::vector<double> z(static_cast<std::size_t>(m));
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t i = indices.empty() ? s : indices[s];
    const FeatureVector& f = data.x[i];
    const int y = data.y[i];
    const double w = class_weights.empty() ? 1.0 : class_weights[y];
    double top = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j) {
      double acc = model.biases[j];
      for (int k = 0; k < kFeatureCount; ++k) {
        acc += model.weight(j, k) * f.values[k];
      }
      z[j] = acc;
      top = std::max(top, acc);
    }
    double denom = 0.0;
    for (int j = 0; j < m; ++j) denom += std::exp(z[j] - top);
    const double log_denom = std::log(denom);
    out.loss -= w * (z[y] - top - log_denom) * inv_n;
    for (int j = 0; j < m; ++j) {
      const double p = std::exp(z[j] - top - log_denom);
      const double g = w * inv_n * (p - (j == y ? 1.0 : 0.0));
      grad_b[j] += g;
      double* row = grad_w + static_cast<std::size_t>(j) * kFeatureCount;
      for (int k = 0; k < kFeatureCount; ++k) row[k] += g * f.values[k];
    }
  }
  return out;
}

std::vector<double> SwaUpdate(std::span<const double> running_avg,
                              std::span<const double> next, std::int64_t n) {
  if (n < 0) {
    throw Error(Errc::kInvalidArgument, "SWA model count must be >= 0");
  }
  if (n == 0) return std::vector<double>(next.begin(), next.end());
  if (running_avg.size() != next.size()) {
    throw Error(Errc::kShapeMismatch,
                fmt::format("SWA average has {} values, checkpoint {}",
                            running_avg.size(), next.size()));
  }
  const double dn = static_cast<double>(n);
  std::vector<double> out(next.size());
  for (std::size_t i = 0; i < next.size(); ++i) {
    out[i] = (dn * running_avg[i] + next[i]) / (dn + 1.0);
  }
  return out;
}

EarlyStopping::EarlyStopping(int patience, double min_delta)
    : patience_(patience),
      min_delta_(min_delta),
      best_(std::numeric_limits<double>::infinity()) {
  if (patience < 1) {
    throw Error(Errc::kInvalidArgument, "early-stopping patience must be >= 1");
  }
}

bool EarlyStopping::Update(double value) {
  ++epoch_;
  improved_last_ = value < best_ - min_delta_;
  if (improved_last_) {
    best_ = value;
    best_epoch_ = epoch_;
    stale_ = 0;
    return false;
  }
  ++stale_;
  return stale_ >= patience_;
}

void TrainConfig::Validate() const {
  if (max_epochs < 1) {
    throw Error(Errc::kInvalidArgument, "max_epochs must be >= 1");
  }
  if (batch_size < 1) {
    throw Error(Errc::kInvalidArgument, "batch_size must be >= 1");
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("learning rate {} must be positive", lr));
  }
  if (weight_decay < 0.0) {
    throw Error(Errc::kInvalidArgument, "weight_decay must be >= 0");
  }
  if (early_stop.enabled && early_stop.patience < 1) {
    throw Error(Errc::kInvalidArgument, "early-stopping patience must be >= 1");
  }
  if (swa.enabled && (swa.start_epoch < 1 || swa.start_epoch >= max_epochs)) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("swa start epoch {} must lie in [1, max_epochs={})",
                            swa.start_epoch, max_epochs));
  }
  for (double w : class_weights) {
    if (!(w > 0.0)) {
      throw Error(Errc::kInvalidArgument, "class weights must be positive");
    }
  }
}

double DatasetWmcll(const LinearModel& model, const Dataset& data,
                    std::span<const double> class_weights) {
  EvalBatch batch;
  batch.num_classes = model.num_classes();
  batch.labels = data.y;
  batch.weights.assign(class_weights.begin(), class_weights.end());
  batch.probs.reserve(data.size() * static_cast<std::size_t>(batch.num_classes));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Probabilities p = PredictProba(model, data.x[i]);
    for (double v : p) {
      if (!std::isfinite(v)) {
        throw Error(Errc::kNonFinite,
                    fmt::format("model output for row {} is {}", i, v));
      }
    }
    batch.probs.insert(batch.probs.end(), p.begin(), p.end());
  }
  return Wmcll(batch);
}

double DatasetAccuracy(const LinearModel& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    correct += Argmax(PredictProba(model, data.x[i])) == data.y[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

void CheckDataset(const Dataset& d, int num_classes, const char* name) {
  if (d.size() == 0) {
    throw Error(Errc::kEmptyInput, fmt::format("{} set is empty", name));
  }
  if (d.x.size() != d.y.size()) {
    throw Error(Errc::kShapeMismatch,
                fmt::format("{} set has {} rows but {} labels", name,
                            d.x.size(), d.y.size()));
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.x[i].layout_version != kFeatureLayoutVersion) {
      throw Error(Errc::kLayoutMismatch,
                  fmt::format("{} row {} has feature layout {}", name, i,
                              d.x[i].layout_version));
    }
    if (d.y[i] < 0 || d.y[i] >= num_classes) {
      throw Error(Errc::kInvalidArgument,
                  fmt::format("{} row {} has label {}", name, i, d.y[i]));
    }
  }
}

struct Standardizer {
  std::array<double, kFeatureCount> mean{};
  std::array<double, kFeatureCount> scale{};

  static Standardizer Fit(const Dataset& d, bool enabled) {
    Standardizer s;
    s.scale.fill(1.0);
    if (!enabled) return s;
    const double n = static_cast<double>(d.size());
    for (const FeatureVector& f : d.x) {
      for (int k = 0; k < kFeatureCount; ++k) s.mean[k] += f.values[k];
    }
    for (double& m : s.mean) m /= n;
    std::array<double, kFeatureCount> var{};
    for (const FeatureVector& f : d.x) {
      for (int k = 0; k < kFeatureCount; ++k) {
        const double dv = f.values[k] - s.mean[k];
        var[k] += dv * dv;
      }
    }
    for (int k = 0; k < kFeatureCount; ++k) {
      const double sd = std::sqrt(var[k] / n);
      s.scale[k] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
  }

  Dataset Apply(const Dataset& d) const {
    Dataset out = d;
    for (FeatureVector& f : out.x) {
      for (int k = 0; k < kFeatureCount; ++k) {
        f.values[k] = (f.values[k] - mean[k]) / scale[k];
      }
    }
    return out;
  }

  // W z + b with z = (f - mean) / scale, rewritten as W' f + b'.
  LinearModel Fold(const LinearModel& z_model) const {
    LinearModel out = z_model;
    for (int j = 0; j < out.num_classes(); ++j) {
      double shift = 0.0;
      for (int k = 0; k < kFeatureCount; ++k) {
        const double w = z_model.weight(j, k) / scale[k];
        out.weights[static_cast<std::size_t>(j) * kFeatureCount + k] = w;
        shift += w * mean[k];
      }
      out.biases[j] = z_model.biases[j] - shift;
    }
    return out;
  }
};

}  // namespace

TrainResult Train(const Dataset& train, const Dataset& val, ClassSet set,
                  const TrainConfig& config) {
  config.Validate();
  LinearModel model = LinearModel::Zero(set);
  const int m = model.num_classes();
  CheckDataset(train, m, "training");
  CheckDataset(val, m, "validation");
  if (!config.class_weights.empty() &&
      config.class_weights.size() != static_cast<std::size_t>(m)) {
    throw Error(Errc::kShapeMismatch,
                fmt::format("{} class weights for {} classes",
                            config.class_weights.size(), m));
  }

  const Standardizer standardizer = Standardizer::Fit(train, config.standardize);
  const Dataset z_train = standardizer.Apply(train);
  const Dataset z_val = standardizer.Apply(val);

  std::vector<double> params = FlattenParams(model);
  OptimizerState opt =
      OptimizerState::ForParams(params.size(), config.lr, config.weight_decay);
  EarlyStopping stopper(std::max(1, config.early_stop.patience),
                        config.early_stop.min_delta);
  std::vector<double> best_params = params;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> swa_params;
  std::int64_t swa_count = 0;

  TrainResult result;
  std::vector<std::size_t> order(z_train.size());
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(
        DeriveSeed(config.seed, fmt::format("train/epoch/{}", epoch)));
    SeededShuffle(rng, order);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      UnflattenParams(params, model);
      const LossAndGrads lg = ComputeLossAndGrads(
          model, z_train, config.class_weights,
          std::span<const std::size_t>(order.data() + start, len));
      if (!std::isfinite(lg.loss)) {
        throw Error(Errc::kDivergence,
                    fmt::format("training loss became non-finite in epoch {}",
                                epoch));
      }
      loss_sum += lg.loss * static_cast<double>(len);
      try {
        AdamWStep(opt, params, lg.grads);
      } catch (const Error& e) {
        throw Error(Errc::kDivergence,
                    fmt::format("epoch {}: {}", epoch, e.what()));
      }
    }
    UnflattenParams(params, model);
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!std::isfinite(params[i])) {
        throw Error(Errc::kDivergence,
                    fmt::format("parameter {} became {} in epoch {}", i,
                                params[i], epoch));
      }
    }
    double val_loss = 0.0;
    try {
      val_loss = DatasetWmcll(model, z_val, config.class_weights);
    } catch (const Error& e) {
      if (e.code() != Errc::kNonFinite) throw;
      throw Error(Errc::kDivergence, fmt::format("epoch {}: {}", epoch, e.what()));
    }
    const double train_loss = loss_sum / static_cast<double>(order.size());
    if (!std::isfinite(val_loss) || !std::isfinite(train_loss)) {
      throw Error(Errc::kDivergence,
                  fmt::format("loss became non-finite in epoch {}", epoch));
    }
    if (val_loss < best_val) {
      best_val = val_loss;
      best_params = params;
      result.history.best_epoch = epoch;
    }
    if (config.swa.enabled && epoch >= config.swa.start_epoch) {
      swa_params = SwaUpdate(swa_params, params, swa_count);
      ++swa_count;
    }
    EpochRecord record{epoch, train_loss, val_loss, opt.lr, false};
    const bool stop = config.early_stop.enabled && stopper.Update(val_loss);
    record.stopped_early = stop;
    result.history.epochs.push_back(record);
    if (stop) {
      result.history.stopped_early = true;
      break;
    }
  }

  UnflattenParams(swa_count > 0 ? swa_params : best_params, model);
  result.history.swa_models = static_cast<int>(swa_count);
  result.history.best_val_wmcll = best_val;
  result.model = standardizer.Fold(model);
  result.model.metadata.seed = config.seed;
  result.model.metadata.epochs = static_cast<int>(result.history.epochs.size());
  result.model.metadata.learning_rate = config.lr;
  result.model.metadata.final_val_wmcll =
      DatasetWmcll(result.model, val, config.class_weights);
  return result;
}

void WriteHistoryCsv(const std::filesystem::path& path,
                     const TrainHistory& history) {
  std::string out = "epoch,train_loss,val_wmcll,lr,stopped_early\n";
  for (const EpochRecord& e : history.epochs) {
    out += fmt::format("{},{},{},{},{}\n", e.epoch, e.train_loss, e.val_wmcll,
                       e.lr, e.stopped_early ? 1 : 0);
  }
  WriteFileAtomic(path, out);
}

double SampleTrialLr(const SearchConfig& search, int index) {
  std::mt19937_64 rng(
      DeriveSeed(search.seed, fmt::format("search/trial/{}", index)));
  const double lo = std::log(search.lr_min);
  const double hi = std::log(search.lr_max);
  const double lr = std::exp(lo + UnitInterval(rng()) * (hi - lo));
  return std::clamp(lr, search.lr_min, search.lr_max);
}

SearchResult RandomSearch(const Dataset& train, const Dataset& val,
                          ClassSet set, const TrainConfig& base,
                          const SearchConfig& search) {
  if (search.trials < 1) {
    throw Error(Errc::kInvalidArgument, "random search needs >= 1 trial");
  }
  if (!(search.lr_min > 0.0) || search.lr_max < search.lr_min) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("learning-rate range [{}, {}] is invalid",
                            search.lr_min, search.lr_max));
  }
  const auto n = static_cast<std::size_t>(search.trials);
  std::vector<std::optional<TrainResult>> runs(n);
  ParallelFor(n, search.workers, [&](std::size_t i) {
    TrainConfig config = base;
    config.lr = SampleTrialLr(search, static_cast<int>(i));
    runs[i] = Train(train, val, set, config);
  });
  SearchResult out;
  for (std::size_t i = 0; i < n; ++i) {
    const TrainResult& r = *runs[i];
    out.trials.push_back(TrialResult{static_cast<int>(i),
                                     r.model.metadata.learning_rate,
                                     r.model.metadata.final_val_wmcll,
                                     r.model.metadata.epochs});
    if (i == 0 || out.trials[i].val_wmcll < out.trials[out.best_index].val_wmcll) {
      out.best_index = static_cast<int>(i);
    }
  }
  out.best = std::move(*runs[static_cast<std::size_t>(out.best_index)]);
  return out;
}

void WriteTrialsCsv(const std::filesystem::path& path,
                    std::span<const TrialResult> trials) {
  std::string out = "trial,lr,val_wmcll,epochs_run\n";
  for (const TrialResult& t : trials) {
    out += fmt::format("{},{},{},{}\n", t.trial, t.lr, t.val_wmcll,
                       t.epochs_run);
  }
  WriteFileAtomic(path, out);
}

}  // namespace clotpath

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "lgaze/neural.hpp"

namespace lgaze {

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamWState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  explicit AdamWState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// Decoupled weight decay (theta *= 1 - lr * weight_decay) followed by the
// bias-corrected Adam update.
void adamw_step(std::span<double> params, std::span<const double> grads, AdamWState& state,
                double lr, double weight_decay, const AdamWHyper& hyper = {});

struct PlateauConfig {
  double factor = 0.5;
  int patience = 5;
  double min_lr = 1e-6;
  double threshold = 1e-4;  // degrees of validation MAE
};

// Halves (by `factor`) the learning rate once the metric has gone `patience`
// consecutive epochs without improving on the best value by at least
// `threshold`. The bad-epoch counter resets on improvement and after a
// reduction.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr0, PlateauConfig cfg);

  // Feeds one epoch's metric and returns the learning rate for the next epoch.
  double step(double metric);

  double lr() const { return lr_; }
  int bad_epochs() const { return bad_epochs_; }
  double best() const { return best_; }

 private:
  PlateauConfig cfg_;
  double lr_;
  double best_;
  int bad_epochs_ = 0;
};

struct TrainConfig {
  int batch_size = 64;
  double weight_decay = 1e-4;
  double lr0 = 1e-3;
  PlateauConfig scheduler;
  int max_epochs = 200;
  int early_stop_patience = 15;
  double early_stop_threshold = 1e-4;  // degrees
  double grad_clip_norm = 0.0;         // 0 disables clipping
  std::uint64_t seed = 0;

  // Defaults with lr0 = 1e-1 for holistic and 1e-3 for siamese.
  static TrainConfig for_architecture(Architecture arch);

  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep the values of `base`; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j, const TrainConfig& base);
  static TrainConfig from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }
};

struct EpochRecord {
  int epoch = 0;               // 1-based
  double train_mae_deg = 0.0;  // running mean over the epoch's train-mode batches
  double val_mae_deg = 0.0;
  double lr = 0.0;             // learning rate used during the epoch
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_mae_deg = 0.0;
  double wall_seconds = 0.0;
  std::string stop_reason;  // "early_stop" or "max_epochs"

  nlohmann::json to_json() const;
  static TrainReport from_json(const nlohmann::json& j);
};

struct TrainResult {
  MlpModel model;  // parameters from the best validation epoch
  TrainReport report;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch AdamW on the mean angular loss with plateau scheduling and early
// stopping on validation MAE. Each epoch visits every train sample once in a
// seeded shuffled order; a trailing batch of one sample is folded into the
// previous batch because batch-norm needs two. Throws EmptySplit when either
// split is empty (or train has fewer than 2 samples), DimensionMismatch for
// feature widths that do not match the architecture, and DivergedLoss on a
// non-finite loss.
TrainResult train(const MlpConfig& model_cfg, const LabeledFeatures& train_set,
                  const LabeledFeatures& val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

// Batch boundaries used by train(): start offsets plus a final end offset.
std::vector<std::size_t> batch_boundaries(std::size_t n, std::size_t batch_size);

}  // namespace lgaze

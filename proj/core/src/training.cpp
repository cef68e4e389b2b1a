#include "lgaze/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "lgaze/error.hpp"
#include "lgaze/loss.hpp"

namespace lgaze {

void adamw_step(std::span<double> params, std::span<const double> grads, AdamWState& state,
                double lr, double weight_decay, const AdamWHyper& hyper) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.m.size() != n || state.v.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "AdamW parameter, gradient and state sizes differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(hyper.beta1, t);
  const double bc2 = 1.0 - std::pow(hyper.beta2, t);
  const double decay = 1.0 - lr * weight_decay;
  for (std::size_t i = 0; i < n; ++i) {
    params[i] *= decay;
    const double g = grads[i];
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
  }
}

PlateauScheduler::PlateauScheduler(double lr0, PlateauConfig cfg)
    : cfg_(cfg), lr_(lr0), best_(std::numeric_limits<double>::infinity()) {
  if (!(lr0 > 0.0) || !(cfg.factor > 0.0) || cfg.factor >= 1.0 || cfg.patience < 1 ||
      !(cfg.min_lr > 0.0) || !(cfg.threshold >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "invalid plateau scheduler settings");
  }
}

double PlateauScheduler::step(double metric) {
  if (metric < best_ - cfg_.threshold) {
    best_ = metric;
    bad_epochs_ = 0;
    return lr_;
  }
  ++bad_epochs_;
  if (bad_epochs_ >= cfg_.patience) {
    const double next = std::max(lr_ * cfg_.factor, cfg_.min_lr);
    if (next < lr_) lr_ = next;
    bad_epochs_ = 0;
  }
  return lr_;
}

TrainConfig TrainConfig::for_architecture(Architecture arch) {
  TrainConfig c;
  c.lr0 = arch == Architecture::Holistic ? 1e-1 : 1e-3;
  return c;
}

void TrainConfig::validate() const {
  const bool ok = batch_size >= 2 && weight_decay >= 0.0 && lr0 > 0.0 && max_epochs >= 1 &&
                  early_stop_patience >= 1 && early_stop_threshold >= 0.0 &&
                  grad_clip_norm >= 0.0 && scheduler.factor > 0.0 && scheduler.factor < 1.0 &&
                  scheduler.patience >= 1 && scheduler.min_lr > 0.0 && scheduler.threshold >= 0.0;
  if (!ok) throw Error(ErrorKind::InvalidArgument, "invalid training configuration");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"batch_size", batch_size},
          {"weight_decay", weight_decay},
          {"lr0", lr0},
          {"scheduler",
           {{"factor", scheduler.factor},
            {"patience", scheduler.patience},
            {"min_lr", scheduler.min_lr},
            {"threshold", scheduler.threshold}}},
          {"max_epochs", max_epochs},
          {"early_stop_patience", early_stop_patience},
          {"early_stop_threshold", early_stop_threshold},
          {"grad_clip_norm", grad_clip_norm},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, const TrainConfig& base) {
  TrainConfig c = base;
  for (const auto& [key, v] : j.items()) {
    if (key == "batch_size") c.batch_size = v.get<int>();
    else if (key == "weight_decay") c.weight_decay = v.get<double>();
    else if (key == "lr0") c.lr0 = v.get<double>();
    else if (key == "max_epochs") c.max_epochs = v.get<int>();
    else if (key == "early_stop_patience") c.early_stop_patience = v.get<int>();
    else if (key == "early_stop_threshold") c.early_stop_threshold = v.get<double>();
    else if (key == "grad_clip_norm") c.grad_clip_norm = v.get<double>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "scheduler") {
      for (const auto& [sk, sv] : v.items()) {
        if (sk == "factor") c.scheduler.factor = sv.get<double>();
        else if (sk == "patience") c.scheduler.patience = sv.get<int>();
        else if (sk == "min_lr") c.scheduler.min_lr = sv.get<double>();
        else if (sk == "threshold") c.scheduler.threshold = sv.get<double>();
        else throw Error(ErrorKind::InvalidArgument, "unknown scheduler key '" + sk + "'");
      }
    } else {
      throw Error(ErrorKind::InvalidArgument, "unknown training key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::json ep = nlohmann::json::array();
  for (const auto& e : epochs) {
    ep.push_back({{"epoch", e.epoch},
                  {"train_mae_deg", e.train_mae_deg},
                  {"val_mae_deg", e.val_mae_deg},
                  {"lr", e.lr}});
  }
  return {{"epochs", std::move(ep)},
          {"best_epoch", best_epoch},
          {"best_val_mae_deg", best_val_mae_deg},
          {"wall_seconds", wall_seconds},
          {"stop_reason", stop_reason}};
}

TrainReport TrainReport::from_json(const nlohmann::json& j) {
  TrainReport r;
  for (const auto& e : j.at("epochs")) {
    r.epochs.push_back({e.at("epoch").get<int>(), e.at("train_mae_deg").get<double>(),
                        e.at("val_mae_deg").get<double>(), e.at("lr").get<double>()});
  }
  r.best_epoch = j.at("best_epoch").get<int>();
  r.best_val_mae_deg = j.at("best_val_mae_deg").get<double>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.stop_reason = j.at("stop_reason").get<std::string>();
  return r;
}

std::vector<std::size_t> batch_boundaries(std::size_t n, std::size_t batch_size) {
  std::vector<std::size_t> b;
  for (std::size_t s = 0; s < n; s += batch_size) b.push_back(s);
  b.push_back(n);
  if (b.size() > 2 && n - b[b.size() - 2] == 1) b.erase(b.end() - 2);
  return b;
}

namespace {

void check_split(const LabeledFeatures& s, std::size_t dim, const char* name, Eigen::Index min_n) {
  if (s.size() < min_n) {
    throw Error(ErrorKind::EmptySplit, std::string(name) + " split has " +
                                           std::to_string(s.size()) + " samples");
  }
  if (static_cast<std::size_t>(s.features.rows()) != dim || s.targets.cols() != s.size()) {
    throw Error(ErrorKind::DimensionMismatch, std::string(name) + " split has " +
                                                  std::to_string(s.features.rows()) +
                                                  " feature rows, expected " + std::to_string(dim));
  }
  if (!s.features.allFinite() || !s.targets.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, std::string(name) + " split has non-finite values");
  }
}

// NaN when the model has collapsed to zero or non-finite outputs.
double mean_val_mae(const MlpModel& model, const LabeledFeatures& val) {
  try {
    return angular_errors_deg(model.predict(val.features), val.targets).mean();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DivergedLoss && e.kind() != ErrorKind::ZeroPrediction) throw;
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

TrainResult train(const MlpConfig& model_cfg, const LabeledFeatures& train_set,
                  const LabeledFeatures& val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  model_cfg.validate();
  const std::size_t dim = model_cfg.input_dim();
  check_split(train_set, dim, "train", 2);
  check_split(val_set, dim, "validation", 1);

  const auto start = std::chrono::steady_clock::now();
  MlpModel model = MlpModel::init(model_cfg, derive_seed(cfg.seed, "model"));
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  Rng dropout_rng(derive_seed(cfg.seed, "dropout"));
  AdamWState opt(model.parameter_count());
  PlateauScheduler scheduler(cfg.lr0, cfg.scheduler);

  const auto n = static_cast<std::size_t>(train_set.size());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto bounds = batch_boundaries(n, static_cast<std::size_t>(cfg.batch_size));

  TrainReport report;
  std::optional<MlpModel> best;
  double best_val = std::numeric_limits<double>::infinity();
  double stop_reference = std::numeric_limits<double>::infinity();
  int since_best = 0;
  report.stop_reason = "max_epochs";

  Eigen::MatrixXd xb;
  Eigen::Matrix3Xd yb;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double lr = scheduler.lr();
    shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
      const std::size_t lo = bounds[b];
      const auto m = static_cast<Eigen::Index>(bounds[b + 1] - lo);
      xb.resize(static_cast<Eigen::Index>(dim), m);
      yb.resize(3, m);
      for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::Index src = order[lo + static_cast<std::size_t>(j)];
        xb.col(j) = train_set.features.col(src);
        yb.col(j) = train_set.targets.col(src);
      }
      ForwardTape tape;
      const Eigen::Matrix3Xd pred = model.forward(xb, Mode::Train, &tape, &dropout_rng);
      LossResult loss;
      try {
        loss = angular_loss(pred, yb);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DivergedLoss && e.kind() != ErrorKind::ZeroPrediction) throw;
        loss.mean_loss = std::numeric_limits<double>::quiet_NaN();
      }
      if (!std::isfinite(loss.mean_loss)) {
        throw Error(ErrorKind::DivergedLoss, "non-finite loss at epoch " + std::to_string(epoch) +
                                                 ", batch " + std::to_string(b) + " (lr " +
                                                 std::to_string(lr) + ")");
      }
      loss_sum += loss.per_sample.sum();
      ParamVector grad = model.backward(tape, loss.gradient);
      if (cfg.grad_clip_norm > 0.0) {
        double sq = 0.0;
        for (double g : grad) sq += g * g;
        const double norm = std::sqrt(sq);
        if (norm > cfg.grad_clip_norm) {
          const double s = cfg.grad_clip_norm / norm;
          for (double& g : grad) g *= s;
        }
      }
      adamw_step(model.mutable_parameters(), grad, opt, lr, cfg.weight_decay);
    }

    const double val = mean_val_mae(model, val_set);
    if (!std::isfinite(val)) {
      throw Error(ErrorKind::DivergedLoss,
                  "non-finite validation MAE at epoch " + std::to_string(epoch));
    }
    EpochRecord rec{epoch, rad2deg(loss_sum / static_cast<double>(n)), val, lr};
    report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    // The checkpoint tracks the exact minimum; the patience counter only
    // resets on a gain of at least early_stop_threshold.
    if (val < best_val) {
      best = model;
      best_val = val;
      report.best_epoch = epoch;
      report.best_val_mae_deg = val;
    }
    if (val < stop_reference - cfg.early_stop_threshold) {
      stop_reference = val;
      since_best = 0;
    } else {
      ++since_best;
    }
    scheduler.step(val);
    if (since_best >= cfg.early_stop_patience) {
      report.stop_reason = "early_stop";
      break;
    }
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(*best), std::move(report)};
}

}  // namespace lgaze

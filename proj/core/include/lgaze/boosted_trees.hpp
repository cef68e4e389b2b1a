#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "lgaze/regressor.hpp"

namespace lgaze {

struct GbtConfig {
  int n_trees = 1000;
  int max_depth = 6;
  double learning_rate = 0.05;
  double row_subsample = 0.8;
  double feature_subsample = 0.8;
  int n_bins = 256;
  int min_samples_leaf = 20;
  double lambda_l2 = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static GbtConfig from_json(const nlohmann::json& j);
};

// One regression tree in flat arrays. A node is a leaf when feature < 0.
// Internal nodes send x to `left` when x[feature] <= threshold.
struct RegressionTree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;

  double predict(const double* x) const;
  std::size_t node_count() const { return feature.size(); }
};

struct TreeEnsemble {
  double base_prediction = 0.0;
  std::vector<RegressionTree> trees;

  double predict(const double* x) const;
  // Training MSE after each boosting round (index 0 = base only); filled by
  // fit_component.
  std::vector<double> train_mse;
};

// Column-per-sample features (dim x n) and one scalar target per sample.
// Squared-error boosting on quantile-binned histograms; bins are computed
// once on the training set. Throws EmptyData for fewer than 2 samples and
// InvalidArgument for non-finite inputs.
TreeEnsemble fit_component(const Eigen::MatrixXd& features, std::span<const double> targets,
                           const GbtConfig& cfg);

// Three independent per-component ensembles predicting (g_x, g_y, g_z).
class GbtModel final : public GazeRegressor {
 public:
  GbtModel() = default;
  GbtModel(GbtConfig cfg, std::array<TreeEnsemble, 3> components, std::size_t input_dim);

  FeatureLayout layout() const override { return FeatureLayout::Global; }
  Eigen::Matrix3Xd predict(const Eigen::MatrixXd& features) const override;
  std::string kind() const override { return "gbt"; }

  // Throws DimensionMismatch unless x has input_dim entries.
  Eigen::Vector3d predict_one(std::span<const double> x) const;

  const GbtConfig& config() const { return cfg_; }
  const std::array<TreeEnsemble, 3>& components() const { return components_; }
  std::size_t input_dim() const { return input_dim_; }

  nlohmann::json to_json() const;
  static GbtModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static GbtModel load(const std::filesystem::path& path);

 private:
  GbtConfig cfg_;
  std::array<TreeEnsemble, 3> components_;
  std::size_t input_dim_ = 0;
};

// Fits the three components with seeds derived from cfg.seed; with
// `shared_component_seed` all three use cfg.seed unchanged.
GbtModel fit_multi(const Eigen::MatrixXd& features, const Eigen::Matrix3Xd& targets,
                   const GbtConfig& cfg, bool shared_component_seed = false);

}  // namespace lgaze

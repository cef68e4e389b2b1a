#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/StdVector>
#include <nlohmann/json.hpp>

#include "lgaze/features.hpp"
#include "lgaze/random.hpp"
#include "lgaze/regressor.hpp"

namespace lgaze {

enum class Architecture { Holistic, Siamese };

std::string_view to_string(Architecture arch);
Architecture architecture_from_string(std::string_view s);

struct MlpConfig {
  Architecture architecture = Architecture::Holistic;
  int hidden = 256;        // D
  int blocks = 3;          // K
  double dropout = 0.1;    // p
  int fusion_hidden = 64;  // siamese fusion MLP hidden width
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  double final_init_scale = 1e-2;
  HeadAnchorMode head_anchor_mode = HeadAnchorMode::Centered;

  // Holistic: D = 256, K = 3, p = 0.1. Siamese: D = 64 per branch, K = 3, p = 0.1.
  static MlpConfig holistic();
  static MlpConfig siamese();

  FeatureLayout layout() const {
    return architecture == Architecture::Holistic ? FeatureLayout::Global : FeatureLayout::Siamese;
  }
  std::size_t input_dim() const { return feature_dim(layout()); }
  void validate() const;

  nlohmann::json to_json() const;
  static MlpConfig from_json(const nlohmann::json& j);
};

enum class Mode { Train, Eval };

// Flat tensor storage. Eigen's vectorized kernels pick code paths by address
// alignment, so a fixed alignment keeps results bit-reproducible across runs.
using ParamVector = std::vector<double, Eigen::aligned_allocator<double>>;

// Name and shape of one tensor inside a flat storage vector.
struct TensorInfo {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

namespace detail {

struct LinearCache {
  Eigen::MatrixXd input;
};

struct BatchNormCache {
  Eigen::MatrixXd xhat;
  Eigen::VectorXd inv_std;
  Eigen::VectorXd batch_mean;  // empty in eval mode
  Eigen::VectorXd batch_var;   // biased, empty in eval mode
};

struct GeluCache {
  Eigen::MatrixXd input;
  Eigen::MatrixXd cdf;  // standard normal CDF of input
};

struct DropoutCache {
  Eigen::MatrixXd mask;  // empty means identity
};

struct BlockCache {
  LinearCache fc1;
  BatchNormCache bn1;
  GeluCache act1;
  DropoutCache drop1;
  LinearCache fc2;
  BatchNormCache bn2;
  GeluCache act2;
  DropoutCache drop2;
};

struct EncoderCache {
  LinearCache proj;
  BatchNormCache proj_bn;
  GeluCache proj_act;
  std::vector<BlockCache> blocks;
};

struct HeadCache {
  LinearCache fc1;
  GeluCache act;
  LinearCache fc2;
};

// Offsets of each layer's tensors inside the flat parameter / buffer storage.
struct LinearRef {
  std::size_t weight = 0;  // (out x in), column-major
  std::size_t bias = 0;
  Eigen::Index in = 0;
  Eigen::Index out = 0;
};

struct BatchNormRef {
  std::size_t gamma = 0;
  std::size_t beta = 0;
  std::size_t running_mean = 0;  // buffer offsets
  std::size_t running_var = 0;
  Eigen::Index dim = 0;
};

struct BlockRef {
  LinearRef fc1;
  BatchNormRef bn1;
  LinearRef fc2;
  BatchNormRef bn2;
};

struct EncoderRef {
  LinearRef proj;
  BatchNormRef proj_bn;
  std::vector<BlockRef> blocks;
  Eigen::Index input_offset = 0;  // first feature row consumed
};

struct HeadRef {
  LinearRef fc1;
  LinearRef fc2;
};

struct NetLayout {
  std::vector<EncoderRef> encoders;
  HeadRef head;
};

}  // namespace detail

// Activations recorded by a forward pass for the backward pass.
struct ForwardTape {
  Mode mode = Mode::Eval;
  const void* owner = nullptr;
  std::uint64_t version = 0;
  Eigen::Index batch = 0;
  std::vector<detail::EncoderCache> encoders;  // 1 (holistic) or 2 (left, right)
  detail::HeadCache head;

  bool empty() const { return owner == nullptr; }
  // Batch mean / biased variance of every batch-norm layer, in declaration
  // order (train-mode tapes only).
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> batch_statistics() const;
};

// Holistic or siamese residual MLP. Residual blocks compute
//   y = h + Drop(GELU(BN(W2 Drop(GELU(BN(W1 h + b1))) + b2)))
// Holistic: Linear(40->D) BN GELU, K blocks, Linear(D->D/2) GELU Linear(D/2->3).
// Siamese: one such encoder per eye on its 18 local features (18 -> D, K blocks, separate
// weights), then Linear(2D+6 -> fusion) GELU Linear(fusion -> 3) over
// [left code, right code, eye offset, head anchors].
class MlpModel final : public GazeRegressor {
 public:
  // Fan-in uniform init U(-1/sqrt(fan_in), 1/sqrt(fan_in)); the output layer
  // is further scaled by config.final_init_scale. Deterministic per seed.
  static MlpModel init(const MlpConfig& config, std::uint64_t seed);

  const MlpConfig& config() const { return config_; }

  // x is (input_dim x batch). Train mode needs batch >= 2, uses batch
  // statistics, updates running statistics, and draws dropout masks from
  // `dropout_rng` (required when dropout > 0).
  Eigen::Matrix3Xd forward(const Eigen::MatrixXd& x, Mode mode, ForwardTape* tape = nullptr,
                           Rng* dropout_rng = nullptr);

  // Eval-mode inference in chunks; thread-safe on a const model.
  Eigen::Matrix3Xd predict(const Eigen::MatrixXd& features) const override;
  FeatureLayout layout() const override { return config_.layout(); }
  HeadAnchorMode head_anchor_mode() const override { return config_.head_anchor_mode; }
  std::string kind() const override { return std::string(to_string(config_.architecture)); }

  // Gradient of sum_j upstream(:, j) . output(:, j) with respect to every
  // parameter, in parameter storage order. Throws StaleTape if the tape is
  // empty, from another model, or parameters changed since it was recorded.
  ParamVector backward(const ForwardTape& tape, const Eigen::Matrix3Xd& upstream) const;

  std::span<const double> parameters() const { return params_; }
  // Mutable access invalidates outstanding tapes.
  std::span<double> mutable_parameters() {
    ++version_;
    return params_;
  }
  std::size_t parameter_count() const { return params_.size(); }
  const std::vector<TensorInfo>& parameter_tensors() const { return param_info_; }

  std::span<const double> buffers() const { return buffers_; }
  std::span<double> mutable_buffers() { return buffers_; }
  const std::vector<TensorInfo>& buffer_tensors() const { return buffer_info_; }

  // Overwrites running mean/var of every batch-norm layer (declaration order).
  void set_running_statistics(const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& stats);

  // Versioned JSON checkpoint (see docs/checkpoint_format.md).
  nlohmann::json to_json() const;
  static MlpModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static MlpModel load(const std::filesystem::path& path);

 private:
  explicit MlpModel(const MlpConfig& config);

  // `running` non-null in train mode: running statistics are updated in place.
  Eigen::Matrix3Xd run(const Eigen::MatrixXd& x, Mode mode, ForwardTape* tape, Rng* rng,
                       double* running) const;

  MlpConfig config_;
  ParamVector params_;
  ParamVector buffers_;
  std::vector<TensorInfo> param_info_;
  std::vector<TensorInfo> buffer_info_;
  detail::NetLayout net_;
  std::uint64_t version_ = 0;
};

}  // namespace lgaze

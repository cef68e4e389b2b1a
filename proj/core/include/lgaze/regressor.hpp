#pragma once

#include <string>

#include <Eigen/Core>

#include "lgaze/features.hpp"

namespace lgaze {

// Anything that maps a column-per-sample feature matrix to gaze vectors.
// Outputs are not necessarily unit length.
class GazeRegressor {
 public:
  virtual ~GazeRegressor() = default;

  virtual FeatureLayout layout() const = 0;
  virtual HeadAnchorMode head_anchor_mode() const { return HeadAnchorMode::Centered; }
  virtual Eigen::Matrix3Xd predict(const Eigen::MatrixXd& features) const = 0;
  virtual std::string kind() const = 0;
};

// Unit gaze directions for each column of `features`. Throws ZeroPrediction
// when a raw prediction has norm <= 1e-12.
Eigen::Matrix3Xd predict_gaze(const GazeRegressor& model, const Eigen::MatrixXd& features);

}  // namespace lgaze

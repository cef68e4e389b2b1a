#pragma once

#include <Eigen/Core>

namespace lgaze {

// Cosine bound used in the gradient so it stays finite at 0 and pi.
inline constexpr double kCosineClamp = 1.0 - 1e-7;

struct LossResult {
  double mean_loss = 0.0;       // radians
  Eigen::Matrix3Xd gradient;    // d(mean_loss) / d(prediction)
  Eigen::VectorXd per_sample;   // radians
};

// Mean angular error between unnormalized predictions and targets
// (3 x batch each), with its analytic gradient:
//   dE/dp = -(t_hat - c p_hat) / (|p| sqrt(1 - c^2)),  with c clamped to
//   +-kCosineClamp inside the square root.
// Throws ZeroPrediction if any prediction norm is <= 1e-12 and DivergedLoss if
// any prediction is non-finite.
LossResult angular_loss(const Eigen::Matrix3Xd& predictions, const Eigen::Matrix3Xd& targets);

// Per-sample angular error in degrees, no gradient. Same error conditions as
// angular_loss.
Eigen::VectorXd angular_errors_deg(const Eigen::Matrix3Xd& predictions,
                                   const Eigen::Matrix3Xd& targets);

}  // namespace lgaze

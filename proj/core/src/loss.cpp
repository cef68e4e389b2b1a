#include "lgaze/loss.hpp"

#include <algorithm>
#include <cmath>

#include "lgaze/error.hpp"
#include "lgaze/geometry.hpp"

namespace lgaze {

LossResult angular_loss(const Eigen::Matrix3Xd& predictions, const Eigen::Matrix3Xd& targets) {
  if (predictions.cols() != targets.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "prediction and target batch sizes differ");
  }
  const Eigen::Index n = predictions.cols();
  if (n == 0) throw Error(ErrorKind::DimensionMismatch, "empty batch");

  LossResult out;
  out.gradient.resize(3, n);
  out.per_sample.resize(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vec3 p = predictions.col(j);
    const Vec3 t = targets.col(j);
    const double pn = p.norm();
    const double tn = t.norm();
    if (!std::isfinite(pn)) throw Error(ErrorKind::DivergedLoss, "non-finite prediction");
    if (!(pn > 1e-12)) throw Error(ErrorKind::ZeroPrediction, "prediction has zero norm");
    if (!(tn > 1e-12)) throw Error(ErrorKind::ZeroVector, "target has zero norm");
    const Vec3 p_hat = p / pn;
    const Vec3 t_hat = t / tn;
    const double e = angular_error(t, p);
    // The tangential part uses the raw cosine so it vanishes exactly when the
    // directions agree; only the arccos derivative sees the clamp.
    const double c = p_hat.dot(t_hat);
    const double cc = std::clamp(c, -kCosineClamp, kCosineClamp);
    out.per_sample(j) = e;
    total += e;
    out.gradient.col(j) = -(t_hat - c * p_hat) / (pn * std::sqrt(1.0 - cc * cc)) * inv_n;
  }
  out.mean_loss = total * inv_n;
  return out;
}

Eigen::VectorXd angular_errors_deg(const Eigen::Matrix3Xd& predictions,
                                   const Eigen::Matrix3Xd& targets) {
  if (predictions.cols() != targets.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "prediction and target counts differ");
  }
  Eigen::VectorXd out(predictions.cols());
  for (Eigen::Index j = 0; j < predictions.cols(); ++j) {
    const Vec3 p = predictions.col(j);
    const Vec3 t = targets.col(j);
    if (!std::isfinite(p.norm())) throw Error(ErrorKind::DivergedLoss, "non-finite prediction");
    if (!(p.norm() > 1e-12)) throw Error(ErrorKind::ZeroPrediction, "prediction has zero norm");
    if (!(t.norm() > 1e-12)) throw Error(ErrorKind::ZeroVector, "target has zero norm");
    out(j) = rad2deg(angular_error(t, p));
  }
  return out;
}

}  // namespace lgaze

#include "lgaze/regressor.hpp"

#include "lgaze/error.hpp"

namespace lgaze {

Eigen::Matrix3Xd predict_gaze(const GazeRegressor& model, const Eigen::MatrixXd& features) {
  Eigen::Matrix3Xd out = model.predict(features);
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double n = out.col(j).norm();
    if (!(n > 1e-12)) throw Error(ErrorKind::ZeroPrediction, "prediction has zero norm");
    out.col(j) /= n;
  }
  return out;
}

}  // namespace lgaze

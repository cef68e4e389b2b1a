#include "lgaze/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "lgaze/error.hpp"

namespace lgaze {

Mat3 CameraIntrinsics::as_matrix() const {
  Mat3 k;
  k << fx, 0.0, cx,
       0.0, fy, cy,
       0.0, 0.0, 1.0;
  return k;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(cx) || !std::isfinite(cy)) {
    throw Error(ErrorKind::InvalidArgument, "camera intrinsics need fx > 0 and fy > 0");
  }
}

CameraIntrinsics CameraIntrinsics::from_image_size(double width, double height) {
  if (!(width > 0.0) || !(height > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "image size must be positive");
  }
  return CameraIntrinsics{width, width, width / 2.0, height / 2.0};
}

void HeadPose::validate() const {
  const double ortho_err = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho_err <= 1e-9) || std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidArgument, "head rotation is not a proper rotation");
  }
  if (!(translation.norm() > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "head translation must be nonzero");
  }
}

Mat3 checked_inverse(const Mat3& m) {
  const double det = m.determinant();
  if (!(std::abs(det) > 1e-12)) {
    throw Error(ErrorKind::SingularMatrix, "matrix determinant below 1e-12");
  }
  return m.inverse();
}

Vec2 project(const CameraIntrinsics& k, const Vec3& p) {
  if (!(p.z() > 1e-6)) {
    throw Error(ErrorKind::PointBehindCamera, "point depth must exceed 1e-6 mm");
  }
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

Mat3 build_normalization_rotation(const HeadPose& pose) {
  pose.validate();
  const Vec3 e3 = pose.translation.normalized();
  const Vec3 head_x = pose.rotation.col(0);
  const Vec3 cross = e3.cross(head_x);
  const double n = cross.norm();
  if (!(n > 1e-9)) {
    throw Error(ErrorKind::DegeneratePose, "head x axis is parallel to the viewing ray");
  }
  const Vec3 e2 = cross / n;
  const Vec3 e1 = e2.cross(e3);
  Mat3 r;
  r.row(0) = e1.transpose();
  r.row(1) = e2.transpose();
  r.row(2) = e3.transpose();
  return r;
}

Mat3 build_warp_matrix(const CameraIntrinsics& camera, const NormalizedCamera& norm_cam,
                       const Mat3& normalization_rotation, double face_distance_mm) {
  camera.validate();
  norm_cam.intrinsics.validate();
  if (!(face_distance_mm > 0.0) || !(norm_cam.distance_mm > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "face and normalized distances must be positive");
  }
  const double s = face_distance_mm / norm_cam.distance_mm;
  const Mat3 scale = Eigen::Vector3d(s, s, 1.0).asDiagonal();
  return norm_cam.intrinsics.as_matrix() * scale * normalization_rotation *
         checked_inverse(camera.as_matrix());
}

Vec2 warp_point(const Mat3& m, const Vec2& u) {
  const Vec3 v = m * Vec3(u.x(), u.y(), 1.0);
  if (!(std::abs(v.z()) > 1e-9)) {
    throw Error(ErrorKind::PointAtInfinity, "homogeneous scale vanished");
  }
  return {v.x() / v.z(), v.y() / v.z()};
}

Vec3 rotate_gaze(const Mat3& normalization_rotation, const Vec3& gaze) {
  if (!(gaze.norm() > 0.0)) {
    throw Error(ErrorKind::ZeroVector, "gaze vector has zero length");
  }
  return normalization_rotation * gaze;
}

Vec3 pitchyaw_to_vector(double pitch, double yaw) {
  const double cp = std::cos(pitch);
  return {-cp * std::sin(yaw), -std::sin(pitch), -cp * std::cos(yaw)};
}

PitchYaw vector_to_pitchyaw(const Vec3& g) {
  const double n = g.norm();
  if (!(n > 0.0)) {
    throw Error(ErrorKind::ZeroVector, "cannot convert a zero vector to pitch/yaw");
  }
  const Vec3 u = g / n;
  const double horizontal = std::hypot(u.x(), u.z());
  if (horizontal < 1e-9) {
    throw Error(ErrorKind::GimbalDegenerate, "yaw undefined at pitch = +-pi/2");
  }
  return {std::atan2(-u.y(), horizontal), std::atan2(-u.x(), -u.z())};
}

double angular_error(const Vec3& truth, const Vec3& predicted) {
  const double na = truth.norm();
  const double nb = predicted.norm();
  if (!(na > 1e-12) || !(nb > 1e-12)) {
    throw Error(ErrorKind::ZeroVector, "angular error needs nonzero vectors");
  }
  // 2 atan2(|u - v|, |u + v|) on the unit vectors: arccos of the cosine
  // without its loss of precision near 0 and pi, and symmetric in u and v.
  const Vec3 u = truth / na;
  const Vec3 v = predicted / nb;
  const Vec3 diff = u - v;
  const Vec3 sum = u + v;
  const double d = std::sqrt(diff.x() * diff.x() + diff.y() * diff.y() + diff.z() * diff.z());
  const double s = std::sqrt(sum.x() * sum.x() + sum.y() * sum.y() + sum.z() * sum.z());
  return 2.0 * std::atan2(d, s);
}

Mat3 rotation_x(double a) {
  return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix();
}

Mat3 rotation_y(double a) {
  return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix();
}

Mat3 rotation_z(double a) {
  return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix();
}

Mat3 rotation_from_axis_angle(const Vec3& axis_angle) {
  const double theta = axis_angle.norm();
  if (theta < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(theta, axis_angle / theta).toRotationMatrix();
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const Mat3 rel = a.transpose() * b;
  // Axis-angle magnitude from the skew part and trace; stable at small angles.
  const Vec3 skew(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  return std::atan2(0.5 * skew.norm(), 0.5 * (rel.trace() - 1.0));
}

Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

}  // namespace lgaze

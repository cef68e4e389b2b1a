#pragma once

#include <utility>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace lgaze {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg2rad(double deg) noexcept { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) noexcept { return rad * 180.0 / kPi; }

// Pinhole intrinsics in pixels.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  Mat3 as_matrix() const;
  // Throws InvalidArgument unless fx > 0 and fy > 0.
  void validate() const;

  // Fallback when a dataset ships no calibration: focal length equal to the
  // image width, principal point at the image center.
  static CameraIntrinsics from_image_size(double width, double height);

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

// Virtual camera that normalized landmarks live in.
struct NormalizedCamera {
  CameraIntrinsics intrinsics{960.0, 960.0, 224.0, 224.0};
  double distance_mm = 300.0;
  double width = 448.0;
  double height = 448.0;

  friend bool operator==(const NormalizedCamera&, const NormalizedCamera&) = default;
};

// Rigid transform from the canonical face model frame to the camera frame.
// Columns of `rotation` are the head axes expressed in camera coordinates.
struct HeadPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3(0.0, 0.0, 1.0);

  // Throws InvalidArgument if rotation is not orthonormal with det +1
  // (within 1e-9) or the translation is zero.
  void validate() const;
};

// 3x3 inverse; throws SingularMatrix when |det| <= 1e-12.
Mat3 checked_inverse(const Mat3& m);

// Pinhole projection of a camera-frame point. Throws PointBehindCamera when
// depth <= 1e-6 mm.
Vec2 project(const CameraIntrinsics& k, const Vec3& p_camera);

// Normalization rotation R_n whose rows are e1, e2, e3 with
//   e3 = t / |t|,  e2 = (e3 x e1_head) / |e3 x e1_head|,  e1 = e2 x e3.
// Throws DegeneratePose if the head x axis is parallel to the viewing ray.
Mat3 build_normalization_rotation(const HeadPose& pose);

// M = K_n * diag(|t|/d_n, |t|/d_n, 1) * R_n * K_c^-1.
Mat3 build_warp_matrix(const CameraIntrinsics& camera, const NormalizedCamera& norm_cam,
                       const Mat3& normalization_rotation, double face_distance_mm);

// Applies a homography and dehomogenizes. Throws PointAtInfinity when the
// homogeneous scale is within 1e-9 of zero.
Vec2 warp_point(const Mat3& m, const Vec2& u);

// g' = R_n g. Throws ZeroVector for a zero gaze.
Vec3 rotate_gaze(const Mat3& normalization_rotation, const Vec3& gaze);

// Gaze angle convention: camera looks along +z, a gaze toward the camera has
// negative z. (0, 0) maps to (0, 0, -1).
Vec3 pitchyaw_to_vector(double pitch, double yaw);

struct PitchYaw {
  double pitch = 0.0;
  double yaw = 0.0;
};

// Inverse of pitchyaw_to_vector. Throws ZeroVector for a zero input and
// GimbalDegenerate when cos(pitch) < 1e-9 (yaw undefined).
PitchYaw vector_to_pitchyaw(const Vec3& g);

// Angle between two directions in radians, range [0, pi]. Throws ZeroVector
// when either norm is <= 1e-12.
double angular_error(const Vec3& truth, const Vec3& predicted);

// Elementary rotations (right-handed, radians).
Mat3 rotation_x(double angle);
Mat3 rotation_y(double angle);
Mat3 rotation_z(double angle);

// exp of the skew matrix of `axis_angle` (Rodrigues).
Mat3 rotation_from_axis_angle(const Vec3& axis_angle);

// Geodesic distance between two rotations, radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

// Nearest rotation in the Frobenius sense (SVD polar factor, det forced +1).
Mat3 orthonormalize(const Mat3& m);

}  // namespace lgaze

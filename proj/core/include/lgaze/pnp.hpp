#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgaze/geometry.hpp"
#include "lgaze/landmarks.hpp"

namespace lgaze {

struct ModelPoint {
  std::size_t slot = 0;
  Vec3 position_mm = Vec3::Zero();
};

// 3D face model in its own frame: x toward the image right, y down, z away
// from the camera (the face looks along -z). Origin at the midpoint between
// the eye-corner centroid and the nose tip.
struct CanonicalFaceModel {
  std::vector<ModelPoint> points;

  // The six pose-stable points (4 eye corners, nose tip, glabella). Iris
  // points are excluded because they move with gaze.
  static CanonicalFaceModel default_model();

  // All ten head-rigid points of the default geometry: the stable six plus the
  // four eyelid extrema. Used by the synthetic generator.
  static CanonicalFaceModel default_rigid_geometry();

  const Vec3* find(std::size_t slot) const;

  // Enforces >= 6 points, unique slots in range, and presence of the nose
  // tip, glabella and the four eye corners.
  void validate() const;

  // File format: JSON array of {"slot", "x_mm", "y_mm", "z_mm"}.
  static CanonicalFaceModel from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static CanonicalFaceModel load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

enum class PnpInit { IdentityAtDistance, WeakPerspective, ProvidedPose };

std::string_view to_string(PnpInit init);
PnpInit pnp_init_from_string(std::string_view s);

struct PnpConfig {
  PnpInit init_strategy = PnpInit::WeakPerspective;
  double initial_distance_mm = 600.0;  // for IdentityAtDistance
  int max_iters = 100;
  double lm_lambda0 = 1e-3;
  double tol_residual = 1e-8;  // rms, px
  double tol_step = 1e-10;
  bool record_trace = false;

  void validate() const;
  nlohmann::json to_json() const;
  static PnpConfig from_json(const nlohmann::json& j);
};

struct PnpResult {
  HeadPose pose;
  double rms_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  // Objective (sum of squared px residuals) after the initial guess and after
  // every accepted step; filled when PnpConfig::record_trace is set.
  std::vector<double> cost_trace;
};

// Projects every model point with the pose; output order follows model.points.
std::vector<Vec2> project_points(const CanonicalFaceModel& model, const HeadPose& pose,
                                 const CameraIntrinsics& k);

// Scaled-orthographic closed form: affine fit of centered correspondences,
// polar decomposition for the rotation, depth from the scale.
HeadPose weak_perspective_init(const LandmarkSet& landmarks, const CanonicalFaceModel& model,
                               const CameraIntrinsics& k);

// Levenberg-Marquardt refinement of the reprojection error. The rotation is
// updated by left-composed axis-angle increments and re-orthonormalized.
// `init`, when given, overrides the configured init strategy.
PnpResult estimate_head_pose(const LandmarkSet& landmarks, const CanonicalFaceModel& model,
                             const CameraIntrinsics& k, const PnpConfig& cfg,
                             const std::optional<HeadPose>& init = std::nullopt);

// Reprojection residual vector (2 per point) and its analytic Jacobian with
// respect to (axis-angle increment, translation). Exposed for tests.
struct ReprojectionLinearization {
  Eigen::VectorXd residual;
  Eigen::Matrix<double, Eigen::Dynamic, 6> jacobian;
};
ReprojectionLinearization linearize_reprojection(const LandmarkSet& landmarks,
                                                 const CanonicalFaceModel& model,
                                                 const CameraIntrinsics& k, const HeadPose& pose);

// Root-mean-square reprojection error per point, in pixels.
double reprojection_rms(const LandmarkSet& landmarks, const CanonicalFaceModel& model,
                        const CameraIntrinsics& k, const HeadPose& pose);

}  // namespace lgaze

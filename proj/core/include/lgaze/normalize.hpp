#pragma once

#include <optional>
#include <string_view>

#include "lgaze/geometry.hpp"
#include "lgaze/landmarks.hpp"
#include "lgaze/pnp.hpp"
#include "lgaze/records.hpp"

namespace lgaze {

// Where the head pose used for normalization comes from.
enum class PoseSource {
  Solve,           // PnP from the configured init strategy
  Provided,        // dataset pose used as-is
  ProvidedAsInit,  // PnP refinement starting from the dataset pose
};

std::string_view to_string(PoseSource s);
PoseSource pose_source_from_string(std::string_view s);

struct NormalizeOptions {
  PoseSource pose_source = PoseSource::Solve;
  CanonicalFaceModel model = CanonicalFaceModel::default_model();
  NormalizedCamera camera;
  PnpConfig pnp;
};

struct NormalizationResult {
  LandmarkSet landmarks;  // normalized frame
  Mat3 rotation;          // R_n
  Mat3 warp;              // M
  HeadPose pose;
  double rms_residual = 0.0;  // px, of `pose` on the raw landmarks
  int pnp_iterations = 0;
};

// Pose (per `opts.pose_source`) -> R_n -> M -> warped landmarks.
// `provided` is required for the Provided* sources.
NormalizationResult normalize_landmarks(const LandmarkSet& raw, const CameraIntrinsics& camera,
                                        const NormalizeOptions& opts,
                                        const std::optional<HeadPose>& provided = std::nullopt);

// Re-normalizes a record from its raw block: landmarks_norm, gaze_norm
// (R_n applied to raw.gaze) and norm_width are replaced. Throws
// InvalidArgument when the record has no raw block or no raw gaze, or when a
// Provided* source is requested without raw.head_pose.
GazeRecord normalize_record(const GazeRecord& record, const NormalizeOptions& opts,
                            NormalizationResult* details = nullptr);

}  // namespace lgaze

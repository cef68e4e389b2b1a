#include "lgaze/normalize.hpp"

#include <string>

#include "lgaze/error.hpp"

namespace lgaze {

std::string_view to_string(PoseSource s) {
  switch (s) {
    case PoseSource::Solve: return "solve";
    case PoseSource::Provided: return "provided";
    case PoseSource::ProvidedAsInit: return "provided-as-init";
  }
  return "unknown";
}

PoseSource pose_source_from_string(std::string_view s) {
  if (s == "solve") return PoseSource::Solve;
  if (s == "provided") return PoseSource::Provided;
  if (s == "provided-as-init") return PoseSource::ProvidedAsInit;
  throw Error(ErrorKind::InvalidArgument, "unknown pose source '" + std::string(s) + "'");
}

NormalizationResult normalize_landmarks(const LandmarkSet& raw, const CameraIntrinsics& camera,
                                        const NormalizeOptions& opts,
                                        const std::optional<HeadPose>& provided) {
  NormalizationResult out;
  switch (opts.pose_source) {
    case PoseSource::Solve: {
      const PnpResult r = estimate_head_pose(raw, opts.model, camera, opts.pnp);
      out.pose = r.pose;
      out.rms_residual = r.rms_residual;
      out.pnp_iterations = r.iterations;
      break;
    }
    case PoseSource::Provided:
      if (!provided) throw Error(ErrorKind::InvalidArgument, "pose source 'provided' needs a pose");
      provided->validate();
      out.pose = *provided;
      out.rms_residual = reprojection_rms(raw, opts.model, camera, *provided);
      break;
    case PoseSource::ProvidedAsInit: {
      if (!provided) {
        throw Error(ErrorKind::InvalidArgument, "pose source 'provided-as-init' needs a pose");
      }
      const PnpResult r = estimate_head_pose(raw, opts.model, camera, opts.pnp, provided);
      out.pose = r.pose;
      out.rms_residual = r.rms_residual;
      out.pnp_iterations = r.iterations;
      break;
    }
  }
  out.rotation = build_normalization_rotation(out.pose);
  out.warp = build_warp_matrix(camera, opts.camera, out.rotation, out.pose.translation.norm());
  out.landmarks = warp_landmarks(out.warp, raw);
  return out;
}

GazeRecord normalize_record(const GazeRecord& record, const NormalizeOptions& opts,
                            NormalizationResult* details) {
  if (!record.raw) throw Error(ErrorKind::InvalidArgument, "record has no raw block");
  if (!record.raw->gaze) throw Error(ErrorKind::InvalidArgument, "record has no raw gaze");
  const NormalizationResult n = normalize_landmarks(record.raw->landmarks, record.raw->intrinsics,
                                                    opts, record.raw->head_pose);
  GazeRecord out = record;
  out.normalized = true;
  out.landmarks_norm = n.landmarks;
  out.gaze_norm = rotate_gaze(n.rotation, *record.raw->gaze).normalized();
  out.norm_width = opts.camera.width;
  if (details) *details = n;
  return out;
}

}  // namespace lgaze

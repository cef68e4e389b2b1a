#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgaze/geometry.hpp"
#include "lgaze/landmarks.hpp"
#include "lgaze/normalize.hpp"
#include "lgaze/random.hpp"
#include "lgaze/records.hpp"

namespace lgaze {

struct ValueRange {
  double lo = 0.0;
  double hi = 0.0;

  double draw(Rng& rng) const { return lo == hi ? lo : uniform(rng, lo, hi); }
};

// Face-and-eyeball generator used as a ground-truth oracle. Head angles are
// applied as R_h = R_y(yaw) R_x(-pitch) R_z(roll); gaze angles are relative
// to the head and both eyes look in parallel.
struct SynthConfig {
  int n_samples = 1000;
  int n_subjects = 10;
  int first_subject = 1;
  std::string dataset = "synthetic";

  ValueRange head_yaw_deg{-25.0, 25.0};
  ValueRange head_pitch_deg{-15.0, 15.0};
  ValueRange head_roll_deg{-10.0, 10.0};
  ValueRange gaze_yaw_deg{-30.0, 30.0};
  ValueRange gaze_pitch_deg{-20.0, 20.0};
  ValueRange tx_mm{-40.0, 40.0};
  ValueRange ty_mm{-30.0, 30.0};
  ValueRange tz_mm{450.0, 650.0};

  double pixel_noise_px = 0.0;
  double shape_jitter_mm = 2.0;   // isotropic sigma per rigid model point
  double eyeball_radius_mm = 12.0;
  double eyeball_depth_mm = 8.0;  // center behind the corner midpoint
  double iris_angle_deg = 30.0;   // iris rim half-angle seen from the center

  CameraIntrinsics camera{960.0, 960.0, 640.0, 480.0};
  double image_width = 1280.0;
  double image_height = 960.0;
  int max_rejections = 1000;  // per record

  PoseSource pose_source = PoseSource::ProvidedAsInit;
  NormalizedCamera norm_camera;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static SynthConfig from_json(const nlohmann::json& j);
};

// One subject's head-frame geometry. Only head-rigid slots (corners, lids,
// nose tip, glabella) are filled in `rigid`.
struct SubjectShape {
  std::array<Vec3, kNumLandmarks> rigid{};
  std::array<Vec3, 2> eyeball_center{};  // left, right
};

// Default geometry with seeded Gaussian jitter (cfg.shape_jitter_mm);
// `subject_index` is 0-based.
SubjectShape subject_shape(const SynthConfig& cfg, int subject_index);

// All 20 head-frame points for a head-frame gaze direction: rigid points
// unchanged, iris points on the eyeball sphere rotated by the gaze.
std::array<Vec3, kNumLandmarks> face_points(const SubjectShape& shape, const Vec3& gaze_head,
                                            const SynthConfig& cfg);

// Projects the face into the camera (plus noise when `noise_rng` is given)
// and normalizes it. The record holds the raw block, pose_gt and the
// camera-frame gaze. Throws PointBehindCamera, InvalidArgument when a point
// leaves the image, or whatever normalization raises.
GazeRecord render_record(const SynthConfig& cfg, const SubjectShape& shape, const HeadPose& pose,
                         const Vec3& gaze_head, Rng* noise_rng);

// Deterministic per seed: record i draws from its own substream, so the
// output does not depend on generation order. Throws RejectionLimit when a
// record needs more than cfg.max_rejections redraws.
std::vector<GazeRecord> generate_synthetic(const SynthConfig& cfg);

}  // namespace lgaze

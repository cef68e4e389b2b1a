#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgaze/features.hpp"
#include "lgaze/geometry.hpp"
#include "lgaze/landmarks.hpp"

namespace lgaze {

inline constexpr int kRecordSchemaVersion = 1;

// Camera-frame observation kept alongside a record so it can be normalized
// again with different settings.
struct RawObservation {
  LandmarkSet landmarks;
  CameraIntrinsics intrinsics;
  std::optional<HeadPose> head_pose;  // dataset-provided pose
  std::optional<Vec3> gaze;           // camera-frame gaze

  friend bool operator==(const RawObservation& a, const RawObservation& b);
};

// One sample. JSONL field names:
//   schema          int, must equal kRecordSchemaVersion
//   dataset         string tag
//   subject         int
//   frame           string
//   landmarks_norm  20 x [u, v] in normalized-camera pixels
//   gaze_norm       [x, y, z], unit length
//   norm_width      normalized image width in px (feature scale), default 448
//   raw             optional {landmarks, intrinsics {fx, fy, cx, cy},
//                   head_pose {rotation: 9 row-major, translation: 3}, gaze}
//   pose_gt         optional ground-truth pose (synthetic data)
// landmarks_norm and gaze_norm may be omitted only in raw input files that
// are about to be normalized.
struct GazeRecord {
  std::string dataset;
  int subject = 0;
  std::string frame;
  bool normalized = true;
  LandmarkSet landmarks_norm;
  Vec3 gaze_norm = Vec3(0.0, 0.0, -1.0);
  double norm_width = 448.0;
  std::optional<RawObservation> raw;
  std::optional<HeadPose> pose_gt;

  friend bool operator==(const GazeRecord& a, const GazeRecord& b);
};

struct RecordReadOptions {
  bool require_normalized = true;
};

nlohmann::json record_to_json(const GazeRecord& r);

// Strict: rejects unknown fields, non-finite numbers, wrong landmark counts
// and gaze vectors whose norm is off by more than 1e-3; a norm off by more
// than 1e-6 (but within 1e-3) is renormalized with a warning. Throws
// InvalidArgument or SchemaVersionMismatch.
GazeRecord record_from_json(const nlohmann::json& j, const RecordReadOptions& opts);
inline GazeRecord record_from_json(const nlohmann::json& j) {
  return record_from_json(j, RecordReadOptions{});
}

// JSONL reader. Blank lines are skipped. Malformed lines raise ParseError
// carrying the 1-based line number; a wrong schema version raises
// SchemaVersionMismatch with the line in the message.
std::vector<GazeRecord> read_records(std::istream& in, const RecordReadOptions& opts);
std::vector<GazeRecord> load_records(const std::filesystem::path& path,
                                     const RecordReadOptions& opts);
inline std::vector<GazeRecord> load_records(const std::filesystem::path& path) {
  return load_records(path, RecordReadOptions{});
}

void write_records(std::ostream& out, std::span<const GazeRecord> records);
void save_records(const std::filesystem::path& path, std::span<const GazeRecord> records);

// Features of normalized records in the given layout, each scaled by its
// record's norm_width. Throws EmptyData for records that are not normalized.
LabeledFeatures make_labeled_features(std::span<const GazeRecord> records, FeatureLayout layout,
                                      HeadAnchorMode head_mode = HeadAnchorMode::Centered);

nlohmann::json pose_to_json(const HeadPose& pose);
HeadPose pose_from_json(const nlohmann::json& j);
nlohmann::json intrinsics_to_json(const CameraIntrinsics& k);
CameraIntrinsics intrinsics_from_json(const nlohmann::json& j);
nlohmann::json normalized_camera_to_json(const NormalizedCamera& c);
NormalizedCamera normalized_camera_from_json(const nlohmann::json& j);

}  // namespace lgaze

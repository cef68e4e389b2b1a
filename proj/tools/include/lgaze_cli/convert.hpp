#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgaze/records.hpp"

namespace lgaze::cli {

// One line of a dense-mesh landmark export: image-space points indexed by
// mesh vertex id, plus camera metadata. Fields:
//   subject (int, required), frame (string), dataset (string),
//   mesh ([[x, y] or [x, y, z]] covering every vertex id used by the 20-slot layout),
//   intrinsics ({fx, fy, cx, cy}, required), head_pose ({rotation, translation}),
//   gaze (camera-frame unit vector).
// Any other field is rejected.
GazeRecord record_from_mesh_json(const nlohmann::json& j, const std::string& default_dataset);

// Converts a mesh JSONL stream into raw-only records. Errors name the line.
std::vector<GazeRecord> convert_mesh_stream(std::istream& in, const std::string& default_dataset);

}  // namespace lgaze::cli

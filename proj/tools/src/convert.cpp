#include "lgaze_cli/convert.hpp"

#include <algorithm>
#include <cmath>
#include <istream>

#include "lgaze/error.hpp"

namespace lgaze::cli {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); }

double finite(const nlohmann::json& v, const char* what) {
  if (!v.is_number()) bad(std::string(what) + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(std::string(what) + " must be finite");
  return d;
}

}  // namespace

GazeRecord record_from_mesh_json(const nlohmann::json& j, const std::string& default_dataset) {
  if (!j.is_object()) bad("line is not a JSON object");
  for (const auto& [key, v] : j.items()) {
    static const std::vector<std::string> known = {"subject", "frame", "dataset", "mesh",
                                                   "intrinsics", "head_pose", "gaze"};
    if (std::find(known.begin(), known.end(), key) == known.end()) bad("unknown field '" + key + "'");
  }
  if (!j.contains("subject") || !j["subject"].is_number_integer()) bad("missing integer 'subject'");
  if (!j.contains("mesh") || !j["mesh"].is_array()) bad("missing array 'mesh'");
  if (!j.contains("intrinsics")) bad("missing 'intrinsics'");

  GazeRecord r;
  r.dataset = j.contains("dataset") ? j["dataset"].get<std::string>() : default_dataset;
  r.subject = j["subject"].get<int>();
  if (j.contains("frame")) r.frame = j["frame"].get<std::string>();
  r.normalized = false;

  RawObservation raw;
  const auto& mesh = j["mesh"];
  const int needed = *std::max_element(kMeshIndex.begin(), kMeshIndex.end()) + 1;
  if (static_cast<int>(mesh.size()) < needed) {
    bad("mesh has " + std::to_string(mesh.size()) + " points, need at least " + std::to_string(needed));
  }
  for (std::size_t s = 0; s < kNumLandmarks; ++s) {
    const auto& p = mesh[static_cast<std::size_t>(kMeshIndex[s])];
    if (!p.is_array() || p.size() < 2 || p.size() > 3) bad("mesh point must be [x, y] or [x, y, z]");
    raw.landmarks[s] = Vec2(finite(p[0], "mesh x"), finite(p[1], "mesh y"));
  }
  raw.intrinsics = intrinsics_from_json(j["intrinsics"]);
  if (j.contains("head_pose")) raw.head_pose = pose_from_json(j["head_pose"]);
  if (j.contains("gaze")) {
    const auto& g = j["gaze"];
    if (!g.is_array() || g.size() != 3) bad("gaze must be [x, y, z]");
    const Vec3 v(finite(g[0], "gaze"), finite(g[1], "gaze"), finite(g[2], "gaze"));
    if (std::abs(v.norm() - 1.0) > 1e-3) bad("gaze is not a unit vector");
    raw.gaze = v.normalized();
  }
  r.raw = std::move(raw);
  return r;
}

std::vector<GazeRecord> convert_mesh_stream(std::istream& in, const std::string& default_dataset) {
  std::vector<GazeRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_mesh_json(nlohmann::json::parse(line), default_dataset));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    } catch (const Error& e) {
      throw ParseError(line_no, e.detail());
    }
  }
  return out;
}

}  // namespace lgaze::cli

#include "lgaze/records.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string_view>

#include <spdlog/spdlog.h>

#include "lgaze/error.hpp"

namespace lgaze {

namespace {

bool same_pose(const std::optional<HeadPose>& a, const std::optional<HeadPose>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return a->rotation == b->rotation && a->translation == b->translation;
}

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); }

double finite_number(const nlohmann::json& j, std::string_view field) {
  if (!j.is_number()) bad(std::string(field) + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(std::string(field) + " is not finite");
  return v;
}

std::vector<double> number_array(const nlohmann::json& j, std::size_t n, std::string_view field) {
  if (!j.is_array() || j.size() != n) {
    bad(std::string(field) + " must be an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  out.reserve(n);
  for (const auto& v : j) out.push_back(finite_number(v, field));
  return out;
}

nlohmann::json landmarks_to_json(const LandmarkSet& lm) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& p : lm.points) a.push_back({p.x(), p.y()});
  return a;
}

LandmarkSet landmarks_from_json(const nlohmann::json& j, std::string_view field) {
  if (!j.is_array() || j.size() != kNumLandmarks) {
    bad(std::string(field) + " must hold " + std::to_string(kNumLandmarks) + " points, got " +
        (j.is_array() ? std::to_string(j.size()) : std::string("a non-array")));
  }
  LandmarkSet lm;
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const auto uv = number_array(j[i], 2, field);
    lm[i] = Vec2(uv[0], uv[1]);
  }
  return lm;
}

nlohmann::json vec3_to_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 vec3_from_json(const nlohmann::json& j, std::string_view field) {
  const auto v = number_array(j, 3, field);
  return {v[0], v[1], v[2]};
}

// Unit-norm policy shared by every stored gaze vector.
Vec3 checked_unit(const Vec3& g, std::string_view field) {
  const double n = g.norm();
  const double dev = std::abs(n - 1.0);
  if (dev <= 1e-6) return g;
  if (dev <= 1e-3) {
    spdlog::warn("{} has norm {:.9f}; renormalized", field, n);
    return g / n;
  }
  bad(std::string(field) + " is not a unit vector (norm " + std::to_string(n) + ")");
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                    std::string_view where) {
  if (!j.is_object()) bad(std::string(where) + " must be an object");
  for (const auto& [key, v] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) bad("unknown field '" + key + "' in " + std::string(where));
  }
}

}  // namespace

bool operator==(const RawObservation& a, const RawObservation& b) {
  return a.landmarks == b.landmarks && a.intrinsics == b.intrinsics &&
         same_pose(a.head_pose, b.head_pose) && a.gaze == b.gaze;
}

bool operator==(const GazeRecord& a, const GazeRecord& b) {
  return a.dataset == b.dataset && a.subject == b.subject && a.frame == b.frame &&
         a.normalized == b.normalized && a.landmarks_norm == b.landmarks_norm &&
         a.gaze_norm == b.gaze_norm && a.norm_width == b.norm_width && a.raw == b.raw &&
         same_pose(a.pose_gt, b.pose_gt);
}

nlohmann::json pose_to_json(const HeadPose& pose) {
  nlohmann::json rot = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(pose.rotation(r, c));
  }
  return {{"rotation", std::move(rot)}, {"translation", vec3_to_json(pose.translation)}};
}

HeadPose pose_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"rotation", "translation"}, "head pose");
  const auto rot = number_array(j.at("rotation"), 9, "rotation");
  HeadPose p;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) p.rotation(r, c) = rot[static_cast<std::size_t>(3 * r + c)];
  }
  p.translation = vec3_from_json(j.at("translation"), "translation");
  p.validate();
  return p;
}

nlohmann::json intrinsics_to_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}};
}

CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"fx", "fy", "cx", "cy"}, "intrinsics");
  CameraIntrinsics k{finite_number(j.at("fx"), "fx"), finite_number(j.at("fy"), "fy"),
                     finite_number(j.at("cx"), "cx"), finite_number(j.at("cy"), "cy")};
  k.validate();
  return k;
}

nlohmann::json normalized_camera_to_json(const NormalizedCamera& c) {
  return {{"intrinsics", intrinsics_to_json(c.intrinsics)},
          {"distance_mm", c.distance_mm},
          {"width", c.width},
          {"height", c.height}};
}

NormalizedCamera normalized_camera_from_json(const nlohmann::json& j) {
  NormalizedCamera c;
  for (const auto& [key, v] : j.items()) {
    if (key == "intrinsics") c.intrinsics = intrinsics_from_json(v);
    else if (key == "distance_mm") c.distance_mm = v.get<double>();
    else if (key == "width") c.width = v.get<double>();
    else if (key == "height") c.height = v.get<double>();
    else throw Error(ErrorKind::InvalidArgument, "unknown normalized-camera key '" + key + "'");
  }
  return c;
}

nlohmann::json record_to_json(const GazeRecord& r) {
  nlohmann::json j = {{"schema", kRecordSchemaVersion},
                      {"dataset", r.dataset},
                      {"subject", r.subject},
                      {"frame", r.frame}};
  if (r.normalized) {
    j["landmarks_norm"] = landmarks_to_json(r.landmarks_norm);
    j["gaze_norm"] = vec3_to_json(r.gaze_norm);
    j["norm_width"] = r.norm_width;
  }
  if (r.raw) {
    nlohmann::json raw = {{"landmarks", landmarks_to_json(r.raw->landmarks)},
                          {"intrinsics", intrinsics_to_json(r.raw->intrinsics)}};
    if (r.raw->head_pose) raw["head_pose"] = pose_to_json(*r.raw->head_pose);
    if (r.raw->gaze) raw["gaze"] = vec3_to_json(*r.raw->gaze);
    j["raw"] = std::move(raw);
  }
  if (r.pose_gt) j["pose_gt"] = pose_to_json(*r.pose_gt);
  return j;
}

GazeRecord record_from_json(const nlohmann::json& j, const RecordReadOptions& opts) {
  reject_unknown(j,
                 {"schema", "dataset", "subject", "frame", "landmarks_norm", "gaze_norm",
                  "norm_width", "raw", "pose_gt"},
                 "record");
  if (!j.contains("schema") || !j["schema"].is_number_integer()) bad("missing integer 'schema'");
  const int schema = j["schema"].get<int>();
  if (schema != kRecordSchemaVersion) {
    throw Error(ErrorKind::SchemaVersionMismatch,
                "record schema " + std::to_string(schema) + ", expected " +
                    std::to_string(kRecordSchemaVersion));
  }
  GazeRecord r;
  if (!j.contains("dataset") || !j["dataset"].is_string()) bad("missing string 'dataset'");
  r.dataset = j["dataset"].get<std::string>();
  if (!j.contains("subject") || !j["subject"].is_number_integer()) bad("missing integer 'subject'");
  r.subject = j["subject"].get<int>();
  if (j.contains("frame")) {
    if (!j["frame"].is_string()) bad("'frame' must be a string");
    r.frame = j["frame"].get<std::string>();
  }

  const bool has_lm = j.contains("landmarks_norm");
  const bool has_gaze = j.contains("gaze_norm");
  if (has_lm != has_gaze) bad("landmarks_norm and gaze_norm must appear together");
  r.normalized = has_lm;
  if (r.normalized) {
    r.landmarks_norm = landmarks_from_json(j["landmarks_norm"], "landmarks_norm");
    r.gaze_norm = checked_unit(vec3_from_json(j["gaze_norm"], "gaze_norm"), "gaze_norm");
    if (j.contains("norm_width")) {
      r.norm_width = finite_number(j["norm_width"], "norm_width");
      if (!(r.norm_width > 0.0)) bad("norm_width must be positive");
    }
  } else if (opts.require_normalized) {
    bad("record lacks landmarks_norm / gaze_norm");
  }

  if (j.contains("raw")) {
    const auto& rj = j["raw"];
    reject_unknown(rj, {"landmarks", "intrinsics", "head_pose", "gaze"}, "raw");
    RawObservation raw;
    raw.landmarks = landmarks_from_json(rj.at("landmarks"), "raw.landmarks");
    raw.intrinsics = intrinsics_from_json(rj.at("intrinsics"));
    if (rj.contains("head_pose")) raw.head_pose = pose_from_json(rj["head_pose"]);
    if (rj.contains("gaze")) raw.gaze = checked_unit(vec3_from_json(rj["gaze"], "raw.gaze"), "raw.gaze");
    r.raw = std::move(raw);
  } else if (!r.normalized) {
    bad("record has neither normalized nor raw landmarks");
  }
  if (j.contains("pose_gt")) r.pose_gt = pose_from_json(j["pose_gt"]);
  return r;
}

std::vector<GazeRecord> read_records(std::istream& in, const RecordReadOptions& opts) {
  std::vector<GazeRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line), opts));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::SchemaVersionMismatch) {
        throw Error(ErrorKind::SchemaVersionMismatch,
                    "line " + std::to_string(line_no) + ": " + e.detail());
      }
      throw ParseError(line_no, e.detail());
    }
  }
  return out;
}

std::vector<GazeRecord> load_records(const std::filesystem::path& path,
                                     const RecordReadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return read_records(in, opts);
}

void write_records(std::ostream& out, std::span<const GazeRecord> records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

void save_records(const std::filesystem::path& path, std::span<const GazeRecord> records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  write_records(out, records);
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

LabeledFeatures make_labeled_features(std::span<const GazeRecord> records, FeatureLayout layout,
                                      HeadAnchorMode head_mode) {
  const auto n = static_cast<Eigen::Index>(records.size());
  const auto dim = static_cast<Eigen::Index>(feature_dim(layout));
  LabeledFeatures out;
  out.features.resize(dim, n);
  out.targets.resize(3, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const GazeRecord& r = records[static_cast<std::size_t>(j)];
    if (!r.normalized) {
      throw Error(ErrorKind::EmptyData, "record " + r.dataset + "/" + std::to_string(r.subject) +
                                            "/" + r.frame + " is not normalized");
    }
    if (layout == FeatureLayout::Global) {
      const auto f = global_features(r.landmarks_norm, r.norm_width);
      for (Eigen::Index i = 0; i < dim; ++i) out.features(i, j) = f.values[static_cast<std::size_t>(i)];
    } else {
      const auto row = siamese_row(local_features(r.landmarks_norm, r.norm_width, head_mode));
      for (Eigen::Index i = 0; i < dim; ++i) out.features(i, j) = row[static_cast<std::size_t>(i)];
    }
    out.targets.col(j) = r.gaze_norm;
  }
  return out;
}

}  // namespace lgaze

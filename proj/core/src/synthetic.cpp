#include "lgaze/synthetic.hpp"

#include <cstdio>

#include "lgaze/error.hpp"
#include "lgaze/pnp.hpp"

namespace lgaze {

namespace {

nlohmann::json range_json(const ValueRange& r) { return {r.lo, r.hi}; }

ValueRange range_from_json(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2) {
    throw Error(ErrorKind::InvalidArgument, key + " must be [lo, hi]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

void SynthConfig::validate() const {
  for (const ValueRange* r : {&head_yaw_deg, &head_pitch_deg, &head_roll_deg, &gaze_yaw_deg,
                              &gaze_pitch_deg, &tx_mm, &ty_mm, &tz_mm}) {
    if (!(r->lo <= r->hi)) throw Error(ErrorKind::InvalidArgument, "synthetic range has lo > hi");
  }
  const bool ok = n_samples >= 0 && n_subjects >= 1 && pixel_noise_px >= 0.0 &&
                  shape_jitter_mm >= 0.0 && eyeball_radius_mm > 0.0 && iris_angle_deg > 0.0 &&
                  iris_angle_deg < 90.0 && image_width > 0.0 && image_height > 0.0 &&
                  max_rejections >= 0 && tz_mm.lo > 0.0 && gaze_pitch_deg.lo > -90.0 &&
                  gaze_pitch_deg.hi < 90.0;
  if (!ok) throw Error(ErrorKind::InvalidArgument, "invalid synthetic configuration");
  camera.validate();
}

nlohmann::json SynthConfig::to_json() const {
  return {{"n_samples", n_samples},
          {"n_subjects", n_subjects},
          {"first_subject", first_subject},
          {"dataset", dataset},
          {"head_yaw_deg", range_json(head_yaw_deg)},
          {"head_pitch_deg", range_json(head_pitch_deg)},
          {"head_roll_deg", range_json(head_roll_deg)},
          {"gaze_yaw_deg", range_json(gaze_yaw_deg)},
          {"gaze_pitch_deg", range_json(gaze_pitch_deg)},
          {"tx_mm", range_json(tx_mm)},
          {"ty_mm", range_json(ty_mm)},
          {"tz_mm", range_json(tz_mm)},
          {"pixel_noise_px", pixel_noise_px},
          {"shape_jitter_mm", shape_jitter_mm},
          {"eyeball_radius_mm", eyeball_radius_mm},
          {"eyeball_depth_mm", eyeball_depth_mm},
          {"iris_angle_deg", iris_angle_deg},
          {"camera", intrinsics_to_json(camera)},
          {"image_width", image_width},
          {"image_height", image_height},
          {"max_rejections", max_rejections},
          {"pose_source", std::string(to_string(pose_source))},
          {"norm_camera", normalized_camera_to_json(norm_camera)},
          {"seed", seed}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "n_samples") c.n_samples = v.get<int>();
    else if (key == "n_subjects") c.n_subjects = v.get<int>();
    else if (key == "first_subject") c.first_subject = v.get<int>();
    else if (key == "dataset") c.dataset = v.get<std::string>();
    else if (key == "head_yaw_deg") c.head_yaw_deg = range_from_json(v, key);
    else if (key == "head_pitch_deg") c.head_pitch_deg = range_from_json(v, key);
    else if (key == "head_roll_deg") c.head_roll_deg = range_from_json(v, key);
    else if (key == "gaze_yaw_deg") c.gaze_yaw_deg = range_from_json(v, key);
    else if (key == "gaze_pitch_deg") c.gaze_pitch_deg = range_from_json(v, key);
    else if (key == "tx_mm") c.tx_mm = range_from_json(v, key);
    else if (key == "ty_mm") c.ty_mm = range_from_json(v, key);
    else if (key == "tz_mm") c.tz_mm = range_from_json(v, key);
    else if (key == "pixel_noise_px") c.pixel_noise_px = v.get<double>();
    else if (key == "shape_jitter_mm") c.shape_jitter_mm = v.get<double>();
    else if (key == "eyeball_radius_mm") c.eyeball_radius_mm = v.get<double>();
    else if (key == "eyeball_depth_mm") c.eyeball_depth_mm = v.get<double>();
    else if (key == "iris_angle_deg") c.iris_angle_deg = v.get<double>();
    else if (key == "camera") c.camera = intrinsics_from_json(v);
    else if (key == "image_width") c.image_width = v.get<double>();
    else if (key == "image_height") c.image_height = v.get<double>();
    else if (key == "max_rejections") c.max_rejections = v.get<int>();
    else if (key == "pose_source") c.pose_source = pose_source_from_string(v.get<std::string>());
    else if (key == "norm_camera") c.norm_camera = normalized_camera_from_json(v);
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else throw Error(ErrorKind::InvalidArgument, "unknown synthetic key '" + key + "'");
  }
  c.validate();
  return c;
}

SubjectShape subject_shape(const SynthConfig& cfg, int subject_index) {
  Rng rng(derive_seed(derive_seed(cfg.seed, "subject-shape"),
                      static_cast<std::uint64_t>(subject_index)));
  SubjectShape s;
  for (const auto& p : CanonicalFaceModel::default_rigid_geometry().points) {
    Vec3 q = p.position_mm;
    if (cfg.shape_jitter_mm > 0.0) {
      for (int a = 0; a < 3; ++a) q(a) += gaussian(rng, 0.0, cfg.shape_jitter_mm);
    }
    s.rigid[p.slot] = q;
  }
  const Vec3 back(0.0, 0.0, cfg.eyeball_depth_mm);
  s.eyeball_center[0] =
      0.5 * (s.rigid[slot::kLeftOuterCorner] + s.rigid[slot::kLeftInnerCorner]) + back;
  s.eyeball_center[1] =
      0.5 * (s.rigid[slot::kRightOuterCorner] + s.rigid[slot::kRightInnerCorner]) + back;
  return s;
}

std::array<Vec3, kNumLandmarks> face_points(const SubjectShape& shape, const Vec3& gaze_head,
                                            const SynthConfig& cfg) {
  const PitchYaw py = vector_to_pitchyaw(gaze_head);
  const Mat3 eye_rotation = rotation_y(py.yaw) * rotation_x(-py.pitch);
  const double r = cfg.eyeball_radius_mm;
  const double sa = std::sin(deg2rad(cfg.iris_angle_deg));
  const double ca = std::cos(deg2rad(cfg.iris_angle_deg));

  std::array<Vec3, kNumLandmarks> pts = shape.rigid;
  for (int eye = 0; eye < 2; ++eye) {
    // The nose is at +x from the left eye and -x from the right eye.
    const double inner = eye == 0 ? 1.0 : -1.0;
    const std::size_t base = eye == 0 ? slot::kLeftEyeBegin : slot::kRightEyeBegin;
    const Vec3& c = shape.eyeball_center[static_cast<std::size_t>(eye)];
    auto place = [&](std::size_t offset, const Vec3& local) {
      pts[base + offset] = c + r * (eye_rotation * local);
    };
    place(slot::kIrisCenter, Vec3(0.0, 0.0, -1.0));
    place(slot::kIrisInner, Vec3(inner * sa, 0.0, -ca));
    place(slot::kIrisTop, Vec3(0.0, -sa, -ca));
    place(slot::kIrisOuter, Vec3(-inner * sa, 0.0, -ca));
    place(slot::kIrisBottom, Vec3(0.0, sa, -ca));
  }
  return pts;
}

GazeRecord render_record(const SynthConfig& cfg, const SubjectShape& shape, const HeadPose& pose,
                         const Vec3& gaze_head, Rng* noise_rng) {
  const auto pts = face_points(shape, gaze_head, cfg);
  RawObservation raw;
  raw.intrinsics = cfg.camera;
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    Vec2 uv = project(cfg.camera, pose.rotation * pts[i] + pose.translation);
    if (noise_rng && cfg.pixel_noise_px > 0.0) {
      uv.x() += gaussian(*noise_rng, 0.0, cfg.pixel_noise_px);
      uv.y() += gaussian(*noise_rng, 0.0, cfg.pixel_noise_px);
    }
    if (uv.x() < 0.0 || uv.y() < 0.0 || uv.x() >= cfg.image_width || uv.y() >= cfg.image_height) {
      throw Error(ErrorKind::InvalidArgument, "landmark outside the image");
    }
    raw.landmarks[i] = uv;
  }
  raw.head_pose = pose;
  raw.gaze = (pose.rotation * gaze_head).normalized();

  GazeRecord rec;
  rec.dataset = cfg.dataset;
  rec.normalized = false;
  rec.raw = raw;
  rec.pose_gt = pose;

  NormalizeOptions opts;
  opts.pose_source = cfg.pose_source;
  opts.camera = cfg.norm_camera;
  return normalize_record(rec, opts);
}

std::vector<GazeRecord> generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<SubjectShape> shapes;
  shapes.reserve(static_cast<std::size_t>(cfg.n_subjects));
  for (int s = 0; s < cfg.n_subjects; ++s) shapes.push_back(subject_shape(cfg, s));

  const std::uint64_t record_root = derive_seed(cfg.seed, "record");
  std::vector<GazeRecord> out;
  out.reserve(static_cast<std::size_t>(cfg.n_samples));
  for (int i = 0; i < cfg.n_samples; ++i) {
    Rng rng(derive_seed(record_root, static_cast<std::uint64_t>(i)));
    const int subject = i % cfg.n_subjects;
    for (int attempt = 0;; ++attempt) {
      if (attempt > cfg.max_rejections) {
        throw Error(ErrorKind::RejectionLimit, "record " + std::to_string(i) + " rejected " +
                                                   std::to_string(attempt) + " times");
      }
      HeadPose pose;
      pose.rotation = rotation_y(deg2rad(cfg.head_yaw_deg.draw(rng))) *
                      rotation_x(-deg2rad(cfg.head_pitch_deg.draw(rng))) *
                      rotation_z(deg2rad(cfg.head_roll_deg.draw(rng)));
      pose.translation = Vec3(cfg.tx_mm.draw(rng), cfg.ty_mm.draw(rng), cfg.tz_mm.draw(rng));
      const double gaze_pitch = deg2rad(cfg.gaze_pitch_deg.draw(rng));
      const double gaze_yaw = deg2rad(cfg.gaze_yaw_deg.draw(rng));
      const Vec3 gaze_head = pitchyaw_to_vector(gaze_pitch, gaze_yaw);
      try {
        GazeRecord rec = render_record(cfg, shapes[static_cast<std::size_t>(subject)], pose,
                                       gaze_head, &rng);
        rec.subject = cfg.first_subject + subject;
        char frame[32];
        std::snprintf(frame, sizeof frame, "%07d", i);
        rec.frame = frame;
        out.push_back(std::move(rec));
        break;
      } catch (const Error&) {
        // Redraw: off-image landmark or a failed normalization.
      }
    }
  }
  return out;
}

}  // namespace lgaze

#include "lgaze/pnp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "lgaze/error.hpp"

namespace lgaze {

namespace {

// Anthropometric default, in a frame anchored at the inner eye corners.
// Shifted to the documented origin in `default_rigid_geometry`.
const std::vector<ModelPoint>& raw_geometry() {
  static const std::vector<ModelPoint> points = {
      {slot::kLeftOuterCorner, {-45.5, 0.0, 9.0}},
      {slot::kLeftInnerCorner, {-17.5, 0.0, 0.0}},
      {slot::kLeftEyeBegin + slot::kLowerLid, {-31.5, 5.5, -1.0}},
      {slot::kLeftEyeBegin + slot::kUpperLid, {-31.5, -5.5, -1.0}},
      {slot::kRightOuterCorner, {45.5, 0.0, 9.0}},
      {slot::kRightInnerCorner, {17.5, 0.0, 0.0}},
      {slot::kRightEyeBegin + slot::kLowerLid, {31.5, 5.5, -1.0}},
      {slot::kRightEyeBegin + slot::kUpperLid, {31.5, -5.5, -1.0}},
      {slot::kNoseTip, {0.0, 48.0, -22.0}},
      {slot::kGlabella, {0.0, -12.0, -6.0}},
  };
  return points;
}

bool is_stable_slot(std::size_t s) {
  return s == slot::kLeftOuterCorner || s == slot::kLeftInnerCorner ||
         s == slot::kRightOuterCorner || s == slot::kRightInnerCorner ||
         s == slot::kNoseTip || s == slot::kGlabella;
}

double sum_squared_residual(const LandmarkSet& landmarks, const CanonicalFaceModel& model,
                            const CameraIntrinsics& k, const HeadPose& pose) {
  double cost = 0.0;
  for (const auto& mp : model.points) {
    const Vec2 uv = project(k, pose.rotation * mp.position_mm + pose.translation);
    cost += (uv - landmarks[mp.slot]).squaredNorm();
  }
  return cost;
}

}  // namespace

CanonicalFaceModel CanonicalFaceModel::default_rigid_geometry() {
  const auto& raw = raw_geometry();
  Vec3 corners = Vec3::Zero();
  Vec3 nose = Vec3::Zero();
  for (const auto& p : raw) {
    if (p.slot == slot::kNoseTip) nose = p.position_mm;
    if (p.slot == slot::kLeftOuterCorner || p.slot == slot::kLeftInnerCorner ||
        p.slot == slot::kRightOuterCorner || p.slot == slot::kRightInnerCorner) {
      corners += 0.25 * p.position_mm;
    }
  }
  const Vec3 origin = 0.5 * (corners + nose);
  CanonicalFaceModel model;
  for (const auto& p : raw) model.points.push_back({p.slot, p.position_mm - origin});
  return model;
}

CanonicalFaceModel CanonicalFaceModel::default_model() {
  CanonicalFaceModel full = default_rigid_geometry();
  CanonicalFaceModel model;
  for (const auto& p : full.points) {
    if (is_stable_slot(p.slot)) model.points.push_back(p);
  }
  return model;
}

const Vec3* CanonicalFaceModel::find(std::size_t s) const {
  for (const auto& p : points) {
    if (p.slot == s) return &p.position_mm;
  }
  return nullptr;
}

void CanonicalFaceModel::validate() const {
  if (points.size() < 6) {
    throw Error(ErrorKind::InvalidArgument, "face model needs at least 6 points");
  }
  std::set<std::size_t> seen;
  for (const auto& p : points) {
    if (p.slot >= kNumLandmarks) {
      throw Error(ErrorKind::InvalidArgument, "face model slot out of range");
    }
    if (!seen.insert(p.slot).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate slot in face model");
    }
    if (!p.position_mm.allFinite()) {
      throw Error(ErrorKind::InvalidArgument, "non-finite face model coordinate");
    }
  }
  for (std::size_t s : {slot::kLeftOuterCorner, slot::kLeftInnerCorner, slot::kRightOuterCorner,
                        slot::kRightInnerCorner, slot::kNoseTip, slot::kGlabella}) {
    if (!seen.contains(s)) {
      throw Error(ErrorKind::InvalidArgument,
                  "face model is missing required slot " + std::string(slot_name(s)));
    }
  }
}

CanonicalFaceModel CanonicalFaceModel::from_json(const nlohmann::json& j) {
  if (!j.is_array()) {
    throw Error(ErrorKind::InvalidArgument, "face model JSON must be an array");
  }
  CanonicalFaceModel model;
  for (const auto& e : j) {
    for (const auto& [key, _] : e.items()) {
      if (key != "slot" && key != "x_mm" && key != "y_mm" && key != "z_mm") {
        throw Error(ErrorKind::InvalidArgument, "unknown face model field '" + key + "'");
      }
    }
    model.points.push_back({e.at("slot").get<std::size_t>(),
                            Vec3(e.at("x_mm").get<double>(), e.at("y_mm").get<double>(),
                                 e.at("z_mm").get<double>())});
  }
  model.validate();
  return model;
}

nlohmann::json CanonicalFaceModel::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : points) {
    j.push_back({{"slot", p.slot},
                 {"x_mm", p.position_mm.x()},
                 {"y_mm", p.position_mm.y()},
                 {"z_mm", p.position_mm.z()}});
  }
  return j;
}

CanonicalFaceModel CanonicalFaceModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, path.string() + ": " + e.what());
  }
  return from_json(j);
}

void CanonicalFaceModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

std::string_view to_string(PnpInit init) {
  switch (init) {
    case PnpInit::IdentityAtDistance: return "identity-at-distance";
    case PnpInit::WeakPerspective: return "weak-perspective";
    case PnpInit::ProvidedPose: return "provided-pose";
  }
  return "?";
}

PnpInit pnp_init_from_string(std::string_view s) {
  for (PnpInit i : {PnpInit::IdentityAtDistance, PnpInit::WeakPerspective, PnpInit::ProvidedPose}) {
    if (s == to_string(i)) return i;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown PnP init strategy '" + std::string(s) + "'");
}

nlohmann::json PnpConfig::to_json() const {
  return {{"init_strategy", to_string(init_strategy)},
          {"initial_distance_mm", initial_distance_mm},
          {"max_iters", max_iters},
          {"lm_lambda0", lm_lambda0},
          {"tol_residual", tol_residual},
          {"tol_step", tol_step}};
}

PnpConfig PnpConfig::from_json(const nlohmann::json& j) {
  PnpConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "init_strategy") c.init_strategy = pnp_init_from_string(v.get<std::string>());
    else if (key == "initial_distance_mm") c.initial_distance_mm = v.get<double>();
    else if (key == "max_iters") c.max_iters = v.get<int>();
    else if (key == "lm_lambda0") c.lm_lambda0 = v.get<double>();
    else if (key == "tol_residual") c.tol_residual = v.get<double>();
    else if (key == "tol_step") c.tol_step = v.get<double>();
    else throw Error(ErrorKind::InvalidArgument, "unknown PnP config key '" + key + "'");
  }
  c.validate();
  return c;
}

void PnpConfig::validate() const {
  if (max_iters < 1 || !(lm_lambda0 > 0.0) || !(tol_residual > 0.0) || !(tol_step > 0.0) ||
      !(initial_distance_mm > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "invalid PnP configuration");
  }
}

std::vector<Vec2> project_points(const CanonicalFaceModel& model, const HeadPose& pose,
                                 const CameraIntrinsics& k) {
  std::vector<Vec2> out;
  out.reserve(model.points.size());
  for (const auto& p : model.points) {
    out.push_back(project(k, pose.rotation * p.position_mm + pose.translation));
  }
  return out;
}

HeadPose weak_perspective_init(const LandmarkSet& landmarks, const CanonicalFaceModel& model,
                               const CameraIntrinsics& k) {
  const auto n = static_cast<Eigen::Index>(model.points.size());
  if (n < 4) throw Error(ErrorKind::TooFewPoints, "weak-perspective init needs >= 4 points");
  k.validate();

  Eigen::Matrix3Xd x(3, n);
  Eigen::Matrix2Xd m(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& mp = model.points[static_cast<std::size_t>(i)];
    x.col(i) = mp.position_mm;
    const Vec2& u = landmarks[mp.slot];
    m.col(i) = Vec2((u.x() - k.cx) / k.fx, (u.y() - k.cy) / k.fy);
  }
  const Vec3 x_mean = x.rowwise().mean();
  const Vec2 m_mean = m.rowwise().mean();
  const Eigen::Matrix3Xd xc = x.colwise() - x_mean;
  const Eigen::Matrix2Xd mc = m.colwise() - m_mean;

  Eigen::JacobiSVD<Eigen::MatrixXd> spread(xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto sv = spread.singularValues();
  if (!(sv(0) > 0.0) || sv(1) < 1e-6 * sv(0)) {
    throw Error(ErrorKind::DegenerateConfiguration, "model points are collinear or coincident");
  }

  // Least-squares affine map mc ~= A xc through the pseudo-inverse of xc
  // (minimum-norm for coplanar models).
  Eigen::MatrixXd xc_pinv = Eigen::MatrixXd::Zero(n, 3);
  for (Eigen::Index c = 0; c < sv.size(); ++c) {
    if (sv(c) > 1e-9 * sv(0)) {
      xc_pinv += spread.matrixV().col(c) * spread.matrixU().col(c).transpose() / sv(c);
    }
  }
  const Eigen::Matrix<double, 2, 3> a = mc * xc_pinv;

  Eigen::JacobiSVD<Eigen::Matrix<double, 2, 3>> polar(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double scale = 0.5 * (polar.singularValues()(0) + polar.singularValues()(1));
  if (!(scale > 0.0)) {
    throw Error(ErrorKind::DegenerateConfiguration, "image points have no spread");
  }
  const Eigen::Matrix<double, 2, 3> rows =
      polar.matrixU() * polar.matrixV().leftCols<2>().transpose();
  Mat3 r;
  r.row(0) = rows.row(0);
  r.row(1) = rows.row(1);
  r.row(2) = rows.row(0).cross(rows.row(1));

  const double depth = 1.0 / scale;
  HeadPose pose;
  pose.rotation = orthonormalize(r);
  pose.translation = depth * Vec3(m_mean.x(), m_mean.y(), 1.0) - pose.rotation * x_mean;
  return pose;
}

ReprojectionLinearization linearize_reprojection(const LandmarkSet& landmarks,
                                                 const CanonicalFaceModel& model,
                                                 const CameraIntrinsics& k, const HeadPose& pose) {
  const auto n = static_cast<Eigen::Index>(model.points.size());
  ReprojectionLinearization lin;
  lin.residual.resize(2 * n);
  lin.jacobian.resize(2 * n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& mp = model.points[static_cast<std::size_t>(i)];
    const Vec3 q = pose.rotation * mp.position_mm;
    const Vec3 p = q + pose.translation;
    const Vec2 uv = project(k, p);
    lin.residual.segment<2>(2 * i) = uv - landmarks[mp.slot];

    const double iz = 1.0 / p.z();
    Eigen::Matrix<double, 2, 3> dproj;
    dproj << k.fx * iz, 0.0, -k.fx * p.x() * iz * iz,
             0.0, k.fy * iz, -k.fy * p.y() * iz * iz;
    // d(exp(w) q)/dw at w = 0 is -[q]x.
    Mat3 neg_skew;
    neg_skew << 0.0, q.z(), -q.y(),
                -q.z(), 0.0, q.x(),
                q.y(), -q.x(), 0.0;
    lin.jacobian.block<2, 3>(2 * i, 0) = dproj * neg_skew;
    lin.jacobian.block<2, 3>(2 * i, 3) = dproj;
  }
  return lin;
}

double reprojection_rms(const LandmarkSet& landmarks, const CanonicalFaceModel& model,
                        const CameraIntrinsics& k, const HeadPose& pose) {
  if (model.points.empty()) return 0.0;
  return std::sqrt(sum_squared_residual(landmarks, model, k, pose) /
                   static_cast<double>(model.points.size()));
}

PnpResult estimate_head_pose(const LandmarkSet& landmarks, const CanonicalFaceModel& model,
                             const CameraIntrinsics& k, const PnpConfig& cfg,
                             const std::optional<HeadPose>& init) {
  cfg.validate();
  k.validate();
  if (model.points.size() < 4) {
    throw Error(ErrorKind::TooFewPoints, "PnP needs at least 4 correspondences");
  }
  for (const auto& mp : model.points) {
    if (mp.slot >= kNumLandmarks) throw Error(ErrorKind::InvalidArgument, "model slot out of range");
  }

  HeadPose pose;
  if (init) {
    pose = *init;
  } else {
    switch (cfg.init_strategy) {
      case PnpInit::WeakPerspective:
        pose = weak_perspective_init(landmarks, model, k);
        break;
      case PnpInit::IdentityAtDistance:
        pose.rotation = Mat3::Identity();
        pose.translation = Vec3(0.0, 0.0, cfg.initial_distance_mm);
        break;
      case PnpInit::ProvidedPose:
        throw Error(ErrorKind::InvalidArgument, "provided-pose init requested without a pose");
    }
  }
  pose.validate();

  const double n_points = static_cast<double>(model.points.size());
  PnpResult result;
  double cost = sum_squared_residual(landmarks, model, k, pose);
  if (cfg.record_trace) result.cost_trace.push_back(cost);

  double lambda = cfg.lm_lambda0;
  constexpr double kLambdaMax = 1e16;
  int iter = 0;
  bool converged = std::sqrt(cost / n_points) <= cfg.tol_residual;

  while (!converged && iter < cfg.max_iters) {
    ++iter;
    const auto lin = linearize_reprojection(landmarks, model, k, pose);
    const Eigen::Matrix<double, 6, 6> jtj = lin.jacobian.transpose() * lin.jacobian;
    const Eigen::Matrix<double, 6, 1> jtr = lin.jacobian.transpose() * lin.residual;
    const double diag_max = jtj.diagonal().maxCoeff();
    if (!(diag_max > 0.0) || !std::isfinite(diag_max)) {
      throw Error(ErrorKind::SingularNormalEquations, "reprojection Jacobian vanished");
    }
    const Eigen::Matrix<double, 6, 1> damping =
        jtj.diagonal().cwiseMax(1e-12 * diag_max);

    bool accepted = false;
    bool stationary = false;
    while (!accepted) {
      Eigen::Matrix<double, 6, 6> a = jtj;
      a.diagonal() += lambda * damping;
      const Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(a);
      Eigen::Matrix<double, 6, 1> delta = Eigen::Matrix<double, 6, 1>::Zero();
      bool solved = ldlt.info() == Eigen::Success && ldlt.isPositive();
      if (solved) {
        delta = ldlt.solve(-jtr);
        solved = delta.allFinite();
      }
      if (!solved) {
        lambda *= 10.0;
        if (lambda > kLambdaMax) {
          throw Error(ErrorKind::SingularNormalEquations, "damping escalation exhausted");
        }
        continue;
      }

      const Vec3 dw = delta.head<3>();
      const Vec3 dt = delta.tail<3>();
      const double step = dw.norm() + dt.norm() / std::max(pose.translation.norm(), 1.0);
      if (step <= cfg.tol_step) {
        stationary = true;
        break;
      }

      HeadPose trial;
      trial.rotation = orthonormalize(rotation_from_axis_angle(dw) * pose.rotation);
      trial.translation = pose.translation + dt;
      double trial_cost = std::numeric_limits<double>::infinity();
      try {
        trial_cost = sum_squared_residual(landmarks, model, k, trial);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::PointBehindCamera) throw;
      }

      if (trial_cost < cost) {
        pose = trial;
        cost = trial_cost;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (cfg.record_trace) result.cost_trace.push_back(cost);
        if (std::sqrt(cost / n_points) <= cfg.tol_residual) converged = true;
      } else {
        lambda *= 10.0;
        if (lambda > kLambdaMax) {
          // No descent direction left at any damping: a stationary point.
          stationary = true;
          break;
        }
      }
    }
    if (stationary) converged = true;
  }

  result.pose = pose;
  result.rms_residual = std::sqrt(cost / n_points);
  result.iterations = iter;
  result.converged = converged;
  return result;
}

}  // namespace lgaze

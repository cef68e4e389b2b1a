#include "lgaze/features.hpp"

#include <string>

#include "lgaze/error.hpp"

namespace lgaze {

namespace {

void check_width(double width) {
  if (!(width > 0.0)) throw Error(ErrorKind::InvalidArgument, "feature scale width must be > 0");
}

}  // namespace

std::string_view to_string(HeadAnchorMode mode) {
  return mode == HeadAnchorMode::Centered ? "centered" : "raw";
}

HeadAnchorMode head_anchor_mode_from_string(std::string_view s) {
  if (s == "centered") return HeadAnchorMode::Centered;
  if (s == "raw") return HeadAnchorMode::Raw;
  throw Error(ErrorKind::InvalidArgument, "unknown head anchor mode '" + std::string(s) + "'");
}

Vec2 left_eye_centroid(const LandmarkSet& lm) {
  return 0.5 * (lm[slot::kLeftOuterCorner] + lm[slot::kLeftInnerCorner]);
}

Vec2 right_eye_centroid(const LandmarkSet& lm) {
  return 0.5 * (lm[slot::kRightOuterCorner] + lm[slot::kRightInnerCorner]);
}

Vec2 eye_corner_centroid(const LandmarkSet& lm) {
  return 0.25 * (lm[slot::kLeftOuterCorner] + lm[slot::kLeftInnerCorner] +
                 lm[slot::kRightOuterCorner] + lm[slot::kRightInnerCorner]);
}

GlobalFeatures global_features(const LandmarkSet& lm, double width) {
  check_width(width);
  const Vec2 c = eye_corner_centroid(lm);
  GlobalFeatures out;
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const Vec2 d = (lm[i] - c) / width;
    out.values[2 * i] = d.x();
    out.values[2 * i + 1] = d.y();
  }
  return out;
}

LocalFeatures local_features(const LandmarkSet& lm, double width, HeadAnchorMode head_mode) {
  check_width(width);
  const Vec2 cl = left_eye_centroid(lm);
  const Vec2 cr = right_eye_centroid(lm);
  LocalFeatures out;
  for (std::size_t k = 0; k < kLandmarksPerEye; ++k) {
    const Vec2 l = (lm[slot::kLeftEyeBegin + k] - cl) / width;
    const Vec2 r = (lm[slot::kRightEyeBegin + k] - cr) / width;
    out.left_eye[2 * k] = l.x();
    out.left_eye[2 * k + 1] = l.y();
    out.right_eye[2 * k] = r.x();
    out.right_eye[2 * k + 1] = r.y();
  }
  const Vec2 anchor_origin = head_mode == HeadAnchorMode::Centered ? Vec2(0.5 * (cl + cr))
                                                                   : Vec2::Zero().eval();
  const Vec2 nose = (lm[slot::kNoseTip] - anchor_origin) / width;
  const Vec2 glabella = (lm[slot::kGlabella] - anchor_origin) / width;
  out.head_anchors = {nose.x(), nose.y(), glabella.x(), glabella.y()};
  const Vec2 delta = (cr - cl) / width;
  out.eye_offset = {delta.x(), delta.y()};
  return out;
}

std::size_t feature_dim(FeatureLayout layout) {
  return layout == FeatureLayout::Global ? kGlobalFeatureDim : kSiameseFeatureDim;
}

std::array<double, kSiameseFeatureDim> siamese_row(const LocalFeatures& f) {
  std::array<double, kSiameseFeatureDim> row{};
  std::copy(f.left_eye.begin(), f.left_eye.end(), row.begin() + kSiameseLeftOffset);
  std::copy(f.right_eye.begin(), f.right_eye.end(), row.begin() + kSiameseRightOffset);
  std::copy(f.eye_offset.begin(), f.eye_offset.end(), row.begin() + kSiameseDeltaOffset);
  std::copy(f.head_anchors.begin(), f.head_anchors.end(), row.begin() + kSiameseHeadOffset);
  return row;
}

Eigen::MatrixXd build_feature_matrix(std::span<const LandmarkSet> landmarks, FeatureLayout layout,
                                     double width, HeadAnchorMode head_mode) {
  const auto dim = static_cast<Eigen::Index>(feature_dim(layout));
  Eigen::MatrixXd x(dim, static_cast<Eigen::Index>(landmarks.size()));
  for (std::size_t i = 0; i < landmarks.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    if (layout == FeatureLayout::Global) {
      const auto f = global_features(landmarks[i], width);
      x.col(col) = Eigen::Map<const Eigen::VectorXd>(f.values.data(), dim);
    } else {
      const auto row = siamese_row(local_features(landmarks[i], width, head_mode));
      x.col(col) = Eigen::Map<const Eigen::VectorXd>(row.data(), dim);
    }
  }
  return x;
}

}  // namespace lgaze

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "lgaze/landmarks.hpp"

namespace lgaze {

inline constexpr std::size_t kGlobalFeatureDim = 2 * kNumLandmarks;     // 40
inline constexpr std::size_t kEyeFeatureDim = 2 * kLandmarksPerEye;     // 18
inline constexpr std::size_t kHeadFeatureDim = 4;
inline constexpr std::size_t kDeltaFeatureDim = 2;
// Siamese input row: [left eye(18) | right eye(18) | eye offset(2) | head anchors(4)].
inline constexpr std::size_t kSiameseFeatureDim =
    2 * kEyeFeatureDim + kDeltaFeatureDim + kHeadFeatureDim;  // 42
inline constexpr std::size_t kSiameseLeftOffset = 0;
inline constexpr std::size_t kSiameseRightOffset = kEyeFeatureDim;
inline constexpr std::size_t kSiameseDeltaOffset = 2 * kEyeFeatureDim;
inline constexpr std::size_t kSiameseHeadOffset = kSiameseDeltaOffset + kDeltaFeatureDim;

// How the nose tip and glabella enter the head-anchor features.
enum class HeadAnchorMode {
  Centered,  // (anchor - midpoint of the two eye centers) / w
  Raw,       // anchor / w
};

std::string_view to_string(HeadAnchorMode mode);
HeadAnchorMode head_anchor_mode_from_string(std::string_view s);

struct GlobalFeatures {
  std::array<double, kGlobalFeatureDim> values{};
};

struct LocalFeatures {
  std::array<double, kEyeFeatureDim> left_eye{};
  std::array<double, kEyeFeatureDim> right_eye{};
  std::array<double, kHeadFeatureDim> head_anchors{};
  std::array<double, kDeltaFeatureDim> eye_offset{};
};

// Midpoint of the four eye corners.
Vec2 eye_corner_centroid(const LandmarkSet& lm);
Vec2 left_eye_centroid(const LandmarkSet& lm);
Vec2 right_eye_centroid(const LandmarkSet& lm);

// values[2i, 2i+1] = (landmark_i - eye-corner centroid) / w in slot order.
GlobalFeatures global_features(const LandmarkSet& lm, double width);

LocalFeatures local_features(const LandmarkSet& lm, double width,
                             HeadAnchorMode head_mode = HeadAnchorMode::Centered);

// Model input layouts.
enum class FeatureLayout { Global, Siamese };

std::size_t feature_dim(FeatureLayout layout);

// Flattens local features into the siamese row layout above.
std::array<double, kSiameseFeatureDim> siamese_row(const LocalFeatures& f);

// Column-per-sample feature matrix (dim x n).
Eigen::MatrixXd build_feature_matrix(std::span<const LandmarkSet> landmarks, FeatureLayout layout,
                                     double width,
                                     HeadAnchorMode head_mode = HeadAnchorMode::Centered);

// Column-per-sample inputs with their unit gaze targets.
struct LabeledFeatures {
  Eigen::MatrixXd features;  // dim x n
  Eigen::Matrix3Xd targets;  // 3 x n

  Eigen::Index size() const { return features.cols(); }
};

}  // namespace lgaze

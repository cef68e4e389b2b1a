#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "lgaze/geometry.hpp"

namespace lgaze {

inline constexpr std::size_t kNumLandmarks = 20;
inline constexpr std::size_t kLandmarksPerEye = 9;

// Frozen slot layout. "Left" is the eye on the image left of a
// non-mirrored frame; per-eye slots are ordered anatomically (inner/outer
// relative to the nose) so both eyes share the same semantic order.
//
//  slot  meaning              dense-mesh index
//   0    left iris center          468
//   1    left iris inner           469
//   2    left iris top             470
//   3    left iris outer           471
//   4    left iris bottom          472
//   5    left outer corner          33
//   6    left inner corner         133
//   7    left lower lid            145
//   8    left upper lid            159
//   9    right iris center         473
//  10    right iris inner          476
//  11    right iris top            475
//  12    right iris outer          474
//  13    right iris bottom         477
//  14    right outer corner        263
//  15    right inner corner        362
//  16    right lower lid           374
//  17    right upper lid           386
//  18    nose tip                    1
//  19    glabella                    9
namespace slot {
inline constexpr std::size_t kLeftEyeBegin = 0;
inline constexpr std::size_t kRightEyeBegin = 9;

// Offsets inside one eye block.
inline constexpr std::size_t kIrisCenter = 0;
inline constexpr std::size_t kIrisInner = 1;
inline constexpr std::size_t kIrisTop = 2;
inline constexpr std::size_t kIrisOuter = 3;
inline constexpr std::size_t kIrisBottom = 4;
inline constexpr std::size_t kOuterCorner = 5;
inline constexpr std::size_t kInnerCorner = 6;
inline constexpr std::size_t kLowerLid = 7;
inline constexpr std::size_t kUpperLid = 8;

inline constexpr std::size_t kLeftOuterCorner = kLeftEyeBegin + kOuterCorner;
inline constexpr std::size_t kLeftInnerCorner = kLeftEyeBegin + kInnerCorner;
inline constexpr std::size_t kRightOuterCorner = kRightEyeBegin + kOuterCorner;
inline constexpr std::size_t kRightInnerCorner = kRightEyeBegin + kInnerCorner;
inline constexpr std::size_t kNoseTip = 18;
inline constexpr std::size_t kGlabella = 19;
}  // namespace slot

inline constexpr std::array<int, kNumLandmarks> kMeshIndex = {
    468, 469, 470, 471, 472, 33,  133, 145, 159,  //
    473, 476, 475, 474, 477, 263, 362, 374, 386,  //
    1,   9};

std::string_view slot_name(std::size_t slot);

// Returns the slot for a dense-mesh index, or -1 if it is not part of the subset.
int slot_for_mesh_index(int mesh_index) noexcept;

// 20 ordered 2D points in pixels, either in the raw or the normalized frame.
struct LandmarkSet {
  std::array<Vec2, kNumLandmarks> points{};

  const Vec2& operator[](std::size_t i) const { return points[i]; }
  Vec2& operator[](std::size_t i) { return points[i]; }

  bool all_finite() const;
  friend bool operator==(const LandmarkSet& a, const LandmarkSet& b) { return a.points == b.points; }
};

// Applies warp_point to every landmark; slot order is preserved.
LandmarkSet warp_landmarks(const Mat3& m, const LandmarkSet& raw);

}  // namespace lgaze

#include "lgaze/landmarks.hpp"

namespace lgaze {

namespace {

constexpr std::array<std::string_view, kNumLandmarks> kSlotNames = {
    "left_iris_center",  "left_iris_inner",   "left_iris_top",     "left_iris_outer",
    "left_iris_bottom",  "left_outer_corner", "left_inner_corner", "left_lower_lid",
    "left_upper_lid",    "right_iris_center", "right_iris_inner",  "right_iris_top",
    "right_iris_outer",  "right_iris_bottom", "right_outer_corner", "right_inner_corner",
    "right_lower_lid",   "right_upper_lid",   "nose_tip",          "glabella"};

}  // namespace

std::string_view slot_name(std::size_t slot) {
  return slot < kNumLandmarks ? kSlotNames[slot] : std::string_view("invalid");
}

int slot_for_mesh_index(int mesh_index) noexcept {
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    if (kMeshIndex[i] == mesh_index) return static_cast<int>(i);
  }
  return -1;
}

bool LandmarkSet::all_finite() const {
  for (const auto& p : points) {
    if (!p.allFinite()) return false;
  }
  return true;
}

LandmarkSet warp_landmarks(const Mat3& m, const LandmarkSet& raw) {
  LandmarkSet out;
  for (std::size_t i = 0; i < kNumLandmarks; ++i) out[i] = warp_point(m, raw[i]);
  return out;
}

}  // namespace lgaze

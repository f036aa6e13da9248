#pragma once

#include "vcdet/scene_io.hpp"
#include "vcdet/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vcdet {

/// Analytic renderer for test scenes: axis-aligned cuboids on a floor plane
/// seen by cameras on a ring, all looking at the scene center.
struct SyntheticObject {
  Box3D box;
  std::string label;
};

struct SyntheticSpec {
  std::vector<SyntheticObject> objects;
  int num_cameras = 8;
  int width = 160;
  int height = 120;
  double focal = 120.0;
  double ring_radius = 3.0;
  double camera_height = 1.8;
  Vec3 target = Vec3(0.0, 0.0, 0.3);
  bool floor = true;
  double floor_extent = 3.0;       ///< half-width of the square floor
  double split_probability = 0.0;  ///< chance a mask is split in two halves
  int max_masks_per_frame = 0;     ///< 0 = unlimited; splits are skipped beyond it
  double surface_spacing = 0.02;   ///< point cloud sampling step on surfaces
  std::uint64_t seed = 0;
  std::string scene_id = "synthetic";
  std::vector<std::string> vocabulary;  ///< empty = no vocabulary record
};

/// Three separated cuboids with labels chair/table/cabinet.
SyntheticSpec three_cuboid_spec();

/// Random objects and camera ring for property tests. At most `max_objects`
/// objects; each mask may be split.
SyntheticSpec random_micro_spec(std::uint64_t seed, int max_frames, int max_objects);

struct SyntheticScene {
  Scene scene;
  std::vector<SyntheticObject> objects;
  /// Per frame, the object index seen at each pixel (-1 = floor/background).
  std::vector<std::vector<int>> object_ids;
};

/// World-to-camera pose of a camera at `eye` looking at `target` with world z up.
Mat4 look_at(const Vec3& eye, const Vec3& target);

SyntheticScene render_synthetic(const SyntheticSpec& spec);

/// Writes the scene (via write_scene) plus per-frame label images,
/// images/labels.json, and gt.json (ground-truth boxes with class ids).
/// Returns the manifest path.
std::filesystem::path write_synthetic(const SyntheticScene& synthetic, const std::filesystem::path& dir);

}  // namespace vcdet

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace vcdet {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Pinhole intrinsics in pixels.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  bool operator==(const Intrinsics&) const = default;
};

/// One posed RGB-D view. `world_to_camera` maps world points into the camera
/// frame (x right, y down, z forward). Depth is row-major, meters, 0 = invalid.
struct CameraFrame {
  int id = 0;
  Intrinsics intrinsics;
  Mat4 world_to_camera = Mat4::Identity();
  int width = 0;
  int height = 0;
  std::vector<float> depth;
  std::string image_path;  ///< optional; forwarded to the perception provider

  float depth_at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
  Mat3 rotation() const { return world_to_camera.topLeftCorner<3, 3>(); }
  Vec3 translation() const { return world_to_camera.topRightCorner<3, 1>(); }
  /// Camera center in world coordinates.
  Vec3 center() const { return -rotation().transpose() * translation(); }

  bool operator==(const CameraFrame& o) const {
    return id == o.id && intrinsics == o.intrinsics && world_to_camera == o.world_to_camera &&
           width == o.width && height == o.height && depth == o.depth && image_path == o.image_path;
  }
};

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<std::uint8_t> colors;  ///< empty, or 3 bytes per point

  std::size_t size() const { return points.size(); }
  bool has_colors() const { return !colors.empty(); }
  bool operator==(const PointCloud&) const = default;
};

/// Identifies an original per-frame instance mask.
struct MaskKey {
  int frame_id = 0;
  int mask_id = 0;
  auto operator<=>(const MaskKey&) const = default;
};

/// Axis-aligned 3D box parameterized by center and per-axis extent.
struct Box3D {
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Zero();

  Vec3 min() const { return center - 0.5 * size; }
  Vec3 max() const { return center + 0.5 * size; }
  double volume() const { return size.x() * size.y() * size.z(); }
  /// Zero extent along some axis. Only produced by box_from_points.
  bool degenerate() const { return !(size.array() > 0.0).all(); }
  bool operator==(const Box3D&) const = default;
};

struct Detection {
  Box3D box;
  std::string label;
  double score = 0.0;
  bool operator==(const Detection&) const = default;
};

/// Unit-norm (after aggregation) feature vector.
using Embedding = std::vector<float>;

struct Vocabulary {
  std::vector<std::string> classes;
  std::vector<Embedding> text_embeddings;  ///< one per class, empty until resolved
  std::string prompt_template = "a photo of {}";

  std::size_t dim() const { return text_embeddings.empty() ? 0 : text_embeddings.front().size(); }
  std::string prompt_for(const std::string& name) const;
  bool operator==(const Vocabulary&) const = default;
};

/// Fills "{}" in a prompt template with a class name.
std::string format_prompt(const std::string& templ, const std::string& name);

}  // namespace vcdet

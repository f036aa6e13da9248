#pragma once

#include "vcdet/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace vcdet {

/// Minimum camera-space depth for a point to count as in front of the camera.
constexpr double kMinProjectionDepth = 1e-6;
constexpr double kDefaultOcclusionThreshold = 0.10;

struct Pixel {
  int u = 0;
  int v = 0;
  bool operator==(const Pixel&) const = default;
};

/// Pixels of one frame, one entry per projected point (duplicates allowed).
struct PixelSet {
  int frame_id = 0;
  std::vector<Pixel> pixels;

  bool empty() const { return pixels.empty(); }
  std::size_t size() const { return pixels.size(); }
};

struct PixelBox {
  int xmin = 0;
  int ymin = 0;
  int xmax = 0;
  int ymax = 0;
  bool operator==(const PixelBox&) const = default;
};

Vec3 to_camera(const Vec3& world, const CameraFrame& frame);
Vec3 to_world(const Vec3& camera, const CameraFrame& frame);

/// Continuous pixel of `p`, or nullopt when the point is behind the camera
/// (depth <= 1e-6) or outside [0,W) x [0,H).
std::optional<Eigen::Vector2d> project_point(const Vec3& p, const CameraFrame& frame);

/// World point at camera depth `depth` along the ray through pixel `uv`.
/// Throws InputError when depth <= 0.
Vec3 backproject_pixel(const Eigen::Vector2d& uv, double depth, const CameraFrame& frame);

/// Nearest integer pixel of a continuous in-frame coordinate.
Pixel round_pixel(const Eigen::Vector2d& uv, const CameraFrame& frame);

/// Points that survive the occlusion test, as indices into the input span and
/// their rounded pixels (parallel arrays).
struct VisibleProjection {
  std::vector<std::size_t> indices;
  PixelSet pixels;
  std::vector<Vec3> surface;  // depth-map point each kept point was tested against
};

/// Keeps a point when it projects in-frame in front of the camera, the nearest
/// depth pixel is valid, and the point lies within `tau_occ` of the depth
/// surface backprojected through its projection.
VisibleProjection visible_projection(std::span<const Vec3> points, const CameraFrame& frame,
                                     double tau_occ);

/// Tight integer bounds of a pixel set. Throws InputError on an empty set.
PixelBox bbox2d_from_pixels(const PixelSet& pixels);

}  // namespace vcdet

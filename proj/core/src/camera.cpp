#include "vcdet/camera.hpp"

#include "vcdet/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vcdet {

Vec3 to_camera(const Vec3& world, const CameraFrame& frame) {
  return frame.world_to_camera.topLeftCorner<3, 3>() * world + frame.world_to_camera.topRightCorner<3, 1>();
}

Vec3 to_world(const Vec3& camera, const CameraFrame& frame) {
  // Rigid inverse: R^T (x - t).
  return frame.world_to_camera.topLeftCorner<3, 3>().transpose() *
         (camera - frame.world_to_camera.topRightCorner<3, 1>());
}

std::optional<Eigen::Vector2d> project_point(const Vec3& p, const CameraFrame& frame) {
  const Vec3 c = to_camera(p, frame);
  const double w = c.z();
  if (!(w > kMinProjectionDepth)) return std::nullopt;
  const auto& k = frame.intrinsics;
  const Eigen::Vector2d uv(k.fx * c.x() / w + k.cx, k.fy * c.y() / w + k.cy);
  if (!(uv.x() >= 0.0 && uv.x() < frame.width && uv.y() >= 0.0 && uv.y() < frame.height)) {
    return std::nullopt;
  }
  return uv;
}

Vec3 backproject_pixel(const Eigen::Vector2d& uv, double depth, const CameraFrame& frame) {
  if (!(depth > 0.0)) throw InputError("backproject_pixel: depth must be > 0");
  const auto& k = frame.intrinsics;
  const Vec3 cam((uv.x() - k.cx) / k.fx * depth, (uv.y() - k.cy) / k.fy * depth, depth);
  return to_world(cam, frame);
}

Pixel round_pixel(const Eigen::Vector2d& uv, const CameraFrame& frame) {
  const int u = std::clamp(static_cast<int>(std::floor(uv.x() + 0.5)), 0, frame.width - 1);
  const int v = std::clamp(static_cast<int>(std::floor(uv.y() + 0.5)), 0, frame.height - 1);
  return {u, v};
}

VisibleProjection visible_projection(std::span<const Vec3> points, const CameraFrame& frame,
                                     double tau_occ) {
  VisibleProjection out;
  out.pixels.frame_id = frame.id;
  if (frame.depth.empty()) return out;
  const double tau2 = tau_occ * tau_occ;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto uv = project_point(points[i], frame);
    if (!uv) continue;
    const Pixel px = round_pixel(*uv, frame);
    const double d = frame.depth_at(px.u, px.v);
    if (!(d > 0.0)) continue;
    const Vec3 surface = backproject_pixel(*uv, d, frame);
    if ((points[i] - surface).squaredNorm() < tau2) {
      out.indices.push_back(i);
      out.pixels.pixels.push_back(px);
      out.surface.push_back(surface);
    }
  }
  return out;
}

PixelBox bbox2d_from_pixels(const PixelSet& set) {
  if (set.empty()) throw InputError("bbox2d_from_pixels: empty pixel set");
  PixelBox b{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(),
             std::numeric_limits<int>::min(), std::numeric_limits<int>::min()};
  for (const auto& p : set.pixels) {
    b.xmin = std::min(b.xmin, p.u);
    b.ymin = std::min(b.ymin, p.v);
    b.xmax = std::max(b.xmax, p.u);
    b.ymax = std::max(b.ymax, p.v);
  }
  return b;
}

}  // namespace vcdet

#include "vcdet/box.hpp"

#include "vcdet/error.hpp"

#include <algorithm>
#include <numeric>

namespace vcdet {

std::vector<std::size_t> crop_point_cloud(std::span<const Vec3> points, const Box3D& box) {
  const Vec3 lo = box.min();
  const Vec3 hi = box.max();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3& p = points[i];
    if ((p.array() >= lo.array()).all() && (p.array() <= hi.array()).all()) out.push_back(i);
  }
  return out;
}

Box3D box_from_points(std::span<const Vec3> points) {
  if (points.empty()) throw InputError("box_from_points: empty point set");
  Vec3 lo = points[0];
  Vec3 hi = points[0];
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Box3D b;
  b.center = 0.5 * (lo + hi);
  b.size = hi - lo;
  return b;
}

double intersection_volume(const Box3D& a, const Box3D& b) {
  const Vec3 lo = a.min().cwiseMax(b.min());
  const Vec3 hi = a.max().cwiseMin(b.max());
  const Vec3 ext = (hi - lo).cwiseMax(0.0);
  return ext.x() * ext.y() * ext.z();
}

double iou3d(const Box3D& a, const Box3D& b) {
  const double inter = intersection_volume(a, b);
  const double uni = a.volume() + b.volume() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<std::size_t> nms(std::span<const Box3D> boxes, std::span<const double> scores, double tau_iou) {
  if (boxes.size() != scores.size()) {
    throw InputError("nms: " + std::to_string(boxes.size()) + " boxes but " +
                     std::to_string(scores.size()) + " scores");
  }
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> kept;
  for (auto i : order) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return iou3d(boxes[i], boxes[k]) >= tau_iou;
    });
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

}  // namespace vcdet

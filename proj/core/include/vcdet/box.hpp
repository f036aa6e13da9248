#pragma once

#include "vcdet/types.hpp"

#include <span>
#include <vector>

namespace vcdet {

constexpr double kDefaultNmsIou = 0.5;

/// Indices of points inside the closed box [c - s/2, c + s/2].
std::vector<std::size_t> crop_point_cloud(std::span<const Vec3> points, const Box3D& box);

/// Min/max box of a non-empty point set. A set with a single distinct
/// coordinate on some axis yields a degenerate box. Throws InputError on empty input.
Box3D box_from_points(std::span<const Vec3> points);

double intersection_volume(const Box3D& a, const Box3D& b);
/// Intersection over union in [0,1]; 0 when the union has no volume.
double iou3d(const Box3D& a, const Box3D& b);

/// Greedy non-maximum suppression. Visits boxes by descending score (equal
/// scores: lower index first) and drops any box whose IoU with an already kept
/// box is >= tau_iou. Returns kept indices in visiting order.
std::vector<std::size_t> nms(std::span<const Box3D> boxes, std::span<const double> scores,
                             double tau_iou = kDefaultNmsIou);

}  // namespace vcdet

#include "vcdet/alignment.hpp"

#include "vcdet/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace vcdet {

namespace {

// Rotation/translation that carry the predicted first camera onto the ground
// truth one after scaling: R = Rg^T Rp, t = Rg^T (s tp - tg).
SimilarityTransform pose0_alignment(const Mat4& pred, const Mat4& gt, double scale) {
  const Mat3 rp = pred.topLeftCorner<3, 3>();
  const Vec3 tp = pred.topRightCorner<3, 1>();
  const Mat3 rg = gt.topLeftCorner<3, 3>();
  const Vec3 tg = gt.topRightCorner<3, 1>();
  SimilarityTransform out;
  out.scale = scale;
  out.rotation = rg.transpose() * rp;
  out.translation = rg.transpose() * (scale * tp - tg);
  return out;
}

Vec3 center_of(const Mat4& pose) {
  return -pose.topLeftCorner<3, 3>().transpose() * pose.topRightCorner<3, 1>();
}

}  // namespace

Mat4 SimilarityTransform::transform_pose(const Mat4& world_to_camera) const {
  const Mat3 r = world_to_camera.topLeftCorner<3, 3>();
  const Vec3 t = world_to_camera.topRightCorner<3, 1>();
  Mat4 out = Mat4::Identity();
  out.topLeftCorner<3, 3>() = r * rotation.transpose();
  out.topRightCorner<3, 1>() = scale * t - r * rotation.transpose() * translation;
  return out;
}

SimilarityTransform SimilarityTransform::inverse() const {
  SimilarityTransform inv;
  inv.scale = 1.0 / scale;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation) / scale;
  return inv;
}

void validate_rigid(const Mat4& pose, double tol) {
  if (!pose.allFinite()) throw InputError("pose has non-finite entries");
  const Eigen::RowVector4d bottom = pose.row(3);
  if ((bottom - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > tol) {
    throw InputError("pose bottom row is not (0,0,0,1)");
  }
  const Mat3 r = pose.topLeftCorner<3, 3>();
  if (std::abs(r.determinant()) < 1e-12) throw InputError("pose rotation is singular");
  if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) {
    throw InputError("pose rotation is not orthonormal");
  }
  if (r.determinant() < 0.0) throw InputError("pose rotation is a reflection");
}

SimilarityTransform align_depth_pose(const Mat4& pred_pose0, const Mat4& gt_pose0,
                                     std::span<const float> pred_depth0, std::span<const float> gt_depth0) {
  if (pred_depth0.size() != gt_depth0.size()) {
    throw InputError("align_depth_pose: depth maps differ in size");
  }
  std::vector<double> ratios;
  for (std::size_t i = 0; i < gt_depth0.size(); ++i) {
    const double p = pred_depth0[i];
    const double g = gt_depth0[i];
    if (p > 0.0 && g > 0.0 && std::isfinite(p) && std::isfinite(g)) ratios.push_back(g / p);
  }
  if (ratios.size() < kMinAlignmentPixels) {
    throw InputError("align_depth_pose: only " + std::to_string(ratios.size()) +
                     " pixels valid in both depth maps (need " + std::to_string(kMinAlignmentPixels) + ")");
  }
  const std::size_t mid = ratios.size() / 2;
  std::nth_element(ratios.begin(), ratios.begin() + static_cast<std::ptrdiff_t>(mid), ratios.end());
  double median = ratios[mid];
  if (ratios.size() % 2 == 0) {
    const double lower = *std::max_element(ratios.begin(), ratios.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return pose0_alignment(pred_pose0, gt_pose0, median);
}

SimilarityTransform align_two_poses(const Mat4& pred_pose0, const Mat4& pred_pose1, const Mat4& gt_pose0,
                                    const Mat4& gt_pose1) {
  const double pred_dist = (center_of(pred_pose1) - center_of(pred_pose0)).norm();
  if (!(pred_dist > 1e-9)) throw InputError("align_two_poses: predicted camera centers coincide");
  const double gt_dist = (center_of(gt_pose1) - center_of(gt_pose0)).norm();
  return pose0_alignment(pred_pose0, gt_pose0, gt_dist / pred_dist);
}

}  // namespace vcdet

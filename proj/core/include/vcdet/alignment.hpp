#pragma once

#include "vcdet/types.hpp"

#include <span>

namespace vcdet {

/// x -> scale * rotation * x + translation. Maps predicted-scan coordinates
/// into the ground-truth frame.
struct SimilarityTransform {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return scale * (rotation * x) + translation; }
  /// Re-expresses a predicted world-to-camera pose in the target frame, with
  /// camera-space distances rescaled by `scale`.
  Mat4 transform_pose(const Mat4& world_to_camera) const;
  SimilarityTransform inverse() const;
};

/// Minimum number of pixels valid in both depth maps.
constexpr std::size_t kMinAlignmentPixels = 100;

/// Scale is the median of per-pixel gt/pred depth ratios; rotation and
/// translation make the predicted first pose coincide with the ground truth one.
/// Depth maps must have equal size. Throws InputError with too little overlap.
SimilarityTransform align_depth_pose(const Mat4& pred_pose0, const Mat4& gt_pose0,
                                     std::span<const float> pred_depth0,
                                     std::span<const float> gt_depth0);

/// Scale from the ratio of camera-center distances between the first two poses.
/// Throws InputError when the predicted centers coincide.
SimilarityTransform align_two_poses(const Mat4& pred_pose0, const Mat4& pred_pose1,
                                    const Mat4& gt_pose0, const Mat4& gt_pose1);

/// Throws InputError unless the upper-left 3x3 is orthonormal with det +1
/// (within `tol`) and the bottom row is (0,0,0,1).
void validate_rigid(const Mat4& pose, double tol = 1e-6);

}  // namespace vcdet

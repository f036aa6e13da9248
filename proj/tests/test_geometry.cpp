#include "support/oracles.hpp"

#include <vcdet/alignment.hpp>
#include <vcdet/box.hpp>
#include <vcdet/camera.hpp>
#include <vcdet/error.hpp>
#include <vcdet/random.hpp>
#include <vcdet/voxel_hash.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace vcdet;

namespace {

CameraFrame make_frame(const Mat4& pose, int w = 64, int h = 48, double f = 50.0) {
  CameraFrame frame;
  frame.width = w;
  frame.height = h;
  frame.intrinsics = {f, f * 1.1, w / 2.0 - 0.5, h / 2.0 + 0.25};
  frame.world_to_camera = pose;
  frame.depth.assign(static_cast<std::size_t>(w) * h, 0.0f);
  return frame;
}

Mat4 random_pose(std::uint64_t seed) {
  SplitMix64 rng(seed ^ 0xabcdef);
  Mat4 pose = Mat4::Identity();
  pose.topLeftCorner<3, 3>() = oracle::random_rotation(seed);
  pose.topRightCorner<3, 1>() = Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
  return pose;
}

std::vector<Box3D> random_boxes(SplitMix64& rng, std::size_t n) {
  std::vector<Box3D> boxes;
  for (std::size_t i = 0; i < n; ++i) {
    boxes.push_back({Vec3(rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 1)),
                     Vec3(rng.uniform(0.2, 1), rng.uniform(0.2, 1), rng.uniform(0.2, 1))});
  }
  return boxes;
}

}  // namespace

TEST(Camera, ProjectionMatchesMatrixOracle) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const CameraFrame frame = make_frame(random_pose(seed));
    SplitMix64 rng(seed);
    for (int i = 0; i < 20; ++i) {
      const Vec3 p(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
      const auto got = project_point(p, frame);
      const auto want = oracle::project(p, frame);
      ASSERT_EQ(got.has_value(), want.has_value());
      if (got) {
        EXPECT_NEAR((*got)[0], (*want)[0], 1e-9);
        EXPECT_NEAR((*got)[1], (*want)[1], 1e-9);
      }
    }
  }
}

TEST(Camera, PrincipalPointBackprojection) {
  CameraFrame frame = make_frame(Mat4::Identity(), 5, 5, 10.0);
  frame.intrinsics = {10, 10, 2, 2};
  const Vec3 p = backproject_pixel(Eigen::Vector2d(2, 2), 2.0, frame);
  EXPECT_TRUE(p.isApprox(Vec3(0, 0, 2)));
  EXPECT_THROW(backproject_pixel(Eigen::Vector2d(2, 2), 0.0, frame), InputError);
}

TEST(Camera, BehindAndOutsideAreDropped) {
  const CameraFrame frame = make_frame(Mat4::Identity());
  EXPECT_FALSE(project_point(Vec3(0, 0, -1), frame));
  EXPECT_FALSE(project_point(Vec3(0, 0, 0), frame));
  EXPECT_FALSE(project_point(Vec3(100, 0, 1), frame));
  EXPECT_TRUE(project_point(Vec3(0, 0, 1), frame));
}

TEST(Camera, RoundTripRandomPoses) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const CameraFrame frame = make_frame(random_pose(seed));
    SplitMix64 rng(seed * 31 + 1);
    const Eigen::Vector2d uv(rng.uniform(0, frame.width - 1), rng.uniform(0, frame.height - 1));
    const double depth = rng.uniform(0.1, 20);
    const Vec3 p = backproject_pixel(uv, depth, frame);
    const auto proj = project_point(p, frame);
    ASSERT_TRUE(proj);
    const Vec3 q = backproject_pixel(*proj, to_camera(p, frame).z(), frame);
    ASSERT_LT((q - p).norm(), 1e-6) << "seed " << seed;
  }
}

TEST(Camera, TwoPlaneOcclusion) {
  // Wall at z=2 covers the left half of the image; floor plane at z=4 behind it.
  CameraFrame frame = make_frame(Mat4::Identity(), 40, 30, 30.0);
  frame.intrinsics = {30, 30, 19.5, 14.5};
  for (int v = 0; v < 30; ++v)
    for (int u = 0; u < 40; ++u) frame.depth[static_cast<std::size_t>(v) * 40 + u] = u < 20 ? 2.0f : 4.0f;
  std::vector<Vec3> far_points, near_points;
  for (int v = 0; v < 30; v += 3)
    for (int u = 0; u < 40; u += 3) {
      far_points.push_back(backproject_pixel(Eigen::Vector2d(u, v), 4.0, frame));
      near_points.push_back(backproject_pixel(Eigen::Vector2d(u, v), 2.0, frame));
    }
  const auto far = visible_projection(far_points, frame, kDefaultOcclusionThreshold);
  for (const auto& px : far.pixels.pixels) EXPECT_GE(px.u, 20);
  std::size_t right = 0;
  for (const auto& p : far_points) right += project_point(p, frame)->x() >= 19.5;
  EXPECT_EQ(far.indices.size(), right);
  const auto near = visible_projection(near_points, frame, kDefaultOcclusionThreshold);
  for (const auto& px : near.pixels.pixels) EXPECT_LT(px.u, 20);
  EXPECT_EQ(far.indices.size() + near.indices.size(), far_points.size());
  // Same answer as the definition-level oracle.
  EXPECT_EQ(oracle::observed_points(far_points, frame, kDefaultOcclusionThreshold).size(), far.indices.size());
}

TEST(Camera, BboxOfPixels) {
  PixelSet s{0, {{3, 4}, {1, 9}, {7, 2}}};
  EXPECT_EQ(bbox2d_from_pixels(s), (PixelBox{1, 2, 7, 9}));
  EXPECT_THROW(bbox2d_from_pixels(PixelSet{}), InputError);
}

TEST(Box, CropGridCounting) {
  std::vector<Vec3> grid;
  for (int x = 0; x <= 10; ++x)
    for (int y = 0; y <= 10; ++y)
      for (int z = 0; z <= 10; ++z) grid.emplace_back(x * 0.1, y * 0.1, z * 0.1);
  // Box [0.15, 0.55] x [0, 1] x a thin slab at z = 0.3; closed bounds keep y = 0 and y = 1.
  std::size_t expected = 0;
  for (const auto& p : grid) {
    const bool in = p.x() >= 0.15 && p.x() <= 0.55 && p.y() >= 0.0 && p.y() <= 1.0 && std::abs(p.z() - 0.3) < 1e-12;
    expected += in;
  }
  const auto idx = crop_point_cloud(grid, Box3D{Vec3(0.35, 0.5, 0.3), Vec3(0.4, 1.0, 1e-9)});
  EXPECT_EQ(idx.size(), expected);
  EXPECT_EQ(crop_point_cloud(grid, Box3D{Vec3(0.5, 0.5, 0.5), Vec3(2, 2, 2)}).size(), grid.size());
  EXPECT_TRUE(crop_point_cloud(grid, Box3D{Vec3(9, 9, 9), Vec3(1, 1, 1)}).empty());
}

TEST(Box, FromPointsIsTight) {
  const std::vector<Vec3> pts{{0, 1, 2}, {3, -1, 2}, {1, 0, 5}};
  const Box3D b = box_from_points(pts);
  EXPECT_TRUE(b.min().isApprox(Vec3(0, -1, 2)));
  EXPECT_TRUE(b.max().isApprox(Vec3(3, 1, 5)));
  EXPECT_TRUE(box_from_points(std::vector<Vec3>{{1, 1, 1}}).degenerate());
  EXPECT_THROW(box_from_points(std::vector<Vec3>{}), InputError);
}

TEST(Box, IouMatchesOracle) {
  SplitMix64 rng(5);
  const auto boxes = random_boxes(rng, 60);
  for (const auto& a : boxes)
    for (const auto& b : boxes) {
      EXPECT_NEAR(iou3d(a, b), oracle::iou(a, b), 1e-12);
      EXPECT_DOUBLE_EQ(iou3d(a, b), iou3d(b, a));
    }
  EXPECT_NEAR(iou3d(boxes[0], boxes[0]), 1.0, 1e-12);
  // Half-overlapping unit cubes: 0.5 / 1.5.
  EXPECT_NEAR(iou3d({Vec3(0, 0, 0), Vec3(1, 1, 1)}, {Vec3(0.5, 0, 0), Vec3(1, 1, 1)}), 1.0 / 3.0, 1e-12);
}

TEST(Nms, MatchesGreedyOracle) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SplitMix64 rng(seed);
    const auto boxes = random_boxes(rng, 2 + rng.below(30));
    std::vector<double> scores;
    for (std::size_t i = 0; i < boxes.size(); ++i) scores.push_back(std::round(rng.uniform() * 8) / 8);  // ties
    const auto kept = nms(boxes, scores, 0.5);
    EXPECT_EQ(kept, oracle::nms(boxes, scores, 0.5)) << "seed " << seed;
    for (std::size_t i = 0; i < kept.size(); ++i)
      for (std::size_t j = i + 1; j < kept.size(); ++j) EXPECT_LT(iou3d(boxes[kept[i]], boxes[kept[j]]), 0.5);
  }
}

TEST(Nms, IdempotentAndPermutationInvariant) {
  SplitMix64 rng(77);
  const auto boxes = random_boxes(rng, 25);
  std::vector<double> scores;
  for (std::size_t i = 0; i < boxes.size(); ++i) scores.push_back(rng.uniform());
  const auto kept = nms(boxes, scores, 0.5);
  std::vector<Box3D> kb;
  std::vector<double> ks;
  for (auto i : kept) {
    kb.push_back(boxes[i]);
    ks.push_back(scores[i]);
  }
  const auto again = nms(kb, ks, 0.5);
  EXPECT_EQ(again.size(), kept.size());

  // Distinct scores: a permutation keeps the same set of boxes.
  std::vector<std::size_t> perm(boxes.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::vector<Box3D> pb;
  std::vector<double> ps;
  for (auto i : perm) {
    pb.push_back(boxes[i]);
    ps.push_back(scores[i]);
  }
  std::vector<std::size_t> mapped;
  for (auto i : nms(pb, ps, 0.5)) mapped.push_back(perm[i]);
  EXPECT_EQ(mapped, kept);
}

TEST(Nms, TiesKeepLowerIndex) {
  const std::vector<Box3D> boxes{{Vec3(0, 0, 0), Vec3(1, 1, 1)}, {Vec3(0, 0, 0), Vec3(1, 1, 1)}};
  const std::vector<double> scores{0.5, 0.5};
  EXPECT_EQ(nms(boxes, scores, 0.5), (std::vector<std::size_t>{0}));
  EXPECT_TRUE(nms({}, {}, 0.5).empty());
}

TEST(VoxelHash, MatchesSweepOracle) {
  SplitMix64 rng(3);
  std::vector<Vec3> a, b;
  for (int i = 0; i < 2000; ++i) a.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  for (int i = 0; i < 500; ++i) b.emplace_back(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
  const VoxelHash index(a, 0.1);
  EXPECT_NEAR(coverage_ratio(index, b, 0.1), oracle::coverage(a, b, 0.1), 1e-12);
  EXPECT_NEAR(coverage_ratio(index, b, 0.05), oracle::coverage(a, b, 0.05), 1e-12);
}

TEST(VoxelHash, NegativeAndLargeCoordinates) {
  const std::vector<Vec3> a{{-100.01, 50, -3}, {2000, -2000, 7}};
  const VoxelHash index(a, 0.04);
  EXPECT_TRUE(index.has_neighbor(Vec3(-100.0, 50, -3), 0.04));
  EXPECT_TRUE(index.has_neighbor(Vec3(2000.03, -2000, 7), 0.04));
  EXPECT_FALSE(index.has_neighbor(Vec3(0, 0, 0), 0.04));
}

TEST(Contains, TrivialAndBoundaryCases) {
  std::vector<Vec3> base;
  for (int i = 0; i < 100; ++i) base.emplace_back(i * 0.01, 0, 0);
  EXPECT_TRUE(contains(std::span<const Vec3>(base), base, 1.0, 0.04));
  std::vector<Vec3> far = base;
  for (auto& p : far) p.y() += 1.0;
  EXPECT_FALSE(contains(std::span<const Vec3>(base), far, 0.8, 0.04));
  // 80 of 100 containee points coincide with the container, 20 are 1 m away.
  std::vector<Vec3> mixed(base.begin(), base.begin() + 80);
  mixed.insert(mixed.end(), far.begin() + 80, far.end());
  EXPECT_TRUE(contains(std::span<const Vec3>(base), mixed, 0.8, 0.04));
  EXPECT_FALSE(contains(std::span<const Vec3>(base), mixed, 0.85, 0.04));
  EXPECT_THROW(contains(std::span<const Vec3>(base), std::vector<Vec3>{}, 0.8, 0.04), InputError);
}

TEST(Alignment, RecoversSimilarityFromDepth) {
  // Ground-truth frame looking at a tilted plane; the prediction is the same
  // scene under x_p = s R0 x_g + t0.
  const double s0 = 0.7;
  const Mat3 r0 = oracle::random_rotation(11);
  const Vec3 t0(0.3, -1.2, 2.0);
  Mat4 gt = Mat4::Identity();
  gt.topLeftCorner<3, 3>() = oracle::random_rotation(12);
  gt.topRightCorner<3, 1>() = Vec3(0.5, 0.1, 1.0);
  Mat4 pred = Mat4::Identity();
  pred.topLeftCorner<3, 3>() = gt.topLeftCorner<3, 3>() * r0.transpose();
  pred.topRightCorner<3, 1>() = s0 * gt.topRightCorner<3, 1>() - pred.topLeftCorner<3, 3>() * t0;

  std::vector<float> gt_depth, pred_depth;
  for (int v = 0; v < 40; ++v)
    for (int u = 0; u < 50; ++u) {
      const float d = static_cast<float>(2.0 + 0.02 * u + 0.01 * v);
      gt_depth.push_back(d);
      pred_depth.push_back(static_cast<float>(s0 * d));
    }
  const auto t = align_depth_pose(pred, gt, pred_depth, gt_depth);
  EXPECT_NEAR(t.scale, 1.0 / s0, 1e-6);
  SplitMix64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const Vec3 xg(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    const Vec3 xp = s0 * (r0 * xg) + t0;
    EXPECT_LT((t.apply(xp) - xg).norm(), 1e-6);
  }
  EXPECT_TRUE(t.transform_pose(pred).isApprox(gt, 1e-6));
  const auto inv = t.inverse();
  EXPECT_LT((inv.apply(t.apply(Vec3(1, 2, 3))) - Vec3(1, 2, 3)).norm(), 1e-9);
}

TEST(Alignment, MedianEvenCountAndTooFewPixels) {
  std::vector<float> gt(100, 1.0f), pred(100, 1.0f);
  for (int i = 0; i < 50; ++i) gt[i] = 2.0f;
  // Ratios: 50 x 2.0 and 50 x 1.0 -> median 1.5.
  EXPECT_NEAR(align_depth_pose(Mat4::Identity(), Mat4::Identity(), pred, gt).scale, 1.5, 1e-12);
  std::vector<float> sparse(100, 0.0f);
  EXPECT_THROW(align_depth_pose(Mat4::Identity(), Mat4::Identity(), sparse, gt), InputError);
}

TEST(Alignment, TwoPoses) {
  Mat4 g0 = Mat4::Identity(), g1 = Mat4::Identity();
  g1.topRightCorner<3, 1>() = Vec3(-2, 0, 0);
  Mat4 p0 = g0, p1 = g1;
  p1.topRightCorner<3, 1>() *= 0.7;
  EXPECT_NEAR(align_two_poses(p0, p1, g0, g1).scale, 1 / 0.7, 1e-12);
  EXPECT_THROW(align_two_poses(p0, p0, g0, g1), InputError);
}

TEST(Alignment, ValidateRigid) {
  EXPECT_NO_THROW(validate_rigid(Mat4::Identity()));
  Mat4 m = Mat4::Identity();
  m(0, 0) = -1;
  EXPECT_THROW(validate_rigid(m), InputError);
  m = Mat4::Identity();
  m(3, 0) = 1;
  EXPECT_THROW(validate_rigid(m), InputError);
}

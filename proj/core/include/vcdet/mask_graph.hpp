#pragma once

#include "vcdet/camera.hpp"
#include "vcdet/scene_io.hpp"
#include "vcdet/types.hpp"
#include "vcdet/voxel_hash.hpp"

#include <memory>
#include <span>
#include <vector>

namespace vcdet {

struct MergeConfig {
  double tau_rate = 0.9;
  std::vector<int> observer_schedule{1, 2, 3};
  double tau_contain = 0.8;
  double contain_radius = 0.04;  // meters
  std::size_t min_points = 50;
  std::size_t min_mask_pixels = 100;
  std::size_t min_visible_points = 25;
  double tau_occ = kDefaultOcclusionThreshold;
  /// Threads for the per-node and pairwise stages. Results do not depend on it.
  std::size_t workers = 1;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Backprojects every mask pixel with valid depth into world space.
std::vector<Vec3> lift_mask(const InstanceMask2D& mask, const CameraFrame& frame);

/// A mask (or a merged group of masks) in the graph.
///   visible_frames  F(m): frames where at least min_visible_points survive the occlusion test
///   containing      M(m): original masks whose points contain the visible portion
struct MaskNode {
  int id = 0;
  std::vector<MaskKey> members;  // sorted
  std::vector<Vec3> points;
  std::vector<int> visible_frames;     // sorted
  std::vector<MaskKey> containing;     // sorted
};

struct Consensus {
  int supporters = 0;
  int observers = 0;
  double rate() const { return observers == 0 ? 0.0 : static_cast<double>(supporters) / observers; }
};

/// Observers are the co-visible frames |F(a) ∩ F(b)|; supporters are the
/// distinct frames of masks in M(a) ∩ M(b).
Consensus consensus_rate(const MaskNode& a, const MaskNode& b);

/// Does the container point set cover at least tau_contain of the containee
/// within contain_radius.
bool mask_contains(std::span<const Vec3> container, std::span<const Vec3> containee,
                   const MergeConfig& config);

/// Lifted original masks of a scene, indexed for containment queries.
class MaskContext {
 public:
  MaskContext(const Scene& scene, MergeConfig config);

  struct Container {
    MaskKey key;
    std::vector<Vec3> points;
    VoxelHash index;
  };

  const Scene& scene() const { return *scene_; }
  const MergeConfig& config() const { return config_; }
  /// Masks that survived lifting (>= min_mask_pixels valid pixels), key order.
  const std::vector<Container>& masks() const { return masks_; }

  /// Points of `points` that pass the occlusion test in `frame`.
  std::vector<Vec3> visible_portion(std::span<const Vec3> points, const CameraFrame& frame) const;
  /// The visible portion as `frame` observed it: each visible point replaced by
  /// the depth-map point it was matched to. Containment is tested on these, so
  /// both sides of the test share the frame's sampling.
  std::vector<Vec3> observed_portion(std::span<const Vec3> points, const CameraFrame& frame) const;
  /// Recomputes F and M of a node from its points.
  void annotate(MaskNode& node) const;

 private:
  const Scene* scene_;
  MergeConfig config_;
  std::vector<Container> masks_;
  std::vector<std::pair<std::size_t, std::size_t>> frame_ranges_;  // per scene frame, into masks_
};

struct GraphEdge {
  std::size_t a = 0;  // node indices, a < b
  std::size_t b = 0;
  Consensus consensus;
};

struct MaskGraph {
  std::shared_ptr<const MaskContext> context;
  std::vector<MaskNode> nodes;  // ascending id
  std::vector<GraphEdge> edges; // sorted by (a, b)
  int next_id = 0;
};

/// One node per surviving mask, edges where the consensus rate reaches tau_rate.
MaskGraph build_graph(const Scene& scene, const MergeConfig& config);
MaskGraph build_graph(std::shared_ptr<const MaskContext> context);

/// Drops edges with fewer than `min_observers` observers, collapses each
/// connected component into one node and recomputes visibility and edges.
MaskGraph merge_step(const MaskGraph& graph, int min_observers);

struct Instance {
  int node_id = 0;
  std::vector<MaskKey> members;
  std::vector<Vec3> points;
  Box3D box;
};

/// Full clustering: build, merge per schedule, drop small instances. Ordered
/// by descending point count, then node id.
std::vector<Instance> detect_instances(const Scene& scene, const MergeConfig& config);
std::vector<Box3D> detect_class_agnostic(const Scene& scene, const MergeConfig& config);

}  // namespace vcdet

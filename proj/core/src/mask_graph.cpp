#include "vcdet/mask_graph.hpp"

#include "vcdet/box.hpp"
#include "vcdet/error.hpp"
#include "vcdet/parallel.hpp"

#include <algorithm>
#include <numeric>

namespace vcdet {

void MergeConfig::validate() const {
  if (!(tau_rate > 0.0 && tau_rate <= 1.0)) throw ConfigError("tau_rate must be in (0, 1]");
  if (observer_schedule.empty()) throw ConfigError("merge schedule must not be empty");
  for (std::size_t i = 0; i < observer_schedule.size(); ++i) {
    if (observer_schedule[i] < 1) throw ConfigError("merge schedule entries must be >= 1");
    if (i > 0 && observer_schedule[i] < observer_schedule[i - 1]) {
      throw ConfigError("merge schedule must be non-decreasing");
    }
  }
  if (!(tau_contain > 0.0 && tau_contain <= 1.0)) throw ConfigError("tau_contain must be in (0, 1]");
  if (!(contain_radius > 0.0)) throw ConfigError("contain_radius must be > 0");
  if (!(tau_occ > 0.0)) throw ConfigError("tau_occ must be > 0");
  if (min_visible_points < 1) throw ConfigError("min_visible_points must be >= 1");
}

std::vector<Vec3> lift_mask(const InstanceMask2D& mask, const CameraFrame& frame) {
  if (mask.frame_id != frame.id) {
    throw InputError("lift_mask: mask of frame " + std::to_string(mask.frame_id) + " applied to frame " +
                     std::to_string(frame.id));
  }
  const Bitmap bits = decode_rle(mask.rle);
  std::vector<Vec3> points;
  for (int v = 0; v < bits.height; ++v) {
    for (int u = 0; u < bits.width; ++u) {
      if (!bits.at(u, v)) continue;
      const double d = frame.depth_at(u, v);
      if (d > 0.0) points.push_back(backproject_pixel(Eigen::Vector2d(u, v), d, frame));
    }
  }
  return points;
}

Consensus consensus_rate(const MaskNode& a, const MaskNode& b) {
  Consensus c;
  std::vector<int> common_frames;
  std::set_intersection(a.visible_frames.begin(), a.visible_frames.end(), b.visible_frames.begin(),
                        b.visible_frames.end(), std::back_inserter(common_frames));
  c.observers = static_cast<int>(common_frames.size());

  std::vector<MaskKey> common_masks;
  std::set_intersection(a.containing.begin(), a.containing.end(), b.containing.begin(), b.containing.end(),
                        std::back_inserter(common_masks));
  // Sorted by frame first, so distinct frames are runs.
  int last_frame = 0;
  for (std::size_t i = 0; i < common_masks.size(); ++i) {
    if (i == 0 || common_masks[i].frame_id != last_frame) ++c.supporters;
    last_frame = common_masks[i].frame_id;
  }
  return c;
}

namespace {

// Early-exit variant of coverage_ratio(...) >= tau.
bool covers(const VoxelHash& container, std::span<const Vec3> containee, double tau, double radius) {
  const std::size_t n = containee.size();
  const double needed = tau * static_cast<double>(n);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (container.has_neighbor(containee[i], radius)) ++hit;
    const std::size_t remaining = n - i - 1;
    if (static_cast<double>(hit) >= needed) break;
    if (static_cast<double>(hit + remaining) < needed) return false;
  }
  return static_cast<double>(hit) / static_cast<double>(n) >= tau;
}

}  // namespace

bool mask_contains(std::span<const Vec3> container, std::span<const Vec3> containee, const MergeConfig& config) {
  return contains(container, containee, config.tau_contain, config.contain_radius);
}

MaskContext::MaskContext(const Scene& scene, MergeConfig config) : scene_(&scene), config_(std::move(config)) {
  config_.validate();
  std::vector<Container> lifted(scene.masks.size());
  parallel_for(scene.masks.size(), config_.workers, [&](std::size_t i) {
    const auto& m = scene.masks[i];
    lifted[i].key = m.key();
    lifted[i].points = lift_mask(m, scene.frame(m.frame_id));
  });
  for (auto& c : lifted) {
    if (c.points.size() < config_.min_mask_pixels) continue;
    masks_.push_back(std::move(c));
  }
  parallel_for(masks_.size(), config_.workers, [&](std::size_t i) {
    masks_[i].index = VoxelHash(masks_[i].points, config_.contain_radius);
  });

  frame_ranges_.resize(scene.frames.size());
  for (std::size_t f = 0; f < scene.frames.size(); ++f) {
    const int id = scene.frames[f].id;
    auto lo = std::lower_bound(masks_.begin(), masks_.end(), id,
                               [](const Container& c, int fid) { return c.key.frame_id < fid; });
    auto hi = std::upper_bound(masks_.begin(), masks_.end(), id,
                               [](int fid, const Container& c) { return fid < c.key.frame_id; });
    frame_ranges_[f] = {static_cast<std::size_t>(lo - masks_.begin()), static_cast<std::size_t>(hi - masks_.begin())};
  }
}

std::vector<Vec3> MaskContext::visible_portion(std::span<const Vec3> points, const CameraFrame& frame) const {
  const auto vis = visible_projection(points, frame, config_.tau_occ);
  std::vector<Vec3> out;
  out.reserve(vis.indices.size());
  for (auto i : vis.indices) out.push_back(points[i]);
  return out;
}

std::vector<Vec3> MaskContext::observed_portion(std::span<const Vec3> points, const CameraFrame& frame) const {
  return visible_projection(points, frame, config_.tau_occ).surface;
}

void MaskContext::annotate(MaskNode& node) const {
  node.visible_frames.clear();
  node.containing.clear();
  for (std::size_t f = 0; f < scene_->frames.size(); ++f) {
    const CameraFrame& frame = scene_->frames[f];
    const auto observed = observed_portion(node.points, frame);
    if (observed.size() < config_.min_visible_points) continue;
    node.visible_frames.push_back(frame.id);
    const auto [lo, hi] = frame_ranges_[f];
    for (std::size_t m = lo; m < hi; ++m) {
      if (covers(masks_[m].index, observed, config_.tau_contain, config_.contain_radius)) {
        node.containing.push_back(masks_[m].key);
      }
    }
  }
  std::sort(node.visible_frames.begin(), node.visible_frames.end());
  std::sort(node.containing.begin(), node.containing.end());
}

namespace {

std::vector<GraphEdge> score_edges(const std::vector<MaskNode>& nodes, const MergeConfig& config) {
  const std::size_t n = nodes.size();
  const std::size_t pairs = n < 2 ? 0 : n * (n - 1) / 2;
  std::vector<Consensus> scored(pairs);
  // Row-major upper triangle: pair p -> (i, j).
  std::vector<std::size_t> row_start(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) row_start[i + 1] = row_start[i] + (n - i - 1);
  const std::size_t rows = n;
  parallel_for(rows, config.workers, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) scored[row_start[i] + (j - i - 1)] = consensus_rate(nodes[i], nodes[j]);
  });
  std::vector<GraphEdge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Consensus& c = scored[row_start[i] + (j - i - 1)];
      if (c.observers > 0 && c.rate() >= config.tau_rate) edges.push_back({i, j, c});
    }
  }
  return edges;
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  // Smaller index becomes the root so component order is stable.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }
};

}  // namespace

MaskGraph build_graph(std::shared_ptr<const MaskContext> context) {
  MaskGraph g;
  const auto& masks = context->masks();
  g.nodes.resize(masks.size());
  parallel_for(masks.size(), context->config().workers, [&](std::size_t i) {
    MaskNode& node = g.nodes[i];
    node.id = static_cast<int>(i);
    node.members = {masks[i].key};
    node.points = masks[i].points;
    context->annotate(node);
  });
  g.next_id = static_cast<int>(masks.size());
  g.edges = score_edges(g.nodes, context->config());
  g.context = std::move(context);
  return g;
}

MaskGraph build_graph(const Scene& scene, const MergeConfig& config) {
  return build_graph(std::make_shared<const MaskContext>(scene, config));
}

MaskGraph merge_step(const MaskGraph& graph, int min_observers) {
  if (min_observers < 1) throw ConfigError("merge_step: observer threshold must be >= 1");
  const std::size_t n = graph.nodes.size();
  DisjointSets sets(n);
  for (const auto& e : graph.edges) {
    if (e.consensus.observers >= min_observers) sets.unite(e.a, e.b);
  }

  std::vector<std::vector<std::size_t>> components;
  std::vector<std::size_t> slot(n, SIZE_MAX);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    if (slot[root] == SIZE_MAX) {
      slot[root] = components.size();
      components.emplace_back();
    }
    components[slot[root]].push_back(i);
  }

  MaskGraph out;
  out.context = graph.context;
  out.next_id = graph.next_id;
  out.nodes.resize(components.size());
  std::vector<std::size_t> fresh;
  for (std::size_t c = 0; c < components.size(); ++c) {
    const auto& comp = components[c];
    if (comp.size() == 1) {
      out.nodes[c] = graph.nodes[comp.front()];
      continue;
    }
    MaskNode& node = out.nodes[c];
    node.id = out.next_id++;
    for (auto i : comp) {
      const auto& src = graph.nodes[i];
      node.members.insert(node.members.end(), src.members.begin(), src.members.end());
      node.points.insert(node.points.end(), src.points.begin(), src.points.end());
    }
    std::sort(node.members.begin(), node.members.end());
    fresh.push_back(c);
  }
  parallel_for(fresh.size(), graph.context->config().workers,
               [&](std::size_t k) { graph.context->annotate(out.nodes[fresh[k]]); });
  out.edges = score_edges(out.nodes, graph.context->config());
  return out;
}

std::vector<Instance> detect_instances(const Scene& scene, const MergeConfig& config) {
  auto context = std::make_shared<const MaskContext>(scene, config);
  MaskGraph graph = build_graph(context);
  for (int n_k : context->config().observer_schedule) graph = merge_step(graph, n_k);

  std::vector<Instance> out;
  for (auto& node : graph.nodes) {
    if (node.points.size() < config.min_points) continue;
    Instance inst;
    inst.node_id = node.id;
    inst.members = node.members;
    inst.box = box_from_points(node.points);
    inst.points = std::move(node.points);
    out.push_back(std::move(inst));
  }
  std::sort(out.begin(), out.end(), [](const Instance& a, const Instance& b) {
    if (a.points.size() != b.points.size()) return a.points.size() > b.points.size();
    return a.node_id < b.node_id;
  });
  return out;
}

std::vector<Box3D> detect_class_agnostic(const Scene& scene, const MergeConfig& config) {
  std::vector<Box3D> boxes;
  for (const auto& inst : detect_instances(scene, config)) boxes.push_back(inst.box);
  return boxes;
}

}  // namespace vcdet

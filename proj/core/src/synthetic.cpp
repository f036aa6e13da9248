#include "vcdet/synthetic.hpp"

#include "vcdet/error.hpp"
#include "vcdet/image_io.hpp"
#include "vcdet/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace fs = std::filesystem;

namespace vcdet {

SyntheticSpec three_cuboid_spec() {
  SyntheticSpec spec;
  spec.objects = {
      {{Vec3(-0.9, -0.5, 0.45), Vec3(0.5, 0.5, 0.9)}, "chair"},
      {{Vec3(0.8, -0.4, 0.375), Vec3(1.0, 0.6, 0.75)}, "table"},
      {{Vec3(0.0, 0.9, 0.6), Vec3(0.6, 0.4, 1.2)}, "cabinet"},
  };
  spec.num_cameras = 8;
  spec.width = 320;
  spec.height = 240;
  spec.focal = 240.0;
  spec.vocabulary = {"chair", "table", "cabinet", "sofa", "bed", "lamp"};
  return spec;
}

SyntheticSpec random_micro_spec(std::uint64_t seed, int max_frames, int max_objects) {
  SplitMix64 rng(seed * 0x2545f4914f6cdd1dULL + 17);
  SyntheticSpec spec;
  spec.seed = seed;
  spec.scene_id = "micro_" + std::to_string(seed);
  spec.width = 96;
  spec.height = 72;
  spec.focal = 72.0;
  spec.num_cameras = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, max_frames - 1))));
  spec.ring_radius = rng.uniform(2.6, 3.4);
  spec.camera_height = rng.uniform(1.2, 2.2);
  spec.split_probability = 0.35;
  spec.max_masks_per_frame = 4;
  spec.surface_spacing = 0.05;
  const int n_obj = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_objects)));
  for (int attempt = 0; attempt < 200 && static_cast<int>(spec.objects.size()) < n_obj; ++attempt) {
    const Vec3 size(rng.uniform(0.3, 0.8), rng.uniform(0.3, 0.8), rng.uniform(0.3, 1.0));
    const Vec3 center(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 0.5 * size.z());
    const Box3D box{center, size};
    const bool overlaps = std::any_of(spec.objects.begin(), spec.objects.end(), [&](const SyntheticObject& o) {
      const Vec3 gap = (o.box.center - center).cwiseAbs() - 0.5 * (o.box.size + size);
      return gap.x() < 0.15 && gap.y() < 0.15;
    });
    if (!overlaps) spec.objects.push_back({box, "obj" + std::to_string(spec.objects.size())});
  }
  return spec;
}

Mat4 look_at(const Vec3& eye, const Vec3& target) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(Vec3::UnitZ());
  if (right.norm() < 1e-9) right = Vec3::UnitX();
  right.normalize();
  const Vec3 down = forward.cross(right);
  Mat3 r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  Mat4 pose = Mat4::Identity();
  pose.topLeftCorner<3, 3>() = r;
  pose.topRightCorner<3, 1>() = -r * eye;
  return pose;
}

namespace {

// Ray/box slab test; returns entry distance along `dir` or +inf.
double hit_box(const Vec3& origin, const Vec3& dir, const Box3D& box) {
  const Vec3 lo = box.min(), hi = box.max();
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-15) {
      if (origin[a] < lo[a] || origin[a] > hi[a]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double ta = (lo[a] - origin[a]) / dir[a];
    double tb = (hi[a] - origin[a]) / dir[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::numeric_limits<double>::infinity();
  }
  return t0 > 0.0 ? t0 : std::numeric_limits<double>::infinity();
}

// Round through float so the cloud survives a PLY round trip unchanged.
// volatile: g++ 11 at -O3 drops the double->float->double round trip here.
Vec3 as_float(const Vec3& p) {
  volatile float xyz[3];
  for (int k = 0; k < 3; ++k) xyz[k] = static_cast<float>(p[k]);
  return Vec3(xyz[0], xyz[1], xyz[2]);
}

void sample_face(std::vector<Vec3>& out, const Vec3& origin, const Vec3& e1, const Vec3& e2, double step) {
  const int n1 = std::max(1, static_cast<int>(std::ceil(e1.norm() / step)));
  const int n2 = std::max(1, static_cast<int>(std::ceil(e2.norm() / step)));
  for (int i = 0; i <= n1; ++i)
    for (int j = 0; j <= n2; ++j) out.push_back(as_float(origin + e1 * (double(i) / n1) + e2 * (double(j) / n2)));
}

}  // namespace

SyntheticScene render_synthetic(const SyntheticSpec& spec) {
  if (spec.num_cameras < 1 || spec.width < 1 || spec.height < 1) throw ConfigError("synthetic: bad camera setup");
  SyntheticScene out;
  out.objects = spec.objects;
  Scene& scene = out.scene;
  scene.id = spec.scene_id;
  SplitMix64 rng(spec.seed ^ 0x5851f42d4c957f2dULL);

  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (int c = 0; c < spec.num_cameras; ++c) {
    const double a = phase + 2.0 * std::numbers::pi * c / spec.num_cameras;
    const Vec3 eye(spec.ring_radius * std::cos(a), spec.ring_radius * std::sin(a), spec.camera_height);
    CameraFrame frame;
    frame.id = c;
    frame.width = spec.width;
    frame.height = spec.height;
    frame.intrinsics = {spec.focal, spec.focal, 0.5 * spec.width - 0.5, 0.5 * spec.height - 0.5};
    frame.world_to_camera = look_at(eye, spec.target);
    frame.depth.assign(static_cast<std::size_t>(spec.width) * spec.height, 0.0f);
    std::vector<int> ids(frame.depth.size(), -1);

    const Mat3 rt = frame.rotation().transpose();
    for (int v = 0; v < spec.height; ++v) {
      for (int u = 0; u < spec.width; ++u) {
        // Direction with unit camera-z, so the hit distance is the depth.
        const Vec3 dir = rt * Vec3((u - frame.intrinsics.cx) / spec.focal, (v - frame.intrinsics.cy) / spec.focal, 1.0);
        double best = std::numeric_limits<double>::infinity();
        int best_id = -1;
        for (std::size_t o = 0; o < spec.objects.size(); ++o) {
          const double t = hit_box(eye, dir, spec.objects[o].box);
          if (t < best) {
            best = t;
            best_id = static_cast<int>(o);
          }
        }
        if (spec.floor && dir.z() < -1e-12) {
          const double t = -eye.z() / dir.z();
          const Vec3 p = eye + t * dir;
          if (t < best && std::abs(p.x()) <= spec.floor_extent && std::abs(p.y()) <= spec.floor_extent) {
            best = t;
            best_id = -1;
          }
        }
        if (!std::isfinite(best)) continue;
        const double mm = std::round(best * 1000.0);
        if (mm < 1.0 || mm > 65535.0) continue;
        const std::size_t idx = static_cast<std::size_t>(v) * spec.width + u;
        frame.depth[idx] = static_cast<float>(static_cast<std::uint16_t>(mm)) / 1000.0f;
        ids[idx] = best_id;
      }
    }

    // One mask per visible object, optionally split at its median column.
    int mask_id = 0;
    std::vector<InstanceMask2D> frame_masks;
    std::size_t visible_objects = 0;
    for (std::size_t o = 0; o < spec.objects.size(); ++o) {
      visible_objects += std::find(ids.begin(), ids.end(), static_cast<int>(o)) != ids.end();
    }
    std::size_t budget = spec.max_masks_per_frame > 0 ? static_cast<std::size_t>(spec.max_masks_per_frame) : SIZE_MAX;
    for (std::size_t o = 0; o < spec.objects.size(); ++o) {
      Bitmap bm(spec.width, spec.height);
      std::vector<int> cols;
      for (int v = 0; v < spec.height; ++v)
        for (int u = 0; u < spec.width; ++u)
          if (ids[static_cast<std::size_t>(v) * spec.width + u] == static_cast<int>(o)) {
            bm.set(u, v);
            cols.push_back(u);
          }
      if (cols.empty()) continue;
      --visible_objects;
      const bool split = rng.uniform() < spec.split_probability && budget >= visible_objects + 2 && cols.size() >= 2;
      if (split) {
        std::nth_element(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(cols.size() / 2), cols.end());
        const int cut = cols[cols.size() / 2];
        Bitmap left(spec.width, spec.height), right(spec.width, spec.height);
        for (int v = 0; v < spec.height; ++v)
          for (int u = 0; u < spec.width; ++u)
            if (bm.at(u, v)) (u < cut ? left : right).set(u, v);
        for (const Bitmap* part : {&left, &right}) {
          if (part->count() == 0) continue;
          frame_masks.push_back({c, mask_id++, encode_rle(*part)});
          --budget;
        }
      } else {
        frame_masks.push_back({c, mask_id++, encode_rle(bm)});
        --budget;
      }
    }
    scene.masks.insert(scene.masks.end(), frame_masks.begin(), frame_masks.end());
    scene.frames.push_back(std::move(frame));
    out.object_ids.push_back(std::move(ids));
  }

  // Point cloud: five faces of every cuboid (bottom rests on the floor) plus the floor.
  std::vector<Vec3>& pts = scene.cloud.points;
  for (const auto& o : spec.objects) {
    const Vec3 lo = o.box.min();
    const Vec3 s = o.box.size;
    const Vec3 ex(s.x(), 0, 0), ey(0, s.y(), 0), ez(0, 0, s.z());
    sample_face(pts, lo + ez, ex, ey, spec.surface_spacing);  // top
    sample_face(pts, lo, ex, ez, spec.surface_spacing);
    sample_face(pts, lo + ey, ex, ez, spec.surface_spacing);
    sample_face(pts, lo, ey, ez, spec.surface_spacing);
    sample_face(pts, lo + ex, ey, ez, spec.surface_spacing);
  }
  if (spec.floor) {
    const double e = spec.floor_extent;
    sample_face(pts, Vec3(-e, -e, 0), Vec3(2 * e, 0, 0), Vec3(0, 2 * e, 0), spec.surface_spacing * 2.5);
  }
  scene.source_point_count = pts.size();

  if (!spec.vocabulary.empty()) {
    Vocabulary vocab;
    vocab.classes = spec.vocabulary;
    scene.vocabulary = vocab;
  }
  return out;
}

fs::path write_synthetic(const SyntheticScene& synthetic, const fs::path& dir) {
  const fs::path root = fs::absolute(dir).lexically_normal();
  Scene scene = synthetic.scene;
  nlohmann::json names = nlohmann::json::object();
  for (std::size_t o = 0; o < synthetic.objects.size(); ++o) names[std::to_string(o + 1)] = synthetic.objects[o].label;
  write_text_file(root / "images" / "labels.json", names.dump(2) + "\n");
  for (std::size_t f = 0; f < scene.frames.size(); ++f) {
    CameraFrame& frame = scene.frames[f];
    GrayImage16 labels;
    labels.width = frame.width;
    labels.height = frame.height;
    labels.pixels.resize(synthetic.object_ids[f].size());
    for (std::size_t i = 0; i < labels.pixels.size(); ++i) {
      labels.pixels[i] = static_cast<std::uint16_t>(synthetic.object_ids[f][i] + 1);
    }
    char name[64];
    std::snprintf(name, sizeof name, "frame_%06d.png", frame.id);
    const fs::path image = root / "images" / name;
    write_png_gray16(image, labels);
    frame.image_path = image.string();
  }
  const fs::path manifest = write_scene(scene, root);

  // Ground truth: class ids index the scene vocabulary when present, else the object labels.
  std::vector<std::string> classes = scene.vocabulary ? scene.vocabulary->classes : std::vector<std::string>{};
  nlohmann::json boxes = nlohmann::json::array();
  for (const auto& o : synthetic.objects) {
    auto it = std::find(classes.begin(), classes.end(), o.label);
    if (it == classes.end()) {
      classes.push_back(o.label);
      it = classes.end() - 1;
    }
    boxes.push_back({{"center", {o.box.center.x(), o.box.center.y(), o.box.center.z()}},
                     {"size", {o.box.size.x(), o.box.size.y(), o.box.size.z()}},
                     {"class_id", it - classes.begin()},
                     {"label", o.label}});
  }
  nlohmann::json gt{{"classes", classes}, {"scenes", {{scene.id, boxes}}}};
  write_text_file(root / "gt.json", gt.dump(2) + "\n");
  return manifest;
}

}  // namespace vcdet

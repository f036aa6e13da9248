#include "vcdet/scene_io.hpp"

#include "vcdet/alignment.hpp"
#include "vcdet/error.hpp"
#include "vcdet/image_io.hpp"
#include "vcdet/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace vcdet {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary codecs assume a little-endian host");

[[noreturn]] void schema_error(const fs::path& file, const std::string& field, const std::string& why) {
  throw InputError(file.string() + ": field '" + field + "': " + why);
}

const json& require(const json& obj, const char* key, const fs::path& file, const std::string& ctx) {
  if (!obj.is_object() || !obj.contains(key)) schema_error(file, ctx + key, "missing");
  return obj.at(key);
}

template <typename T>
T get_as(const json& value, const fs::path& file, const std::string& field) {
  try {
    return value.get<T>();
  } catch (const json::exception& e) {
    schema_error(file, field, std::string("wrong type (") + e.what() + ")");
  }
}

json parse_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": invalid JSON: " + e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& rel) {
  const fs::path p(rel);
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

std::string format_vec(const Vec3& v) {
  return "[" + format_real(v.x()) + "," + format_real(v.y()) + "," + format_real(v.z()) + "]";
}

void check_finite_detection(const Detection& d) {
  if (!d.box.center.allFinite() || !d.box.size.allFinite() || !std::isfinite(d.score)) {
    throw InputError("detection with non-finite field (label '" + d.label + "')");
  }
}

Mat4 pose_from_array(const std::array<double, 16>& a) {
  Mat4 m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = a[static_cast<std::size_t>(r * 4 + c)];
  return m;
}

std::array<double, 16> pose_to_array(const Mat4& m) {
  std::array<double, 16> a{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) a[static_cast<std::size_t>(r * 4 + c)] = m(r, c);
  return a;
}

}  // namespace

// ---------------------------------------------------------------------------
// text files

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write file: " + path.string());
  out << text;
  out.flush();
  if (!out) throw InputError("failed writing file: " + path.string());
}

// ---------------------------------------------------------------------------
// Scene

const CameraFrame& Scene::frame(int frame_id) const { return frames[frame_index(frame_id)]; }

std::size_t Scene::frame_index(int frame_id) const {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].id == frame_id) return i;
  }
  throw InputError("unknown frame id " + std::to_string(frame_id));
}

std::vector<std::size_t> uniform_frame_indices(std::size_t n, std::size_t count) {
  std::vector<std::size_t> out;
  if (count == 0 || count >= n) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(i * n / count);
  return out;
}

SceneManifest parse_manifest(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path)) throw InputError("manifest not found: " + manifest_path.string());
  const json root = parse_json_file(manifest_path);
  const fs::path& f = manifest_path;
  if (!root.is_object()) schema_error(f, "<root>", "expected object");

  SceneManifest m;
  m.version = get_as<int>(require(root, "version", f, ""), f, "version");
  if (m.version != kManifestVersion) {
    schema_error(f, "version", "unsupported version " + std::to_string(m.version));
  }
  if (root.contains("scene_id")) m.scene_id = get_as<std::string>(root["scene_id"], f, "scene_id");
  m.point_cloud = get_as<std::string>(require(root, "point_cloud", f, ""), f, "point_cloud");
  m.masks = get_as<std::string>(require(root, "masks", f, ""), f, "masks");

  const json& frames = require(root, "frames", f, "");
  if (!frames.is_array()) schema_error(f, "frames", "expected array");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const json& fr = frames[i];
    const std::string ctx = "frames[" + std::to_string(i) + "].";
    FrameRecord rec;
    rec.id = get_as<int>(require(fr, "id", f, ctx), f, ctx + "id");
    rec.depth = get_as<std::string>(require(fr, "depth", f, ctx), f, ctx + "depth");
    if (fr.contains("image") && !fr["image"].is_null()) {
      rec.image = get_as<std::string>(fr["image"], f, ctx + "image");
    }
    const auto pose = get_as<std::vector<double>>(require(fr, "pose", f, ctx), f, ctx + "pose");
    if (pose.size() != 16) schema_error(f, ctx + "pose", "expected 16 reals");
    std::copy(pose.begin(), pose.end(), rec.pose.begin());
    const json& k = require(fr, "intrinsics", f, ctx);
    rec.intrinsics.fx = get_as<double>(require(k, "fx", f, ctx + "intrinsics."), f, ctx + "intrinsics.fx");
    rec.intrinsics.fy = get_as<double>(require(k, "fy", f, ctx + "intrinsics."), f, ctx + "intrinsics.fy");
    rec.intrinsics.cx = get_as<double>(require(k, "cx", f, ctx + "intrinsics."), f, ctx + "intrinsics.cx");
    rec.intrinsics.cy = get_as<double>(require(k, "cy", f, ctx + "intrinsics."), f, ctx + "intrinsics.cy");
    rec.width = get_as<int>(require(fr, "width", f, ctx), f, ctx + "width");
    rec.height = get_as<int>(require(fr, "height", f, ctx), f, ctx + "height");
    m.frames.push_back(std::move(rec));
  }

  if (root.contains("vocabulary") && !root["vocabulary"].is_null()) {
    const json& v = root["vocabulary"];
    VocabularyRecord vr;
    vr.classes = get_as<std::vector<std::string>>(require(v, "classes", f, "vocabulary."), f,
                                                  "vocabulary.classes");
    if (v.contains("embeddings") && !v["embeddings"].is_null()) {
      vr.embeddings = get_as<std::string>(v["embeddings"], f, "vocabulary.embeddings");
    }
    if (v.contains("dim")) vr.dim = get_as<int>(v["dim"], f, "vocabulary.dim");
    if (v.contains("prompt_template")) {
      vr.prompt_template = get_as<std::string>(v["prompt_template"], f, "vocabulary.prompt_template");
    }
    m.vocabulary = std::move(vr);
  }
  return m;
}

namespace {

void validate_frame_record(const FrameRecord& rec, std::size_t i, const fs::path& f) {
  const std::string ctx = "frames[" + std::to_string(i) + "].";
  if (rec.width <= 0 || rec.height <= 0) schema_error(f, ctx + "width/height", "must be > 0");
  if (!(rec.intrinsics.fx > 0.0) || !(rec.intrinsics.fy > 0.0)) {
    schema_error(f, ctx + "intrinsics", "fx and fy must be > 0");
  }
  if (!std::isfinite(rec.intrinsics.cx) || !std::isfinite(rec.intrinsics.cy)) {
    schema_error(f, ctx + "intrinsics", "non-finite principal point");
  }
  try {
    validate_rigid(pose_from_array(rec.pose));
  } catch (const InputError& e) {
    schema_error(f, ctx + "pose", e.what());
  }
}

void validate_masks(std::vector<InstanceMask2D>& masks, const std::vector<CameraFrame>& frames,
                    const std::set<int>& all_frame_ids, const fs::path& f) {
  std::map<int, const CameraFrame*> by_id;
  for (const auto& fr : frames) by_id[fr.id] = &fr;

  std::vector<InstanceMask2D> kept;
  std::set<MaskKey> seen;
  for (auto& m : masks) {
    const std::string ctx =
        "mask(frame_id=" + std::to_string(m.frame_id) + ", mask_id=" + std::to_string(m.mask_id) + ")";
    if (!all_frame_ids.contains(m.frame_id)) schema_error(f, ctx, "references unknown frame id");
    if (!seen.insert(m.key()).second) schema_error(f, ctx, "duplicate mask id");
    auto it = by_id.find(m.frame_id);
    if (it == by_id.end()) continue;  // frame dropped by frame sampling
    if (m.rle.width != it->second->width || m.rle.height != it->second->height) {
      schema_error(f, ctx + ".size", "does not match frame size");
    }
    try {
      m.rle = canonicalize_rle(m.rle);
    } catch (const InputError& e) {
      schema_error(f, ctx + ".counts", e.what());
    }
    kept.push_back(std::move(m));
  }
  std::sort(kept.begin(), kept.end(),
            [](const InstanceMask2D& a, const InstanceMask2D& b) { return a.key() < b.key(); });

  // Pairwise disjoint within each frame.
  for (std::size_t i = 0; i < kept.size();) {
    std::size_t j = i;
    const CameraFrame& fr = *by_id.at(kept[i].frame_id);
    std::vector<std::uint8_t> owner(static_cast<std::size_t>(fr.width) * fr.height, 0);
    for (; j < kept.size() && kept[j].frame_id == kept[i].frame_id; ++j) {
      const Bitmap bm = decode_rle(kept[j].rle);
      for (std::size_t p = 0; p < bm.bits.size(); ++p) {
        if (!bm.bits[p]) continue;
        if (owner[p]) {
          schema_error(f, "masks of frame " + std::to_string(kept[i].frame_id),
                       "instance masks overlap (mask_id " + std::to_string(kept[j].mask_id) + ")");
        }
        owner[p] = 1;
      }
    }
    i = j;
  }
  masks = std::move(kept);
}

}  // namespace

Scene load_scene(const fs::path& manifest_path, const LoadOptions& options) {
  const SceneManifest m = parse_manifest(manifest_path);
  const fs::path& f = manifest_path;
  const fs::path base = manifest_path.parent_path();
  if (m.frames.empty()) throw InputError(f.string() + ": no frames");

  std::set<int> ids;
  for (std::size_t i = 0; i < m.frames.size(); ++i) {
    validate_frame_record(m.frames[i], i, f);
    if (!ids.insert(m.frames[i].id).second) {
      schema_error(f, "frames[" + std::to_string(i) + "].id",
                   "duplicate frame id " + std::to_string(m.frames[i].id));
    }
  }

  Scene scene;
  scene.id = m.scene_id.empty() ? fs::absolute(manifest_path).parent_path().filename().string()
                                : m.scene_id;
  scene.sample_seed = options.seed;

  for (std::size_t i : uniform_frame_indices(m.frames.size(), options.max_frames)) {
    const FrameRecord& rec = m.frames[i];
    CameraFrame fr;
    fr.id = rec.id;
    fr.intrinsics = rec.intrinsics;
    fr.world_to_camera = pose_from_array(rec.pose);
    fr.width = rec.width;
    fr.height = rec.height;
    if (!rec.image.empty()) fr.image_path = resolve(base, rec.image).string();
    const fs::path depth_path = resolve(base, rec.depth);
    if (!fs::exists(depth_path)) {
      schema_error(f, "frames[" + std::to_string(i) + "].depth", "file not found: " + depth_path.string());
    }
    const GrayImage16 depth = read_png_gray(depth_path);
    if (depth.width != rec.width || depth.height != rec.height) {
      schema_error(f, "frames[" + std::to_string(i) + "].depth",
                   "depth image is " + std::to_string(depth.width) + "x" + std::to_string(depth.height) +
                       ", frame declares " + std::to_string(rec.width) + "x" + std::to_string(rec.height));
    }
    fr.depth = depth_from_millimeters(depth);
    scene.frames.push_back(std::move(fr));
  }

  const fs::path cloud_path = resolve(base, m.point_cloud);
  if (!fs::exists(cloud_path)) schema_error(f, "point_cloud", "file not found: " + cloud_path.string());
  PointCloud cloud = read_ply(cloud_path);
  scene.source_point_count = cloud.size();
  if (cloud.size() > options.point_cap) {
    const auto keep = sample_indices(cloud.size(), options.point_cap, options.seed);
    PointCloud sampled;
    sampled.points.reserve(keep.size());
    for (auto k : keep) {
      sampled.points.push_back(cloud.points[k]);
      if (cloud.has_colors()) {
        sampled.colors.insert(sampled.colors.end(), cloud.colors.begin() + 3 * k,
                              cloud.colors.begin() + 3 * k + 3);
      }
    }
    cloud = std::move(sampled);
  }
  scene.cloud = std::move(cloud);

  const fs::path masks_path = resolve(base, m.masks);
  if (!fs::exists(masks_path)) schema_error(f, "masks", "file not found: " + masks_path.string());
  scene.masks = read_masks(masks_path);
  validate_masks(scene.masks, scene.frames, ids, masks_path);

  if (m.vocabulary) scene.vocabulary = resolve_vocabulary(*m.vocabulary, base);
  return scene;
}

fs::path write_scene(const Scene& scene, const fs::path& dir) {
  fs::create_directories(dir / "depth");
  json root;
  root["version"] = kManifestVersion;
  root["scene_id"] = scene.id;
  root["point_cloud"] = "cloud.ply";
  root["masks"] = "masks.json";
  json frames = json::array();
  const fs::path abs_dir = fs::absolute(dir).lexically_normal();
  for (const auto& fr : scene.frames) {
    char name[64];
    std::snprintf(name, sizeof name, "depth/frame_%06d.png", fr.id);
    write_png_gray16(dir / name, depth_to_millimeters(fr.depth, fr.width, fr.height));
    json jf;
    jf["id"] = fr.id;
    jf["depth"] = name;
    if (!fr.image_path.empty()) {
      const fs::path rel = fs::path(fr.image_path).lexically_relative(abs_dir);
      const bool inside = !rel.empty() && *rel.begin() != "..";
      jf["image"] = inside ? rel.generic_string() : fr.image_path;
    }
    jf["pose"] = pose_to_array(fr.world_to_camera);
    jf["intrinsics"] = {{"fx", fr.intrinsics.fx}, {"fy", fr.intrinsics.fy},
                        {"cx", fr.intrinsics.cx}, {"cy", fr.intrinsics.cy}};
    jf["width"] = fr.width;
    jf["height"] = fr.height;
    frames.push_back(std::move(jf));
  }
  root["frames"] = std::move(frames);
  if (scene.vocabulary) {
    const Vocabulary& v = *scene.vocabulary;
    json jv;
    jv["classes"] = v.classes;
    jv["prompt_template"] = v.prompt_template;
    jv["dim"] = v.dim();
    if (!v.text_embeddings.empty()) {
      write_embeddings(dir / "vocab.emb", v.text_embeddings);
      jv["embeddings"] = "vocab.emb";
    }
    root["vocabulary"] = std::move(jv);
  }
  write_ply(dir / "cloud.ply", scene.cloud);
  write_masks(dir / "masks.json", scene.masks);
  const fs::path manifest = dir / "manifest.json";
  write_text_file(manifest, root.dump(2) + "\n");
  return manifest;
}

// ---------------------------------------------------------------------------
// masks

std::vector<InstanceMask2D> read_masks(const fs::path& path) {
  const json root = parse_json_file(path);
  if (!root.is_array()) schema_error(path, "<root>", "expected array of masks");
  std::vector<InstanceMask2D> out;
  out.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& jm = root[i];
    const std::string ctx = "[" + std::to_string(i) + "].";
    InstanceMask2D m;
    m.frame_id = get_as<int>(require(jm, "frame_id", path, ctx), path, ctx + "frame_id");
    m.mask_id = get_as<int>(require(jm, "mask_id", path, ctx), path, ctx + "mask_id");
    const auto size = get_as<std::vector<int>>(require(jm, "size", path, ctx), path, ctx + "size");
    if (size.size() != 2 || size[0] <= 0 || size[1] <= 0) schema_error(path, ctx + "size", "expected [H, W] > 0");
    m.rle.height = size[0];
    m.rle.width = size[1];
    m.rle.counts = get_as<std::vector<std::uint32_t>>(require(jm, "counts", path, ctx), path, ctx + "counts");
    out.push_back(std::move(m));
  }
  return out;
}

void write_masks(const fs::path& path, std::span<const InstanceMask2D> masks) {
  json root = json::array();
  for (const auto& m : masks) {
    root.push_back({{"frame_id", m.frame_id},
                    {"mask_id", m.mask_id},
                    {"size", {m.rle.height, m.rle.width}},
                    {"counts", m.rle.counts}});
  }
  write_text_file(path, root.dump() + "\n");
}

// ---------------------------------------------------------------------------
// PLY

PointCloud read_ply(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open PLY: " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "ply") throw InputError(path.string() + ": not a PLY file");

  std::size_t vertex_count = 0;
  std::vector<std::pair<std::string, std::string>> props;  // (type, name) of vertex element
  bool in_vertex = false;
  bool binary_le = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (word == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      in_vertex = name == "vertex";
      if (in_vertex) vertex_count = count;
      else if (count > 0) throw InputError(path.string() + ": unsupported PLY element '" + name + "'");
    } else if (word == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      props.emplace_back(type, name);
    } else if (word == "end_header") {
      break;
    }
  }
  if (!binary_le) throw InputError(path.string() + ": only binary_little_endian PLY is supported");

  const auto find = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < props.size(); ++i)
      if (props[i].second == name) return static_cast<int>(i);
    return -1;
  };
  const auto size_of = [&](const std::string& t) -> std::size_t {
    if (t == "float" || t == "float32" || t == "int" || t == "int32" || t == "uint" || t == "uint32") return 4;
    if (t == "double" || t == "float64") return 8;
    if (t == "uchar" || t == "uint8" || t == "char" || t == "int8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    throw InputError(path.string() + ": unsupported PLY property type '" + t + "'");
  };
  std::vector<std::size_t> offsets;
  std::size_t stride = 0;
  for (const auto& [type, name] : props) {
    offsets.push_back(stride);
    stride += size_of(type);
  }
  const int ix = find("x"), iy = find("y"), iz = find("z");
  if (ix < 0 || iy < 0 || iz < 0) throw InputError(path.string() + ": PLY lacks x/y/z");
  for (int i : {ix, iy, iz}) {
    const auto& t = props[static_cast<std::size_t>(i)].first;
    if (t != "float" && t != "float32") throw InputError(path.string() + ": x/y/z must be float32");
  }
  const int ir = find("red"), ig = find("green"), ib = find("blue");
  const bool colored = ir >= 0 && ig >= 0 && ib >= 0;

  std::vector<char> data(vertex_count * stride);
  in.read(data.data(), static_cast<std::streamsize>(data.size()));
  if (static_cast<std::size_t>(in.gcount()) != data.size()) {
    throw InputError(path.string() + ": truncated PLY body");
  }
  PointCloud cloud;
  cloud.points.resize(vertex_count);
  if (colored) cloud.colors.resize(vertex_count * 3);
  for (std::size_t v = 0; v < vertex_count; ++v) {
    const char* rec = data.data() + v * stride;
    float xyz[3];
    std::memcpy(&xyz[0], rec + offsets[static_cast<std::size_t>(ix)], 4);
    std::memcpy(&xyz[1], rec + offsets[static_cast<std::size_t>(iy)], 4);
    std::memcpy(&xyz[2], rec + offsets[static_cast<std::size_t>(iz)], 4);
    if (!std::isfinite(xyz[0]) || !std::isfinite(xyz[1]) || !std::isfinite(xyz[2])) {
      throw InputError(path.string() + ": non-finite coordinate at vertex " + std::to_string(v));
    }
    cloud.points[v] = Vec3(xyz[0], xyz[1], xyz[2]);
    if (colored) {
      cloud.colors[3 * v] = static_cast<std::uint8_t>(rec[offsets[static_cast<std::size_t>(ir)]]);
      cloud.colors[3 * v + 1] = static_cast<std::uint8_t>(rec[offsets[static_cast<std::size_t>(ig)]]);
      cloud.colors[3 * v + 2] = static_cast<std::uint8_t>(rec[offsets[static_cast<std::size_t>(ib)]]);
    }
  }
  return cloud;
}

void write_ply(const fs::path& path, const PointCloud& cloud) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write PLY: " + path.string());
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n";
  if (cloud.has_colors()) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const float xyz[3] = {static_cast<float>(cloud.points[i].x()), static_cast<float>(cloud.points[i].y()),
                          static_cast<float>(cloud.points[i].z())};
    out.write(reinterpret_cast<const char*>(xyz), sizeof xyz);
    if (cloud.has_colors()) out.write(reinterpret_cast<const char*>(&cloud.colors[3 * i]), 3);
  }
  if (!out) throw InputError("failed writing PLY: " + path.string());
}

// ---------------------------------------------------------------------------
// embeddings

std::vector<Embedding> read_embeddings(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open embeddings: " + path.string());
  char magic[4];
  std::uint32_t header[2];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in || std::memcmp(magic, "EMB1", 4) != 0) {
    throw InputError(path.string() + ": bad embedding header (expected EMB1)");
  }
  const std::uint32_t count = header[0], dim = header[1];
  std::vector<Embedding> out(count, Embedding(dim));
  for (auto& e : out) {
    in.read(reinterpret_cast<char*>(e.data()), static_cast<std::streamsize>(dim * sizeof(float)));
  }
  if (!in) throw InputError(path.string() + ": truncated embedding file");
  return out;
}

void write_embeddings(const fs::path& path, std::span<const Embedding> embeddings) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write embeddings: " + path.string());
  const std::uint32_t dim = embeddings.empty() ? 0 : static_cast<std::uint32_t>(embeddings[0].size());
  const std::uint32_t header[2] = {static_cast<std::uint32_t>(embeddings.size()), dim};
  out.write("EMB1", 4);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  for (const auto& e : embeddings) {
    if (e.size() != dim) throw InputError("embeddings have mixed dimensions");
    out.write(reinterpret_cast<const char*>(e.data()), static_cast<std::streamsize>(dim * sizeof(float)));
  }
  if (!out) throw InputError("failed writing embeddings: " + path.string());
}

// ---------------------------------------------------------------------------
// vocabulary

Vocabulary resolve_vocabulary(const VocabularyRecord& record, const fs::path& base_dir) {
  Vocabulary v;
  v.classes = record.classes;
  v.prompt_template = record.prompt_template;
  if (v.classes.empty()) throw InputError("vocabulary: needs at least one class");
  if (!record.embeddings.empty()) {
    const fs::path p = resolve(base_dir, record.embeddings);
    v.text_embeddings = read_embeddings(p);
    if (v.text_embeddings.size() != v.classes.size()) {
      throw InputError(p.string() + ": " + std::to_string(v.text_embeddings.size()) +
                       " embeddings for " + std::to_string(v.classes.size()) + " classes");
    }
    if (record.dim > 0 && v.dim() != static_cast<std::size_t>(record.dim)) {
      throw InputError(p.string() + ": embedding dim " + std::to_string(v.dim()) +
                       " does not match declared dim " + std::to_string(record.dim));
    }
    for (std::size_t i = 0; i < v.text_embeddings.size(); ++i) {
      double n2 = 0.0;
      for (float x : v.text_embeddings[i]) n2 += static_cast<double>(x) * x;
      if (std::abs(std::sqrt(n2) - 1.0) > 1e-3) {
        throw InputError(p.string() + ": embedding of class '" + v.classes[i] + "' is not unit norm");
      }
    }
  }
  return v;
}

Vocabulary load_vocabulary(const fs::path& path) {
  const json root = parse_json_file(path);
  VocabularyRecord vr;
  vr.classes = get_as<std::vector<std::string>>(require(root, "classes", path, ""), path, "classes");
  if (root.contains("embeddings") && !root["embeddings"].is_null()) {
    vr.embeddings = get_as<std::string>(root["embeddings"], path, "embeddings");
  }
  if (root.contains("dim")) vr.dim = get_as<int>(root["dim"], path, "dim");
  if (root.contains("prompt_template")) {
    vr.prompt_template = get_as<std::string>(root["prompt_template"], path, "prompt_template");
  }
  return resolve_vocabulary(vr, path.parent_path());
}

// ---------------------------------------------------------------------------
// detections

namespace {

std::string detection_object(const Detection& d, const std::string* scene_id) {
  check_finite_detection(d);
  std::string s = "{\"center\":" + format_vec(d.box.center) + ",\"label\":" + json(d.label).dump();
  if (scene_id) s += ",\"scene_id\":" + json(*scene_id).dump();
  s += ",\"score\":" + format_real(d.score) + ",\"size\":" + format_vec(d.box.size) + "}";
  return s;
}

std::string detection_array(std::span<const Detection> detections, const std::string* scene_id) {
  if (detections.empty()) return "[]\n";
  std::string s = "[\n";
  for (std::size_t i = 0; i < detections.size(); ++i) {
    s += "  " + detection_object(detections[i], scene_id);
    s += i + 1 < detections.size() ? ",\n" : "\n";
  }
  return s + "]\n";
}

}  // namespace

std::string detections_to_json(std::span<const Detection> detections) {
  return detection_array(detections, nullptr);
}

void write_detections(const fs::path& path, std::span<const Detection> detections) {
  write_text_file(path, detections_to_json(detections));
}

void write_pseudo_labels(const fs::path& path, std::span<const Box3D> boxes, const std::string& scene_id) {
  std::vector<Detection> dets;
  dets.reserve(boxes.size());
  for (const auto& b : boxes) dets.push_back({b, "object", 1.0});
  write_text_file(path, detection_array(dets, &scene_id));
}

std::vector<Detection> parse_detections(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(origin + ": invalid JSON: " + e.what());
  }
  const fs::path f(origin);
  if (!root.is_array()) schema_error(f, "<root>", "expected array of detections");
  std::vector<Detection> out;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& jd = root[i];
    const std::string ctx = "[" + std::to_string(i) + "].";
    const auto c = get_as<std::vector<double>>(require(jd, "center", f, ctx), f, ctx + "center");
    const auto s = get_as<std::vector<double>>(require(jd, "size", f, ctx), f, ctx + "size");
    if (c.size() != 3) schema_error(f, ctx + "center", "expected 3 reals");
    if (s.size() != 3) schema_error(f, ctx + "size", "expected 3 reals");
    Detection d;
    d.box.center = Vec3(c[0], c[1], c[2]);
    d.box.size = Vec3(s[0], s[1], s[2]);
    d.label = jd.contains("label") ? get_as<std::string>(jd["label"], f, ctx + "label") : "object";
    d.score = jd.contains("score") ? get_as<double>(jd["score"], f, ctx + "score") : 1.0;
    if (!d.box.center.allFinite() || !d.box.size.allFinite() || !std::isfinite(d.score)) {
      schema_error(f, ctx, "non-finite value");
    }
    if ((d.box.size.array() < 0.0).any()) schema_error(f, ctx + "size", "negative extent");
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Detection> read_detections(const fs::path& path) {
  return parse_detections(read_text_file(path), path.string());
}

}  // namespace vcdet

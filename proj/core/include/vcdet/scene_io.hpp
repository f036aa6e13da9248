#pragma once

#include "vcdet/rle.hpp"
#include "vcdet/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vcdet {

constexpr int kManifestVersion = 1;
constexpr std::size_t kDefaultPointCap = 100000;

struct FrameRecord {
  int id = 0;
  std::string depth;
  std::string image;
  std::array<double, 16> pose{};  ///< world-to-camera, row-major
  Intrinsics intrinsics;
  int width = 0;
  int height = 0;
};

struct VocabularyRecord {
  std::vector<std::string> classes;
  std::string embeddings;  ///< EMB1 file; empty means "ask the provider"
  int dim = 0;
  std::string prompt_template = "a photo of {}";
};

struct SceneManifest {
  int version = kManifestVersion;
  std::string scene_id;
  std::vector<FrameRecord> frames;
  std::string point_cloud;
  std::string masks;
  std::optional<VocabularyRecord> vocabulary;
};

struct InstanceMask2D {
  int frame_id = 0;
  int mask_id = 0;
  RleMask rle;

  MaskKey key() const { return {frame_id, mask_id}; }
  bool operator==(const InstanceMask2D&) const = default;
};

/// Everything the detector needs for one scene. Built once by load_scene and
/// never mutated afterwards; share it by const reference.
struct Scene {
  std::string id;
  std::vector<CameraFrame> frames;
  PointCloud cloud;
  std::vector<InstanceMask2D> masks;  ///< sorted by (frame_id, mask_id)
  std::optional<Vocabulary> vocabulary;
  std::uint64_t sample_seed = 0;
  std::size_t source_point_count = 0;

  const CameraFrame& frame(int frame_id) const;
  std::size_t frame_index(int frame_id) const;
  bool operator==(const Scene&) const = default;
};

struct LoadOptions {
  std::size_t point_cap = kDefaultPointCap;
  std::uint64_t seed = 0;
  /// Keep at most this many frames, picked with a uniform stride. 0 keeps all.
  std::size_t max_frames = 0;
};

SceneManifest parse_manifest(const std::filesystem::path& manifest_path);
Scene load_scene(const std::filesystem::path& manifest_path, const LoadOptions& options = {});

/// Writes manifest.json plus depth/, cloud.ply, masks.json (and vocab.emb when
/// the vocabulary carries embeddings) under `dir`. Returns the manifest path.
std::filesystem::path write_scene(const Scene& scene, const std::filesystem::path& dir);

/// Uniformly strided frame indices: floor(i * n / count) for i < count.
std::vector<std::size_t> uniform_frame_indices(std::size_t n, std::size_t count);

// Masks file: JSON array of {frame_id, mask_id, size:[H,W], counts:[...]}.
std::vector<InstanceMask2D> read_masks(const std::filesystem::path& path);
void write_masks(const std::filesystem::path& path, std::span<const InstanceMask2D> masks);

// Point clouds: binary little-endian PLY, float x,y,z (+ uchar red,green,blue).
PointCloud read_ply(const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);

// Embeddings: "EMB1", u32 count, u32 dim, count*dim float32 little-endian.
std::vector<Embedding> read_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path, std::span<const Embedding> embeddings);

/// Loads a vocabulary record (JSON file with the VocabularyRecord fields).
/// Embeddings are read when the record names a file; relative paths resolve
/// against the record's directory.
Vocabulary load_vocabulary(const std::filesystem::path& path);
Vocabulary resolve_vocabulary(const VocabularyRecord& record, const std::filesystem::path& base_dir);

/// Canonical detections JSON: array of {center, label, score, size}, keys
/// sorted, reals printed with 6 decimals.
std::string detections_to_json(std::span<const Detection> detections);
void write_detections(const std::filesystem::path& path, std::span<const Detection> detections);
std::vector<Detection> read_detections(const std::filesystem::path& path);
std::vector<Detection> parse_detections(const std::string& text, const std::string& origin = "<string>");

/// Class-agnostic boxes in the detections schema (label "object", score 1)
/// with an extra scene_id key on every entry.
void write_pseudo_labels(const std::filesystem::path& path, std::span<const Box3D> boxes,
                         const std::string& scene_id);

/// Writes `text` to `path`, creating parent directories. Throws InputError.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace vcdet

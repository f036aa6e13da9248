#include "support/oracles.hpp"

#include <vcdet/error.hpp>
#include <vcdet/image_io.hpp>
#include <vcdet/random.hpp>
#include <vcdet/scene_io.hpp>
#include <vcdet/synthetic.hpp>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

using namespace vcdet;
using vcdet::testing::TempDir;
using nlohmann::json;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.objects = {{{Vec3(0, 0, 0.3), Vec3(0.6, 0.6, 0.6)}, "box"}};
  s.num_cameras = 4;
  s.width = 64;
  s.height = 48;
  s.focal = 48;
  s.vocabulary = {"box", "ball"};
  return s;
}

json read_json(const std::filesystem::path& p) { return json::parse(vcdet::testing::slurp(p)); }

void write_json(const std::filesystem::path& p, const json& j) {
  std::ofstream(p) << j.dump(2);
}

std::string load_error(const std::filesystem::path& manifest) {
  try {
    load_scene(manifest);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Png, Depth16RoundTrip) {
  TempDir dir("png");
  GrayImage16 img;
  img.width = 5;
  img.height = 3;
  for (int i = 0; i < 15; ++i) img.pixels.push_back(static_cast<std::uint16_t>(i * 4000 + 7));
  write_png_gray16(dir / "d.png", img);
  const auto back = read_png_gray(dir / "d.png");
  EXPECT_EQ(back.width, 5);
  EXPECT_EQ(back.height, 3);
  EXPECT_EQ(back.pixels, img.pixels);
  const auto meters = depth_from_millimeters(back);
  EXPECT_FLOAT_EQ(meters[1], 4.007f);
  EXPECT_EQ(depth_to_millimeters(meters, 5, 3).pixels, img.pixels);
}

TEST(Png, RejectsNonPng) {
  TempDir dir("png_bad");
  std::ofstream(dir / "x.png") << "not a png";
  EXPECT_THROW(read_png_gray(dir / "x.png"), InputError);
  EXPECT_THROW(read_png_gray(dir / "missing.png"), InputError);
}

TEST(Ply, RoundTripWithColors) {
  TempDir dir("ply");
  PointCloud cloud;
  cloud.points = {Vec3(1, 2, 3), Vec3(-0.5, 0.25, 8)};
  cloud.colors = {1, 2, 3, 250, 251, 252};
  write_ply(dir / "c.ply", cloud);
  EXPECT_EQ(read_ply(dir / "c.ply"), cloud);
}

TEST(Ply, RejectsAscii) {
  TempDir dir("ply_ascii");
  std::ofstream(dir / "a.ply") << "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
                                  "property float z\nend_header\n0 0 0\n";
  EXPECT_THROW(read_ply(dir / "a.ply"), InputError);
}

TEST(Embeddings, RoundTripAndHeaderCheck) {
  TempDir dir("emb");
  const std::vector<Embedding> e{{1, 0, 0}, {0, 0.6f, 0.8f}};
  write_embeddings(dir / "v.emb", e);
  EXPECT_EQ(read_embeddings(dir / "v.emb"), e);
  std::ofstream(dir / "bad.emb") << "EMB2xxxxxxxx";
  EXPECT_THROW(read_embeddings(dir / "bad.emb"), InputError);
}

TEST(Masks, RoundTrip) {
  TempDir dir("masks");
  Bitmap bm(4, 3);
  bm.set(1, 1);
  bm.set(2, 1);
  const std::vector<InstanceMask2D> masks{{0, 0, encode_rle(bm)}, {2, 5, encode_rle(Bitmap(4, 3))}};
  write_masks(dir / "m.json", masks);
  EXPECT_EQ(read_masks(dir / "m.json"), masks);
}

TEST(SceneIo, WriteLoadRoundTrip) {
  TempDir dir("scene_rt");
  const auto syn = render_synthetic(small_spec());
  const auto manifest = write_scene(syn.scene, dir.path());
  LoadOptions opts;
  opts.point_cap = 0;
  Scene loaded = load_scene(manifest, {syn.scene.cloud.size() + 1, 0, 0});
  EXPECT_EQ(loaded.id, syn.scene.id);
  ASSERT_EQ(loaded.frames.size(), syn.scene.frames.size());
  for (std::size_t i = 0; i < loaded.frames.size(); ++i) {
    EXPECT_EQ(loaded.frames[i].depth, syn.scene.frames[i].depth);
    EXPECT_TRUE(loaded.frames[i].world_to_camera.isApprox(syn.scene.frames[i].world_to_camera, 1e-12));
  }
  EXPECT_EQ(loaded.masks, syn.scene.masks);
  EXPECT_EQ(loaded.cloud.points, syn.scene.cloud.points);
}

TEST(SceneIo, MissingManifest) {
  EXPECT_THROW(load_scene("/nonexistent/manifest.json"), InputError);
}

TEST(SceneIo, SchemaErrorsNameTheField) {
  TempDir dir("scene_err");
  const auto manifest = write_scene(render_synthetic(small_spec()).scene, dir.path());
  const json good = read_json(manifest);

  json j = good;
  j["frames"][0].erase("intrinsics");
  write_json(manifest, j);
  EXPECT_NE(load_error(manifest).find("intrinsics"), std::string::npos);

  j = good;
  j["frames"] = json::array();
  write_json(manifest, j);
  EXPECT_NE(load_error(manifest).find("no frames"), std::string::npos);

  j = good;
  j["frames"][1]["id"] = j["frames"][0]["id"];
  write_json(manifest, j);
  EXPECT_NE(load_error(manifest).find("duplicate"), std::string::npos);

  j = good;
  j["frames"][0]["pose"][0] = 2.0;  // not a rotation
  write_json(manifest, j);
  EXPECT_FALSE(load_error(manifest).empty());

  j = good;
  j["version"] = 7;
  write_json(manifest, j);
  EXPECT_NE(load_error(manifest).find("version"), std::string::npos);
}

TEST(SceneIo, MaskOfUnknownFrameRejected) {
  TempDir dir("scene_mask");
  Scene scene = render_synthetic(small_spec()).scene;
  const auto manifest = write_scene(scene, dir.path());
  auto masks = scene.masks;
  masks.push_back({99, 0, masks.front().rle});
  write_masks(dir / "masks.json", masks);
  EXPECT_THROW(load_scene(manifest), InputError);
}

TEST(SceneIo, PointCapSubsampleIsDeterministic) {
  TempDir dir("scene_cap");
  const auto syn = render_synthetic(small_spec());
  const auto manifest = write_scene(syn.scene, dir.path());
  const Scene a = load_scene(manifest, {500, 3, 0});
  const Scene b = load_scene(manifest, {500, 3, 0});
  const Scene c = load_scene(manifest, {500, 4, 0});
  ASSERT_EQ(a.cloud.size(), 500u);
  EXPECT_EQ(a.cloud.points, b.cloud.points);
  EXPECT_NE(a.cloud.points, c.cloud.points);
  EXPECT_EQ(a.source_point_count, syn.scene.cloud.size());
  // A subsample keeps the original relative order.
  std::set<std::tuple<double, double, double>> all;
  for (const auto& p : syn.scene.cloud.points) all.insert({p.x(), p.y(), p.z()});
  for (const auto& p : a.cloud.points) EXPECT_TRUE(all.count({p.x(), p.y(), p.z()}));
}

TEST(SceneIo, FrameSampling) {
  EXPECT_EQ(uniform_frame_indices(10, 4), (std::vector<std::size_t>{0, 2, 5, 7}));
  EXPECT_EQ(uniform_frame_indices(3, 45), (std::vector<std::size_t>{0, 1, 2}));
  TempDir dir("scene_frames");
  const auto manifest = write_scene(render_synthetic(small_spec()).scene, dir.path());
  const Scene s = load_scene(manifest, {kDefaultPointCap, 0, 2});
  ASSERT_EQ(s.frames.size(), 2u);
  EXPECT_EQ(s.frames[0].id, 0);
  EXPECT_EQ(s.frames[1].id, 2);
  for (const auto& m : s.masks) EXPECT_TRUE(m.frame_id == 0 || m.frame_id == 2);
}

TEST(SampleIndices, SortedDistinctInRange) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto idx = sample_indices(1000, 100, seed);
    ASSERT_EQ(idx.size(), 100u);
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 100u);
    EXPECT_LT(idx.back(), 1000u);
  }
  EXPECT_EQ(sample_indices(5, 10, 1).size(), 5u);
}

TEST(Detections, CanonicalJson) {
  const std::vector<Detection> dets{{{Vec3(1, -0.0, 0.5), Vec3(1, 2, 3)}, "chair", 0.25}};
  EXPECT_EQ(detections_to_json(dets),
            "[\n  {\"center\":[1.000000,0.000000,0.500000],\"label\":\"chair\",\"score\":0.250000,"
            "\"size\":[1.000000,2.000000,3.000000]}\n]\n");
  EXPECT_EQ(detections_to_json({}), "[]\n");
  EXPECT_EQ(parse_detections(detections_to_json(dets)), dets);
}

TEST(Detections, RejectsNegativeSize) {
  EXPECT_THROW(parse_detections(R"([{"center":[0,0,0],"size":[1,-1,1],"label":"x","score":1}])"), InputError);
}

TEST(Vocabulary, LoadsEmbeddingsAndChecksNorm) {
  TempDir dir("vocab");
  write_embeddings(dir / "v.emb", std::vector<Embedding>{{1, 0}, {0, 1}});
  write_json(dir / "vocab.json", {{"classes", {"a", "b"}}, {"embeddings", "v.emb"}, {"dim", 2}});
  const Vocabulary v = load_vocabulary(dir / "vocab.json");
  EXPECT_EQ(v.classes, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(v.dim(), 2u);
  write_embeddings(dir / "v.emb", std::vector<Embedding>{{2, 0}, {0, 1}});
  EXPECT_THROW(load_vocabulary(dir / "vocab.json"), InputError);
}

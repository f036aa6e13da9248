#include "support/oracles.hpp"

#include <vcdet/error.hpp>
#include <vcdet/ov_labeler.hpp>
#include <vcdet/provider.hpp>
#include <vcdet/synthetic.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace vcdet;
using vcdet::testing::TempDir;

namespace {

/// Forwards to a FakeProvider and counts calls.
class RecordingProvider : public EmbeddingProvider {
 public:
  FakeProvider inner;
  int hellos = 0, refines = 0, crops = 0, texts = 0;
  std::vector<CropEmbedRequest> crop_log;

  ProviderInfo hello() override {
    ++hellos;
    return inner.hello();
  }
  std::vector<RleMask> segment_frame(const FrameRef& f) override { return inner.segment_frame(f); }
  RleMask refine_mask(const FrameRef& f, const PixelBox& p) override {
    ++refines;
    return inner.refine_mask(f, p);
  }
  Embedding embed_crop(const CropEmbedRequest& r) override {
    ++crops;
    crop_log.push_back(r);
    return inner.embed_crop(r);
  }
  std::vector<Embedding> embed_text(const std::vector<std::string>& p) override {
    ++texts;
    return inner.embed_text(p);
  }
};

struct LabeledScene {
  TempDir dir{"labeler"};
  SyntheticScene syn = render_synthetic(three_cuboid_spec());
  Scene scene;
  Vocabulary vocab;
  LabeledScene() {
    scene = load_scene(write_synthetic(syn, dir.path()));
    vocab = *scene.vocabulary;
  }
};

LabeledScene& fixture() {
  static LabeledScene s;
  return s;
}

Vocabulary unit_vocab(std::vector<Embedding> e) {
  Vocabulary v;
  for (std::size_t i = 0; i < e.size(); ++i) v.classes.push_back("c" + std::to_string(i));
  v.text_embeddings = std::move(e);
  return v;
}

}  // namespace

TEST(Views, TopKByVisibleCount) {
  auto& f = fixture();
  const Box3D chair = f.syn.objects[0].box;
  const auto views = select_top_views(chair, f.scene, 5, kDefaultOcclusionThreshold);
  ASSERT_EQ(views.size(), 5u);
  for (std::size_t i = 1; i < views.size(); ++i) {
    const auto a = views[i - 1].pixels.size(), b = views[i].pixels.size();
    EXPECT_TRUE(a > b || (a == b && views[i - 1].frame_id < views[i].frame_id));
  }
  // Every unselected frame sees no more points than the weakest selected one.
  std::vector<Vec3> cropped;
  for (const auto& p : f.scene.cloud.points) {
    if (((p - chair.center).cwiseAbs() - 0.5 * chair.size).maxCoeff() <= 0) cropped.push_back(p);
  }
  for (const auto& frame : f.scene.frames) {
    const bool chosen = std::any_of(views.begin(), views.end(), [&](const auto& v) { return v.frame_id == frame.id; });
    if (!chosen) EXPECT_LE(oracle::observed_points(cropped, frame, kDefaultOcclusionThreshold).size(), views.back().pixels.size());
  }
  EXPECT_EQ(select_top_views(chair, f.scene, 50, kDefaultOcclusionThreshold).size(), f.scene.frames.size());
  EXPECT_TRUE(select_top_views({Vec3(50, 50, 50), Vec3(1, 1, 1)}, f.scene, 5, kDefaultOcclusionThreshold).empty());
}

TEST(CropBoxes, ScaleAndClamp) {
  EXPECT_EQ(scale_pixel_box({10, 10, 19, 19}, 1.0, 100, 100), (PixelBox{10, 10, 19, 19}));
  // Span 9 about center 14.5 doubled: [5.5, 23.5] widened to whole pixels.
  EXPECT_EQ(scale_pixel_box({10, 10, 19, 19}, 2.0, 100, 100), (PixelBox{5, 5, 24, 24}));
  EXPECT_EQ(scale_pixel_box({0, 0, 9, 9}, 2.0, 12, 12), (PixelBox{0, 0, 11, 11}));
  const PixelSet px{0, {{5, 5}, {8, 6}}};
  const std::vector<double> scales{1.0, 1.5, 2.0};
  const auto reqs = make_crop_requests(px, 20, 20, scales);
  ASSERT_EQ(reqs.size(), 3u);
  EXPECT_EQ(reqs[0].bbox, (PixelBox{5, 5, 8, 6}));
  for (int s = 0; s < 3; ++s) EXPECT_EQ(reqs[s].scale_index, s);
}

TEST(Aggregate, MeanThenNormalize) {
  const std::vector<Embedding> v{{1, 0, 0}, {0, 1, 0}};
  const Embedding m = aggregate_embeddings(v);
  EXPECT_NEAR(m[0], 1 / std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(m[1], 1 / std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(m[2], 0.0, 1e-9);
  EXPECT_THROW(aggregate_embeddings(std::vector<Embedding>{}), InputError);
  EXPECT_THROW(aggregate_embeddings(std::vector<Embedding>{{1, 0}, {-1, 0}}), InputError);
  EXPECT_THROW(aggregate_embeddings(std::vector<Embedding>{{1, 0}, {1, 0, 0}}), InputError);
}

TEST(Classify, ArgmaxSoftmaxAndInvariances) {
  const Vocabulary v = unit_vocab({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  const std::vector<float> q{0.9f, 0.1f, 0.0f};
  const auto c = classify(q, v, 0.01);
  EXPECT_EQ(c.index, 0u);
  EXPECT_EQ(c.label, "c0");
  // Softmax over cosine / T computed by hand.
  const double n = std::sqrt(0.82);
  const double s0 = 0.9 / n, s1 = 0.1 / n, s2 = 0.0;
  const double z = std::exp((s0 - s0) / 0.01) + std::exp((s1 - s0) / 0.01) + std::exp((s2 - s0) / 0.01);
  EXPECT_NEAR(c.confidence, 1.0 / z, 1e-9);

  const std::vector<float> scaled{9.0f, 1.0f, 0.0f};
  EXPECT_NEAR(classify(scaled, v, 0.01).confidence, c.confidence, 1e-6);

  const Vocabulary permuted = unit_vocab({{0, 0, 1}, {1, 0, 0}, {0, 1, 0}});
  EXPECT_EQ(classify(q, permuted, 0.01).index, 1u);

  const std::vector<float> tie{1.0f, 1.0f, 0.0f};
  EXPECT_EQ(classify(tie, v, 0.01).index, 0u);
}

TEST(Labeler, CallCountsPerBox) {
  auto& f = fixture();
  RecordingProvider p;
  Vocabulary vocab = f.vocab;
  resolve_text_embeddings(vocab, p);
  std::vector<Box3D> boxes;
  for (const auto& o : f.syn.objects) boxes.push_back(o.box);
  const auto dets = label_detections(boxes, f.scene, p, vocab, LabelerConfig{});
  EXPECT_EQ(p.refines, 15);  // 5 views per box
  EXPECT_EQ(p.crops, 45);    // x 3 scales
  ASSERT_EQ(dets.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(dets[i].label, f.syn.objects[i].label);
    EXPECT_GT(dets[i].score, 0.5);
    EXPECT_EQ(dets[i].box, boxes[i]);
  }
  for (const auto& r : p.crop_log) {
    EXPECT_GE(r.bbox.xmin, 0);
    EXPECT_GE(r.bbox.ymin, 0);
    EXPECT_LT(r.bbox.xmax, r.frame.width);
    EXPECT_LT(r.bbox.ymax, r.frame.height);
  }
}

TEST(Labeler, InvisibleBoxIsUnknown) {
  auto& f = fixture();
  RecordingProvider p;
  Vocabulary vocab = f.vocab;
  resolve_text_embeddings(vocab, p);
  const std::vector<Box3D> boxes{{Vec3(40, 40, 40), Vec3(1, 1, 1)}};
  const auto dets = label_detections(boxes, f.scene, p, vocab, LabelerConfig{});
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].label, kUnknownLabel);
  EXPECT_EQ(dets[0].score, 0.0);
  EXPECT_EQ(p.refines, 0);
}

TEST(Labeler, DuplicateBoxesSuppressed) {
  auto& f = fixture();
  FakeProvider p;
  Vocabulary vocab = f.vocab;
  resolve_text_embeddings(vocab, p);
  const Box3D b = f.syn.objects[1].box;
  const std::vector<Box3D> boxes{b, {b.center + Vec3(0.01, 0, 0), b.size}};
  EXPECT_EQ(label_detections(boxes, f.scene, p, vocab, LabelerConfig{}).size(), 1u);
  EXPECT_TRUE(label_detections({}, f.scene, p, vocab, LabelerConfig{}).empty());
}

TEST(Labeler, DimensionMismatchIsConfigError) {
  auto& f = fixture();
  FakeProvider p;
  Vocabulary vocab = unit_vocab({{1, 0}, {0, 1}});
  EXPECT_THROW(resolve_text_embeddings(vocab, p), ConfigError);
}

TEST(LabelerConfig, Validation) {
  LabelerConfig c;
  c.k_views = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.scales = {};
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.temperature = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

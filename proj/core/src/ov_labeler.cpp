#include "vcdet/ov_labeler.hpp"

#include "vcdet/error.hpp"
#include "vcdet/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace vcdet {

void LabelerConfig::validate() const {
  if (k_views < 1) throw ConfigError("k_views must be >= 1");
  if (scales.empty()) throw ConfigError("at least one crop scale is required");
  for (double s : scales) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("crop scales must be positive");
  }
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (!(tau_occ > 0.0)) throw ConfigError("tau_occ must be > 0");
  if (!(nms_iou > 0.0 && nms_iou <= 1.0)) throw ConfigError("nms_iou must be in (0, 1]");
}

std::vector<ViewSelection> select_top_views(const Box3D& box, const Scene& scene, std::size_t k, double tau_occ) {
  if (k < 1) throw ConfigError("select_top_views: k must be >= 1");
  const auto inside = crop_point_cloud(scene.cloud.points, box);
  std::vector<Vec3> points;
  points.reserve(inside.size());
  for (auto i : inside) points.push_back(scene.cloud.points[i]);

  std::vector<ViewSelection> views;
  if (points.empty()) return views;
  for (const auto& frame : scene.frames) {
    auto vis = visible_projection(points, frame, tau_occ);
    if (vis.pixels.empty()) continue;
    views.push_back({frame.id, std::move(vis.pixels)});
  }
  std::sort(views.begin(), views.end(), [](const ViewSelection& a, const ViewSelection& b) {
    if (a.pixels.size() != b.pixels.size()) return a.pixels.size() > b.pixels.size();
    return a.frame_id < b.frame_id;
  });
  if (views.size() > k) views.resize(k);
  return views;
}

PixelBox scale_pixel_box(const PixelBox& base, double factor, int width, int height) {
  const double cx = 0.5 * (base.xmin + base.xmax);
  const double cy = 0.5 * (base.ymin + base.ymax);
  const double hw = 0.5 * (base.xmax - base.xmin) * factor;
  const double hh = 0.5 * (base.ymax - base.ymin) * factor;
  PixelBox out;
  out.xmin = std::clamp(static_cast<int>(std::floor(cx - hw)), 0, width - 1);
  out.ymin = std::clamp(static_cast<int>(std::floor(cy - hh)), 0, height - 1);
  out.xmax = std::clamp(static_cast<int>(std::ceil(cx + hw)), 0, width - 1);
  out.ymax = std::clamp(static_cast<int>(std::ceil(cy + hh)), 0, height - 1);
  return out;
}

std::vector<CropRequest> make_crop_requests(const PixelSet& pixels, int width, int height,
                                            std::span<const double> scales) {
  const PixelBox base = bbox2d_from_pixels(pixels);
  std::vector<CropRequest> out;
  out.reserve(scales.size());
  for (std::size_t i = 0; i < scales.size(); ++i) {
    out.push_back({pixels.frame_id, scale_pixel_box(base, scales[i], width, height), static_cast<int>(i)});
  }
  return out;
}

Embedding aggregate_embeddings(std::span<const Embedding> vectors) {
  if (vectors.empty()) throw InputError("aggregate_embeddings: no vectors");
  const std::size_t dim = vectors.front().size();
  std::vector<double> sum(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != dim) throw InputError("aggregate_embeddings: mixed dimensions");
    for (std::size_t i = 0; i < dim; ++i) sum[i] += v[i];
  }
  double n2 = 0.0;
  for (auto& x : sum) {
    x /= static_cast<double>(vectors.size());
    n2 += x * x;
  }
  const double norm = std::sqrt(n2);
  if (!(norm >= 1e-6)) throw InputError("aggregate_embeddings: mean vector vanishes");
  Embedding out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(sum[i] / norm);
  return out;
}

Classification classify(std::span<const float> query, const Vocabulary& vocab, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("classify: temperature must be > 0");
  if (vocab.text_embeddings.empty()) throw ConfigError("classify: vocabulary has no embeddings");
  double qn = 0.0;
  for (float x : query) qn += static_cast<double>(x) * x;
  qn = std::sqrt(qn);
  if (!(qn > 0.0)) throw InputError("classify: zero query vector");

  Classification out;
  out.similarities.reserve(vocab.text_embeddings.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < vocab.text_embeddings.size(); ++c) {
    const auto& e = vocab.text_embeddings[c];
    if (e.size() != query.size()) {
      throw ConfigError("classify: query dim " + std::to_string(query.size()) + " vs vocabulary dim " +
                        std::to_string(e.size()));
    }
    double dot = 0.0, en = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      dot += static_cast<double>(query[i]) * e[i];
      en += static_cast<double>(e[i]) * e[i];
    }
    const double sim = dot / (qn * std::sqrt(en));
    out.similarities.push_back(sim);
    if (sim > best) {
      best = sim;
      out.index = c;
    }
  }
  double denom = 0.0;
  for (double s : out.similarities) denom += std::exp((s - best) / temperature);
  out.confidence = 1.0 / denom;
  out.label = vocab.classes.at(out.index);
  return out;
}

void resolve_text_embeddings(Vocabulary& vocab, EmbeddingProvider& provider) {
  if (vocab.classes.empty()) throw ConfigError("vocabulary has no classes");
  const ProviderInfo info = provider.hello();
  if (vocab.text_embeddings.empty()) {
    std::vector<std::string> prompts;
    for (const auto& c : vocab.classes) prompts.push_back(vocab.prompt_for(c));
    vocab.text_embeddings = provider.embed_text(prompts);
  }
  if (vocab.text_embeddings.size() != vocab.classes.size()) {
    throw ConfigError("vocabulary has " + std::to_string(vocab.text_embeddings.size()) + " embeddings for " +
                      std::to_string(vocab.classes.size()) + " classes");
  }
  if (vocab.dim() != info.dim) {
    throw ConfigError("vocabulary embedding dim " + std::to_string(vocab.dim()) + " differs from provider dim " +
                      std::to_string(info.dim));
  }
}

namespace {

std::optional<PixelBox> bitmap_bounds(const Bitmap& bm) {
  PixelBox b{bm.width, bm.height, -1, -1};
  for (int v = 0; v < bm.height; ++v) {
    for (int u = 0; u < bm.width; ++u) {
      if (!bm.at(u, v)) continue;
      b.xmin = std::min(b.xmin, u);
      b.ymin = std::min(b.ymin, v);
      b.xmax = std::max(b.xmax, u);
      b.ymax = std::max(b.ymax, v);
    }
  }
  if (b.xmax < 0) return std::nullopt;
  return b;
}

}  // namespace

std::vector<Detection> label_detections(std::span<const Box3D> boxes, const Scene& scene,
                                        EmbeddingProvider& provider, const Vocabulary& vocab,
                                        const LabelerConfig& config) {
  config.validate();
  if (boxes.empty()) return {};
  if (vocab.classes.empty() || vocab.text_embeddings.size() != vocab.classes.size()) {
    throw ConfigError("label_detections: vocabulary embeddings are not resolved");
  }
  const ProviderInfo info = provider.hello();
  if (info.dim != vocab.dim()) {
    throw ConfigError("vocabulary embedding dim " + std::to_string(vocab.dim()) + " differs from provider dim " +
                      std::to_string(info.dim));
  }

  std::vector<std::vector<ViewSelection>> views(boxes.size());
  parallel_for(boxes.size(), config.workers, [&](std::size_t i) {
    views[i] = select_top_views(boxes[i], scene, config.k_views, config.tau_occ);
  });

  std::vector<Detection> labeled(boxes.size());
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    labeled[b].box = boxes[b];
    if (views[b].empty()) {
      labeled[b].label = kUnknownLabel;
      labeled[b].score = 0.0;
      continue;
    }
    std::vector<Embedding> crops;
    for (const auto& view : views[b]) {
      const CameraFrame& frame = scene.frame(view.frame_id);
      const FrameRef ref{frame.id, frame.image_path, frame.width, frame.height};
      const PixelBox prompt = bbox2d_from_pixels(view.pixels);
      const RleMask refined = provider.refine_mask(ref, prompt);
      if (refined.width != frame.width || refined.height != frame.height) {
        throw ProviderError("refine_mask returned a " + std::to_string(refined.height) + "x" +
                                std::to_string(refined.width) + " mask for frame " + std::to_string(frame.id),
                            "PROTO");
      }
      Bitmap refined_bits;
      try {
        refined_bits = decode_rle(refined);
      } catch (const InputError& e) {
        throw ProviderError(std::string("refine_mask returned an invalid mask: ") + e.what(), "PROTO");
      }
      const PixelBox base = bitmap_bounds(refined_bits).value_or(prompt);
      for (std::size_t s = 0; s < config.scales.size(); ++s) {
        CropEmbedRequest req{ref, refined, scale_pixel_box(base, config.scales[s], frame.width, frame.height),
                             static_cast<int>(s)};
        Embedding e = provider.embed_crop(req);
        if (e.size() != info.dim) throw ProviderError("embed_crop returned wrong dimension", "PROTO");
        crops.push_back(std::move(e));
      }
    }
    const Classification c = classify(aggregate_embeddings(crops), vocab, config.temperature);
    labeled[b].label = c.label;
    labeled[b].score = c.confidence;
  }

  std::vector<Box3D> bs;
  std::vector<double> scores;
  for (const auto& d : labeled) {
    bs.push_back(d.box);
    scores.push_back(d.score);
  }
  auto kept = nms(bs, scores, config.nms_iou);
  std::sort(kept.begin(), kept.end());
  std::vector<Detection> out;
  out.reserve(kept.size());
  for (auto i : kept) out.push_back(std::move(labeled[i]));
  return out;
}

}  // namespace vcdet

#pragma once

#include "vcdet/box.hpp"
#include "vcdet/camera.hpp"
#include "vcdet/provider.hpp"
#include "vcdet/scene_io.hpp"
#include "vcdet/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace vcdet {

inline const std::string kUnknownLabel = "unknown";

struct LabelerConfig {
  std::size_t k_views = 5;
  std::vector<double> scales{1.0, 1.5, 2.0};
  double temperature = 0.01;
  double tau_occ = kDefaultOcclusionThreshold;
  double nms_iou = kDefaultNmsIou;
  /// Threads for the geometric view selection. Provider calls stay serial.
  std::size_t workers = 1;

  void validate() const;
};

struct ViewSelection {
  int frame_id = 0;
  PixelSet pixels;
};

/// Crops the scene cloud by `box`, runs the occlusion-filtered projection in
/// every frame and keeps the k frames with the most surviving points (ties:
/// lower frame id). Frames with no points are never returned.
std::vector<ViewSelection> select_top_views(const Box3D& box, const Scene& scene, std::size_t k,
                                            double tau_occ);

struct CropRequest {
  int frame_id = 0;
  PixelBox bbox;
  int scale_index = 0;
};

/// Expands `base` about its center by `factor` and clamps to the image.
PixelBox scale_pixel_box(const PixelBox& base, double factor, int width, int height);

/// One request per scale, built from the tight box of `pixels`.
std::vector<CropRequest> make_crop_requests(const PixelSet& pixels, int width, int height,
                                            std::span<const double> scales);

/// Mean of the vectors renormalized to unit length. Throws InputError on an
/// empty list, mixed dimensions or a mean with norm < 1e-6.
Embedding aggregate_embeddings(std::span<const Embedding> vectors);

struct Classification {
  std::size_t index = 0;
  std::string label;
  double confidence = 0.0;
  std::vector<double> similarities;
};

/// Cosine similarity against every class embedding; argmax label (ties: lower
/// index) with softmax(similarity / temperature) confidence.
Classification classify(std::span<const float> query, const Vocabulary& vocab, double temperature);

/// Fills in vocab.text_embeddings from the provider when missing and checks
/// the dimension against the provider. Throws ConfigError on mismatch.
void resolve_text_embeddings(Vocabulary& vocab, EmbeddingProvider& provider);

/// Labels boxes and applies NMS. Boxes without any visible view come out as
/// "unknown" with score 0. Output keeps input box order among survivors.
std::vector<Detection> label_detections(std::span<const Box3D> boxes, const Scene& scene,
                                        EmbeddingProvider& provider, const Vocabulary& vocab,
                                        const LabelerConfig& config);

}  // namespace vcdet

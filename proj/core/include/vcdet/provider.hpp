#pragma once

#include "vcdet/camera.hpp"
#include "vcdet/rle.hpp"
#include "vcdet/types.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace vcdet {

constexpr int kProtocolVersion = 1;

struct ProviderInfo {
  int protocol_version = kProtocolVersion;
  std::size_t dim = 0;
  std::vector<std::string> capabilities;  // subset of segment_frame, refine_mask, embed_crop, embed_text
  bool deterministic = true;

  bool can(const std::string& capability) const;
};

/// The frame an image-side request refers to. Images travel by path.
struct FrameRef {
  int frame_id = 0;
  std::string image;
  int width = 0;
  int height = 0;
};

struct CropEmbedRequest {
  FrameRef frame;
  RleMask mask;  ///< refined mask for the view
  PixelBox bbox;
  int scale_index = 0;
};

/// Segmentation and embedding models behind a narrow interface. Calls are
/// issued serially; implementations must answer identical requests identically
/// within one session when they advertise `deterministic`.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual ProviderInfo hello() = 0;
  virtual std::vector<RleMask> segment_frame(const FrameRef& frame) = 0;
  virtual RleMask refine_mask(const FrameRef& frame, const PixelBox& prompt) = 0;
  virtual Embedding embed_crop(const CropEmbedRequest& request) = 0;
  virtual std::vector<Embedding> embed_text(const std::vector<std::string>& prompts) = 0;
};

/// Model-free provider for tests and CI.
///
///  - embed_text(s): keyed hash of s, expanded to `dim` values and normalized.
///  - refine_mask: the filled prompt box.
///  - embed_crop: keyed hash of (frame_id, bbox, scale_index). When the frame
///    image is a grayscale label PNG and a `labels.json` ({"<value>": "<name>"})
///    sits next to it, the dominant label under the mask instead yields
///    embed_text(prompt(name)) plus a small keyed perturbation, so crops of
///    one object agree with that object's class prompt.
///  - segment_frame: 4-connected components of equal non-zero label values.
class FakeProvider final : public EmbeddingProvider {
 public:
  explicit FakeProvider(std::uint64_t seed = 0, std::size_t dim = 64,
                        std::string prompt_template = "a photo of {}");

  ProviderInfo hello() override;
  std::vector<RleMask> segment_frame(const FrameRef& frame) override;
  RleMask refine_mask(const FrameRef& frame, const PixelBox& prompt) override;
  Embedding embed_crop(const CropEmbedRequest& request) override;
  std::vector<Embedding> embed_text(const std::vector<std::string>& prompts) override;

  /// Unit vector derived from `key`; the building block of every fake embedding.
  Embedding keyed_embedding(const std::string& key) const;

 private:
  std::uint64_t seed_;
  std::size_t dim_;
  std::string prompt_template_;
};

/// Parses "fake[:seed]", "cmd:<argv>" or "tcp:<host>:<port>" and connects.
/// Throws ConfigError on a malformed spec, ProviderError when the connection
/// or handshake fails.
std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec);

}  // namespace vcdet

#include "vcdet/provider.hpp"

#include "vcdet/error.hpp"
#include "vcdet/image_io.hpp"
#include "vcdet/protocol.hpp"
#include "vcdet/random.hpp"
#include "vcdet/scene_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

namespace fs = std::filesystem;

namespace vcdet {

bool ProviderInfo::can(const std::string& capability) const {
  return std::find(capabilities.begin(), capabilities.end(), capability) != capabilities.end();
}

namespace {

constexpr double kCropNoise = 0.05;

std::string crop_key(const CropEmbedRequest& r) {
  return "crop:" + std::to_string(r.frame.frame_id) + ":" + std::to_string(r.bbox.xmin) + "," +
         std::to_string(r.bbox.ymin) + "," + std::to_string(r.bbox.xmax) + "," + std::to_string(r.bbox.ymax) +
         ":" + std::to_string(r.scale_index);
}

Embedding normalized(std::vector<double> v) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  const double inv = 1.0 / std::sqrt(n2);
  Embedding out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] * inv);
  return out;
}

GrayImage16 load_label_image(const FrameRef& frame) {
  if (frame.image.empty()) throw ProviderError("frame " + std::to_string(frame.frame_id) + " has no image", "IMG");
  try {
    return read_png_gray(frame.image);
  } catch (const InputError& e) {
    throw ProviderError(e.what(), "IMG");
  }
}

// labels.json next to a label image: {"<value>": "<class name>"}.
std::map<int, std::string> load_label_names(const fs::path& image) {
  std::map<int, std::string> names;
  const fs::path table = image.parent_path() / "labels.json";
  if (!fs::exists(table)) return names;
  const auto j = nlohmann::json::parse(read_text_file(table), nullptr, false);
  if (!j.is_object()) return names;
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) names[std::stoi(key)] = value.get<std::string>();
  }
  return names;
}

}  // namespace

FakeProvider::FakeProvider(std::uint64_t seed, std::size_t dim, std::string prompt_template)
    : seed_(seed), dim_(dim), prompt_template_(std::move(prompt_template)) {
  if (dim_ == 0) throw ConfigError("fake provider: dim must be > 0");
}

ProviderInfo FakeProvider::hello() {
  return {kProtocolVersion, dim_, {"segment_frame", "refine_mask", "embed_crop", "embed_text"}, true};
}

Embedding FakeProvider::keyed_embedding(const std::string& key) const {
  SplitMix64 rng(fnv1a64(key.data(), key.size(), 0xcbf29ce484222325ULL ^ (seed_ * 0x9e3779b97f4a7c15ULL)));
  std::vector<double> v(dim_);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0) + rng.uniform(-1.0, 1.0);
  return normalized(std::move(v));
}

std::vector<Embedding> FakeProvider::embed_text(const std::vector<std::string>& prompts) {
  if (prompts.empty()) throw ProviderError("embed_text: empty prompt list", "ARG");
  std::vector<Embedding> out;
  out.reserve(prompts.size());
  for (const auto& p : prompts) out.push_back(keyed_embedding("text:" + p));
  return out;
}

RleMask FakeProvider::refine_mask(const FrameRef& frame, const PixelBox& prompt) {
  if (frame.width <= 0 || frame.height <= 0) throw ProviderError("refine_mask: frame size unknown", "ARG");
  const int x0 = std::max(prompt.xmin, 0), y0 = std::max(prompt.ymin, 0);
  const int x1 = std::min(prompt.xmax, frame.width - 1), y1 = std::min(prompt.ymax, frame.height - 1);
  if (prompt.xmax < prompt.xmin || prompt.ymax < prompt.ymin || x0 > x1 || y0 > y1) {
    throw ProviderError("refine_mask: prompt box outside image", "BOX");
  }
  Bitmap bm(frame.width, frame.height);
  for (int v = y0; v <= y1; ++v)
    for (int u = x0; u <= x1; ++u) bm.set(u, v);
  return encode_rle(bm);
}

Embedding FakeProvider::embed_crop(const CropEmbedRequest& request) {
  const Embedding noise = keyed_embedding(crop_key(request));
  if (request.frame.image.empty() || !fs::exists(request.frame.image)) return noise;
  const auto names = load_label_names(request.frame.image);
  if (names.empty()) return noise;

  const GrayImage16 labels = load_label_image(request.frame);
  Bitmap region;
  if (!request.mask.counts.empty() && request.mask.width == labels.width && request.mask.height == labels.height) {
    region = decode_rle(request.mask);
  }
  std::map<int, std::size_t> votes;
  const auto& b = request.bbox;
  for (int v = std::max(0, b.ymin); v <= std::min(b.ymax, labels.height - 1); ++v) {
    for (int u = std::max(0, b.xmin); u <= std::min(b.xmax, labels.width - 1); ++u) {
      if (!region.bits.empty() && !region.at(u, v)) continue;
      const int value = labels.at(u, v);
      if (value != 0) ++votes[value];
    }
  }
  if (votes.empty()) return noise;
  // Highest count, ties to the lower label value.
  const auto best = std::max_element(votes.begin(), votes.end(), [](const auto& a, const auto& b) {
    return a.second < b.second;
  });
  const auto name = names.find(best->first);
  if (name == names.end()) return noise;

  const Embedding base = keyed_embedding("text:" + format_prompt(prompt_template_, name->second));
  std::vector<double> mix(dim_);
  for (std::size_t i = 0; i < dim_; ++i) mix[i] = base[i] + kCropNoise * noise[i];
  return normalized(std::move(mix));
}

std::vector<RleMask> FakeProvider::segment_frame(const FrameRef& frame) {
  const GrayImage16 labels = load_label_image(frame);
  const int w = labels.width, h = labels.height;
  std::vector<int> comp(static_cast<std::size_t>(w) * h, -1);
  std::vector<RleMask> out;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < comp.size(); ++start) {
    const auto value = labels.pixels[start];
    if (value == 0 || comp[start] >= 0) continue;
    const int id = static_cast<int>(out.size());
    Bitmap bm(w, h);
    stack.assign(1, start);
    comp[start] = id;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const int u = static_cast<int>(p % w), v = static_cast<int>(p / w);
      bm.set(u, v);
      const int nu[4] = {u - 1, u + 1, u, u};
      const int nv[4] = {v, v, v - 1, v + 1};
      for (int k = 0; k < 4; ++k) {
        if (nu[k] < 0 || nv[k] < 0 || nu[k] >= w || nv[k] >= h) continue;
        const std::size_t q = static_cast<std::size_t>(nv[k]) * w + nu[k];
        if (comp[q] < 0 && labels.pixels[q] == value) {
          comp[q] = id;
          stack.push_back(q);
        }
      }
    }
    out.push_back(encode_rle(bm));
  }
  return out;
}

std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec) {
  if (spec == "fake" || spec.rfind("fake:", 0) == 0) {
    std::uint64_t seed = 0;
    if (spec.size() > 5) {
      try {
        std::size_t used = 0;
        seed = std::stoull(spec.substr(5), &used);
        if (used != spec.size() - 5) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ConfigError("bad provider spec '" + spec + "': seed must be an unsigned integer");
      }
    }
    return std::make_unique<FakeProvider>(seed);
  }
  if (spec.rfind("cmd:", 0) == 0) {
    const std::string argv = spec.substr(4);
    if (argv.find_first_not_of(" \t") == std::string::npos) throw ConfigError("bad provider spec '" + spec + "': empty command");
    return std::make_unique<RemoteProvider>(std::make_unique<SubprocessTransport>(argv));
  }
  if (spec.rfind("tcp:", 0) == 0) {
    const std::string rest = spec.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0) throw ConfigError("bad provider spec '" + spec + "': expected tcp:<host>:<port>");
    int port = 0;
    try {
      port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad provider spec '" + spec + "': invalid port");
    }
    if (port <= 0 || port > 65535) throw ConfigError("bad provider spec '" + spec + "': invalid port");
    return std::make_unique<RemoteProvider>(std::make_unique<TcpTransport>(rest.substr(0, colon), port));
  }
  throw ConfigError("bad provider spec '" + spec + "': expected fake[:seed], cmd:<argv> or tcp:<host>:<port>");
}

}  // namespace vcdet

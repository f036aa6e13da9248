#include "vcdet/rle.hpp"

#include "vcdet/error.hpp"

#include <numeric>
#include <string>

namespace vcdet {

std::size_t Bitmap::count() const {
  std::size_t n = 0;
  for (auto b : bits) n += b != 0;
  return n;
}

namespace {

void check_run_sum(const RleMask& rle) {
  if (rle.width < 0 || rle.height < 0) throw InputError("rle: negative size");
  const std::uint64_t total =
      std::accumulate(rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
  const std::uint64_t expected = static_cast<std::uint64_t>(rle.width) * rle.height;
  if (total != expected) {
    throw InputError("rle: runs sum to " + std::to_string(total) + ", expected " +
                     std::to_string(expected) + " (" + std::to_string(rle.height) + "x" +
                     std::to_string(rle.width) + ")");
  }
}

}  // namespace

Bitmap decode_rle(const RleMask& rle) {
  check_run_sum(rle);
  Bitmap out(rle.width, rle.height);
  const std::size_t h = static_cast<std::size_t>(rle.height);
  std::size_t pos = 0;
  bool value = false;
  for (auto run : rle.counts) {
    if (value) {
      for (std::size_t i = pos; i < pos + run; ++i) {
        // column-major linear index -> (u, v)
        out.bits[(i % h) * rle.width + i / h] = 1;
      }
    }
    pos += run;
    value = !value;
  }
  return out;
}

RleMask encode_rle(const Bitmap& bitmap) {
  RleMask rle;
  rle.width = bitmap.width;
  rle.height = bitmap.height;
  bool value = false;
  std::uint32_t run = 0;
  for (int u = 0; u < bitmap.width; ++u) {
    for (int v = 0; v < bitmap.height; ++v) {
      if (bitmap.at(u, v) != value) {
        rle.counts.push_back(run);
        run = 0;
        value = !value;
      }
      ++run;
    }
  }
  if (run > 0 || rle.counts.empty()) rle.counts.push_back(run);
  return rle;
}

RleMask canonicalize_rle(const RleMask& rle) {
  check_run_sum(rle);
  RleMask out;
  out.width = rle.width;
  out.height = rle.height;
  // Runs alternate 0/1 starting with 0; fold zero-length interior runs away.
  bool value = false;
  for (auto run : rle.counts) {
    const bool run_value = value;
    value = !value;
    if (run == 0) continue;
    if (out.counts.empty()) {
      if (run_value) out.counts.push_back(0);
      out.counts.push_back(run);
      continue;
    }
    const bool last_value = (out.counts.size() - 1) % 2 == 1;
    if (last_value == run_value) {
      out.counts.back() += run;
    } else {
      out.counts.push_back(run);
    }
  }
  if (out.counts.empty()) out.counts.push_back(0);
  return out;
}

std::size_t rle_area(const RleMask& rle) {
  std::size_t area = 0;
  for (std::size_t i = 1; i < rle.counts.size(); i += 2) area += rle.counts[i];
  return area;
}

}  // namespace vcdet

#pragma once

#include <cstdint>
#include <vector>

namespace vcdet {

/// Binary mask stored row-major (index = v * width + u).
struct Bitmap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  Bitmap() = default;
  Bitmap(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  bool at(int u, int v) const { return bits[static_cast<std::size_t>(v) * width + u] != 0; }
  void set(int u, int v, bool on = true) { bits[static_cast<std::size_t>(v) * width + u] = on ? 1 : 0; }
  std::size_t count() const;
  bool operator==(const Bitmap&) const = default;
};

/// Run-length encoded binary mask. Runs walk the image column by column
/// (column-major) and always begin with a (possibly empty) run of zeros.
struct RleMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;
  bool operator==(const RleMask&) const = default;
};

/// Throws InputError when the runs do not sum to width * height.
Bitmap decode_rle(const RleMask& rle);
/// Canonical encoding: no zero-length runs except a leading zero run.
RleMask encode_rle(const Bitmap& bitmap);
/// Rewrites a valid run list into canonical form (merges runs split by zero-length runs).
RleMask canonicalize_rle(const RleMask& rle);
/// Number of set pixels without materializing the bitmap.
std::size_t rle_area(const RleMask& rle);

}  // namespace vcdet

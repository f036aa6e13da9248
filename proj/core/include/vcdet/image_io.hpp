#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace vcdet {

/// Single-channel image with up to 16 bits per sample, row-major.
struct GrayImage16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;

  std::uint16_t at(int u, int v) const { return pixels[static_cast<std::size_t>(v) * width + u]; }
};

/// Reads an 8- or 16-bit grayscale PNG. Throws InputError on anything else.
GrayImage16 read_png_gray(const std::filesystem::path& path);
/// Writes a 16-bit grayscale PNG.
void write_png_gray16(const std::filesystem::path& path, const GrayImage16& image);

/// Depth PNG (uint16 millimeters, 0 = invalid) to meters.
std::vector<float> depth_from_millimeters(const GrayImage16& image);
GrayImage16 depth_to_millimeters(const std::vector<float>& depth_m, int width, int height);

}  // namespace vcdet

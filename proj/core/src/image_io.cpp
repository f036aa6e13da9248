#include "vcdet/image_io.hpp"

#include "vcdet/error.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

namespace vcdet {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void png_warning_handler(png_structp, png_const_charp) {}

}  // namespace

GrayImage16 read_png_gray(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw InputError("cannot open PNG: " + path.string());

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw InputError("not a PNG file: " + path.string());
  }

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warning_handler);
  if (!png) throw InputError("png: out of memory");
  png_infop info = png_create_info_struct(png);

  // Everything with a destructor lives outside the setjmp region.
  GrayImage16 image;
  std::vector<png_byte> row;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError("corrupt PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const auto color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY || (depth != 8 && depth != 16)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError("expected 8- or 16-bit grayscale PNG: " + path.string());
  }
  image.width = static_cast<int>(png_get_image_width(png, info));
  image.height = static_cast<int>(png_get_image_height(png, info));
  image.pixels.resize(static_cast<std::size_t>(image.width) * image.height);
  row.resize(png_get_rowbytes(png, info));
  for (int v = 0; v < image.height; ++v) {
    png_read_row(png, row.data(), nullptr);
    for (int u = 0; u < image.width; ++u) {
      image.pixels[static_cast<std::size_t>(v) * image.width + u] =
          depth == 16 ? static_cast<std::uint16_t>((row[2 * u] << 8) | row[2 * u + 1]) : row[u];
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

void write_png_gray16(const std::filesystem::path& path, const GrayImage16& image) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw InputError("cannot write PNG: " + path.string());

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warning_handler);
  if (!png) throw InputError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  std::vector<png_byte> row(static_cast<std::size_t>(image.width) * 2);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw InputError("failed writing PNG: " + path.string());
  }

  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int v = 0; v < image.height; ++v) {
    for (int u = 0; u < image.width; ++u) {
      const auto value = image.at(u, v);
      row[2 * u] = static_cast<png_byte>(value >> 8);
      row[2 * u + 1] = static_cast<png_byte>(value & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<float> depth_from_millimeters(const GrayImage16& image) {
  std::vector<float> out(image.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(image.pixels[i]) / 1000.0f;
  return out;
}

GrayImage16 depth_to_millimeters(const std::vector<float>& depth_m, int width, int height) {
  GrayImage16 image;
  image.width = width;
  image.height = height;
  image.pixels.resize(depth_m.size());
  for (std::size_t i = 0; i < depth_m.size(); ++i) {
    const double mm = std::round(static_cast<double>(depth_m[i]) * 1000.0);
    if (!(mm >= 0.0) || mm > 65535.0) {
      throw InputError("depth value out of 16-bit millimeter range: " + std::to_string(depth_m[i]));
    }
    image.pixels[i] = static_cast<std::uint16_t>(mm);
  }
  return image;
}

}  // namespace vcdet

#include "zsc/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "zsc/error.hpp"

namespace zsc {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

uint8_t to_u8(double v) {
  return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_gray8(const std::filesystem::path& path, int h, int w,
                 const std::vector<uint8_t>& pixels) {
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw IoError("save_png: cannot open " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("save_png: libpng failure for " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y) {
    png_write_row(png, const_cast<png_bytep>(pixels.data() + static_cast<size_t>(y) * w));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image load_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw IoError("load_png: cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("load_png: libpng failure for " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);

  // Normalize every input variant to 8-bit RGB.
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  std::vector<uint8_t> row(png_get_rowbytes(png, info));
  Image img(h, w);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    double* dst = img.t.site(y, 0);
    for (int x = 0; x < w * 3; ++x) dst[x] = row[x] / 255.0;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void save_png(const std::filesystem::path& path, const Image& img) {
  const int h = img.height(), w = img.width();
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw IoError("save_png: cannot open " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("save_png: libpng failure for " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    const double* src = img.t.site(y, 0);
    for (int x = 0; x < w * 3; ++x) row[x] = to_u8(src[x]);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void save_png_gray(const std::filesystem::path& path, const Grid& g) {
  std::vector<uint8_t> pixels(g.v.size());
  for (size_t i = 0; i < g.v.size(); ++i) pixels[i] = to_u8(g.v[i]);
  write_gray8(path, g.h, g.w, pixels);
}

void save_png_gray_normalized(const std::filesystem::path& path, const Grid& g) {
  const auto [lo_it, hi_it] = std::minmax_element(g.v.begin(), g.v.end());
  const double lo = *lo_it, hi = *hi_it;
  const double range = hi - lo;
  std::vector<uint8_t> pixels(g.v.size());
  for (size_t i = 0; i < g.v.size(); ++i) {
    pixels[i] = range > 0.0 ? to_u8((g.v[i] - lo) / range) : 0;
  }
  write_gray8(path, g.h, g.w, pixels);
}

void save_png_mask(const std::filesystem::path& path, int h, int w,
                   const std::vector<uint8_t>& mask) {
  std::vector<uint8_t> pixels(mask.size());
  for (size_t i = 0; i < mask.size(); ++i) pixels[i] = mask[i] ? 255 : 0;
  write_gray8(path, h, w, pixels);
}

}  // namespace zsc

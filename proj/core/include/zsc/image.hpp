#pragma once

#include <string>

#include "zsc/tensor.hpp"

namespace zsc {

// Integer pixel rectangle, half-open: [x0, x1) x [y0, y1).
struct Rect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool valid() const { return x1 > x0 && y1 > y0; }
  bool inside(int image_h, int image_w) const {
    return x0 >= 0 && y0 >= 0 && x1 <= image_w && y1 <= image_h && valid();
  }
  bool operator==(const Rect&) const = default;
};

double rect_iou(const Rect& a, const Rect& b);

// RGB image, values in [0, 1], stored channel-last (h, w, 3).
struct Image {
  Tensor3 t;

  Image() = default;
  Image(int h, int w, double fill = 0.0) : t(h, w, 3, fill) {}

  int height() const { return t.h; }
  int width() const { return t.w; }
};

Image crop(const Image& img, const Rect& r);

// Bilinear interpolation with half-pixel-center sampling. This is the single
// resize kernel used everywhere (queries, exemplar patches, density upscale);
// resizing to the same size is exact identity.
Tensor3 resize_bilinear(const Tensor3& src, int out_h, int out_w);
Image resize_bilinear(const Image& img, int out_h, int out_w);
Grid resize_bilinear(const Grid& src, int out_h, int out_w);

// Transpose of resize_bilinear as a linear map: scatters output-side
// gradients back onto the input grid.
Grid resize_bilinear_backward(const Grid& grad_out, int in_h, int in_w);

// Resize preserving aspect ratio: height becomes target_h, width is rounded
// to the nearest positive multiple of `multiple`.
Image resize_to_height(const Image& img, int target_h, int multiple = 1);

// Quantize to the 256 representable 8-bit levels (k/255). Images written to
// PNG survive a save/load round trip bit-exactly once quantized.
void quantize_u8(Image& img);

}  // namespace zsc

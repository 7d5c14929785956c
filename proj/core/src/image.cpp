#include "zsc/image.hpp"

#include <algorithm>
#include <cmath>

#include "zsc/error.hpp"

namespace zsc {

double rect_iou(const Rect& a, const Rect& b) {
  const int ix0 = std::max(a.x0, b.x0);
  const int iy0 = std::max(a.y0, b.y0);
  const int ix1 = std::min(a.x1, b.x1);
  const int iy1 = std::min(a.y1, b.y1);
  const double inter = std::max(0, ix1 - ix0) * static_cast<double>(std::max(0, iy1 - iy0));
  if (inter <= 0.0) return 0.0;
  const double ua = a.width() * static_cast<double>(a.height()) +
                    b.width() * static_cast<double>(b.height()) - inter;
  return inter / ua;
}

Image crop(const Image& img, const Rect& r) {
  if (!r.inside(img.height(), img.width())) {
    throw DimensionError("crop: rect out of image bounds");
  }
  Image out(r.height(), r.width());
  for (int y = 0; y < r.height(); ++y) {
    const double* src = img.t.site(r.y0 + y, r.x0);
    double* dst = out.t.site(y, 0);
    std::copy(src, src + static_cast<size_t>(r.width()) * 3, dst);
  }
  return out;
}

namespace {

struct Tap {
  int lo, hi;
  double w_hi;  // weight of hi; lo gets 1 - w_hi
};

// Half-pixel-center source coordinate for a destination index.
Tap tap_for(int dst, int out_n, int in_n) {
  const double scale = static_cast<double>(in_n) / out_n;
  double s = (dst + 0.5) * scale - 0.5;
  s = std::clamp(s, 0.0, static_cast<double>(in_n - 1));
  const int lo = static_cast<int>(std::floor(s));
  const int hi = std::min(lo + 1, in_n - 1);
  return {lo, hi, s - lo};
}

}  // namespace

Tensor3 resize_bilinear(const Tensor3& src, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw DimensionError("resize_bilinear: empty target");
  if (src.h == out_h && src.w == out_w) return src;
  Tensor3 out(out_h, out_w, src.c);
  std::vector<Tap> xs(out_w);
  for (int x = 0; x < out_w; ++x) xs[x] = tap_for(x, out_w, src.w);
  for (int y = 0; y < out_h; ++y) {
    const Tap ty = tap_for(y, out_h, src.h);
    for (int x = 0; x < out_w; ++x) {
      const Tap& tx = xs[x];
      const double* p00 = src.site(ty.lo, tx.lo);
      const double* p01 = src.site(ty.lo, tx.hi);
      const double* p10 = src.site(ty.hi, tx.lo);
      const double* p11 = src.site(ty.hi, tx.hi);
      const double w00 = (1 - ty.w_hi) * (1 - tx.w_hi);
      const double w01 = (1 - ty.w_hi) * tx.w_hi;
      const double w10 = ty.w_hi * (1 - tx.w_hi);
      const double w11 = ty.w_hi * tx.w_hi;
      double* dst = out.site(y, x);
      for (int ch = 0; ch < src.c; ++ch) {
        dst[ch] = w00 * p00[ch] + w01 * p01[ch] + w10 * p10[ch] + w11 * p11[ch];
      }
    }
  }
  return out;
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
  Image out;
  out.t = resize_bilinear(img.t, out_h, out_w);
  return out;
}

Grid resize_bilinear(const Grid& src, int out_h, int out_w) {
  Tensor3 t(src.h, src.w, 1);
  t.v = src.v;
  Tensor3 r = resize_bilinear(t, out_h, out_w);
  Grid out(out_h, out_w);
  out.v = std::move(r.v);
  return out;
}

Grid resize_bilinear_backward(const Grid& grad_out, int in_h, int in_w) {
  if (grad_out.h == in_h && grad_out.w == in_w) return grad_out;
  Grid gin(in_h, in_w, 0.0);
  std::vector<Tap> xs(grad_out.w);
  for (int x = 0; x < grad_out.w; ++x) xs[x] = tap_for(x, grad_out.w, in_w);
  for (int y = 0; y < grad_out.h; ++y) {
    const Tap ty = tap_for(y, grad_out.h, in_h);
    for (int x = 0; x < grad_out.w; ++x) {
      const Tap& tx = xs[x];
      const double g = grad_out.at(y, x);
      gin.at(ty.lo, tx.lo) += (1 - ty.w_hi) * (1 - tx.w_hi) * g;
      gin.at(ty.lo, tx.hi) += (1 - ty.w_hi) * tx.w_hi * g;
      gin.at(ty.hi, tx.lo) += ty.w_hi * (1 - tx.w_hi) * g;
      gin.at(ty.hi, tx.hi) += ty.w_hi * tx.w_hi * g;
    }
  }
  return gin;
}

Image resize_to_height(const Image& img, int target_h, int multiple) {
  const double aspect = static_cast<double>(img.width()) / img.height();
  int w = static_cast<int>(std::lround(aspect * target_h));
  if (multiple > 1) {
    w = static_cast<int>(std::lround(static_cast<double>(w) / multiple)) * multiple;
  }
  w = std::max(w, multiple > 1 ? multiple : 1);
  return resize_bilinear(img, target_h, w);
}

void quantize_u8(Image& img) {
  for (double& x : img.t.v) {
    const double clamped = std::clamp(x, 0.0, 1.0);
    x = std::round(clamped * 255.0) / 255.0;
  }
}

}  // namespace zsc

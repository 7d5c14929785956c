#include "zsc/nn.hpp"

#include <cmath>

#include "zsc/error.hpp"

namespace zsc {

ParamArray* ParamRegistry::add(std::string name, std::vector<int> shape) {
  size_t n = 1;
  for (int d : shape) n *= static_cast<size_t>(d);
  auto arr = std::make_unique<ParamArray>();
  arr->name = std::move(name);
  arr->shape = std::move(shape);
  arr->w.assign(n, 0.0);
  arr->g.assign(n, 0.0);
  arrays_.push_back(std::move(arr));
  return arrays_.back().get();
}

ParamArray* ParamRegistry::find(const std::string& name) const {
  for (const auto& a : arrays_) {
    if (a->name == name) return a.get();
  }
  return nullptr;
}

void ParamRegistry::zero_grads() {
  for (const auto& a : arrays_) {
    std::fill(a->g.begin(), a->g.end(), 0.0);
  }
}

size_t ParamRegistry::total_params() const {
  size_t n = 0;
  for (const auto& a : arrays_) n += a->size();
  return n;
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(ParamRegistry& reg, const std::string& name, int in_c_, int out_c_,
               int k_, int stride_, int pad_)
    : in_c(in_c_), out_c(out_c_), k(k_), stride(stride_), pad(pad_) {
  w = reg.add(name + ".w", {k, k, in_c, out_c});
  b = reg.add(name + ".b", {out_c});
}

void Conv2d::init_he(Rng& rng) {
  const double std = std::sqrt(2.0 / (static_cast<double>(k) * k * in_c));
  for (double& x : w->w) x = rng.normal(0.0, std);
  std::fill(b->w.begin(), b->w.end(), 0.0);
}

Tensor3 Conv2d::forward(const Tensor3& x) const {
  if (x.c != in_c) throw DimensionError("Conv2d: channel mismatch");
  const int oh = out_dim(x.h), ow = out_dim(x.w);
  Tensor3 out(oh, ow, out_c);
  const double* W = w->w.data();
  std::vector<double> acc(out_c);
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      for (int oc = 0; oc < out_c; ++oc) acc[oc] = b->w[oc];
      const int base_y = oy * stride - pad;
      const int base_x = ox * stride - pad;
      for (int ky = 0; ky < k; ++ky) {
        const int iy = base_y + ky;
        if (iy < 0 || iy >= x.h) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = base_x + kx;
          if (ix < 0 || ix >= x.w) continue;
          const double* xr = x.site(iy, ix);
          const double* wr = W + (static_cast<size_t>(ky) * k + kx) * in_c * out_c;
          for (int ic = 0; ic < in_c; ++ic) {
            const double xv = xr[ic];
            const double* wrow = wr + static_cast<size_t>(ic) * out_c;
            for (int oc = 0; oc < out_c; ++oc) acc[oc] += xv * wrow[oc];
          }
        }
      }
      double* dst = out.site(oy, ox);
      for (int oc = 0; oc < out_c; ++oc) dst[oc] = acc[oc];
    }
  }
  return out;
}

Tensor3 Conv2d::backward(const Tensor3& x, const Tensor3& gy) const {
  const int oh = gy.h, ow = gy.w;
  Tensor3 gx(x.h, x.w, in_c);
  double* GW = w->g.data();
  double* GB = b->g.data();
  const double* W = w->w.data();
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const double* gr = gy.site(oy, ox);
      for (int oc = 0; oc < out_c; ++oc) GB[oc] += gr[oc];
      const int base_y = oy * stride - pad;
      const int base_x = ox * stride - pad;
      for (int ky = 0; ky < k; ++ky) {
        const int iy = base_y + ky;
        if (iy < 0 || iy >= x.h) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = base_x + kx;
          if (ix < 0 || ix >= x.w) continue;
          const double* xr = x.site(iy, ix);
          double* gxr = gx.site(iy, ix);
          const size_t tap = (static_cast<size_t>(ky) * k + kx) * in_c * out_c;
          const double* wr = W + tap;
          double* gwr = GW + tap;
          for (int ic = 0; ic < in_c; ++ic) {
            const double xv = xr[ic];
            const double* wrow = wr + static_cast<size_t>(ic) * out_c;
            double* gwrow = gwr + static_cast<size_t>(ic) * out_c;
            double acc = 0.0;
            for (int oc = 0; oc < out_c; ++oc) {
              acc += wrow[oc] * gr[oc];
              gwrow[oc] += xv * gr[oc];
            }
            gxr[ic] += acc;
          }
        }
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------- TConv2d

TConv2d::TConv2d(ParamRegistry& reg, const std::string& name, int in_c_, int out_c_)
    : in_c(in_c_), out_c(out_c_) {
  w = reg.add(name + ".w", {2, 2, in_c, out_c});
  b = reg.add(name + ".b", {out_c});
}

void TConv2d::init_he(Rng& rng) {
  const double std = std::sqrt(2.0 / static_cast<double>(in_c));
  for (double& x : w->w) x = rng.normal(0.0, std);
  std::fill(b->w.begin(), b->w.end(), 0.0);
}

Tensor3 TConv2d::forward(const Tensor3& x) const {
  if (x.c != in_c) throw DimensionError("TConv2d: channel mismatch");
  Tensor3 out(x.h * 2, x.w * 2, out_c);
  const double* W = w->w.data();
  for (int oy = 0; oy < out.h; ++oy) {
    const int iy = oy >> 1, ky = oy & 1;
    for (int ox = 0; ox < out.w; ++ox) {
      const int ix = ox >> 1, kx = ox & 1;
      const double* xr = x.site(iy, ix);
      const double* wr = W + (static_cast<size_t>(ky) * 2 + kx) * in_c * out_c;
      double* dst = out.site(oy, ox);
      for (int oc = 0; oc < out_c; ++oc) dst[oc] = b->w[oc];
      for (int ic = 0; ic < in_c; ++ic) {
        const double xv = xr[ic];
        const double* wrow = wr + static_cast<size_t>(ic) * out_c;
        for (int oc = 0; oc < out_c; ++oc) dst[oc] += xv * wrow[oc];
      }
    }
  }
  return out;
}

Tensor3 TConv2d::backward(const Tensor3& x, const Tensor3& gy) const {
  Tensor3 gx(x.h, x.w, in_c);
  const double* W = w->w.data();
  double* GW = w->g.data();
  double* GB = b->g.data();
  for (int oy = 0; oy < gy.h; ++oy) {
    const int iy = oy >> 1, ky = oy & 1;
    for (int ox = 0; ox < gy.w; ++ox) {
      const int ix = ox >> 1, kx = ox & 1;
      const double* gr = gy.site(oy, ox);
      for (int oc = 0; oc < out_c; ++oc) GB[oc] += gr[oc];
      const double* xr = x.site(iy, ix);
      double* gxr = gx.site(iy, ix);
      const size_t tap = (static_cast<size_t>(ky) * 2 + kx) * in_c * out_c;
      for (int ic = 0; ic < in_c; ++ic) {
        const double xv = xr[ic];
        const double* wrow = W + tap + static_cast<size_t>(ic) * out_c;
        double* gwrow = GW + tap + static_cast<size_t>(ic) * out_c;
        double acc = 0.0;
        for (int oc = 0; oc < out_c; ++oc) {
          acc += wrow[oc] * gr[oc];
          gwrow[oc] += xv * gr[oc];
        }
        gxr[ic] += acc;
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(ParamRegistry& reg, const std::string& name, int in_, int out_)
    : in(in_), out(out_) {
  w = reg.add(name + ".w", {in, out});
  b = reg.add(name + ".b", {out});
}

void Linear::init_he(Rng& rng) {
  const double std = std::sqrt(2.0 / static_cast<double>(in));
  for (double& x : w->w) x = rng.normal(0.0, std);
  std::fill(b->w.begin(), b->w.end(), 0.0);
}

Vec Linear::forward(const Vec& x) const {
  if (static_cast<int>(x.size()) != in) throw DimensionError("Linear: input size mismatch");
  Vec y(b->w.begin(), b->w.end());
  const double* W = w->w.data();
  for (int i = 0; i < in; ++i) {
    const double xv = x[i];
    const double* wrow = W + static_cast<size_t>(i) * out;
    for (int o = 0; o < out; ++o) y[o] += xv * wrow[o];
  }
  return y;
}

Vec Linear::backward(const Vec& x, const Vec& gy) const {
  Vec gx(in, 0.0);
  const double* W = w->w.data();
  double* GW = w->g.data();
  double* GB = b->g.data();
  for (int o = 0; o < out; ++o) GB[o] += gy[o];
  for (int i = 0; i < in; ++i) {
    const double xv = x[i];
    const double* wrow = W + static_cast<size_t>(i) * out;
    double* gwrow = GW + static_cast<size_t>(i) * out;
    double acc = 0.0;
    for (int o = 0; o < out; ++o) {
      acc += wrow[o] * gy[o];
      gwrow[o] += xv * gy[o];
    }
    gx[i] = acc;
  }
  return gx;
}

// ------------------------------------------------------------ activations

Tensor3 relu(const Tensor3& x) {
  Tensor3 out = x;
  for (double& v : out.v) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor3 relu_backward(const Tensor3& out, const Tensor3& gy) {
  Tensor3 gx = gy;
  for (size_t i = 0; i < gx.v.size(); ++i) {
    if (out.v[i] <= 0.0) gx.v[i] = 0.0;
  }
  return gx;
}

void relu_inplace(Vec& x) {
  for (double& v : x) v = v > 0.0 ? v : 0.0;
}

Vec relu_backward(const Vec& out, const Vec& gy) {
  Vec gx = gy;
  for (size_t i = 0; i < gx.size(); ++i) {
    if (out[i] <= 0.0) gx[i] = 0.0;
  }
  return gx;
}

Vec leaky_relu(const Vec& x, double slope) {
  Vec out = x;
  for (double& v : out) v = v > 0.0 ? v : slope * v;
  return out;
}

Vec leaky_relu_backward(const Vec& out, const Vec& gy, double slope) {
  // out < 0 iff input < 0 for positive slope.
  Vec gx = gy;
  for (size_t i = 0; i < gx.size(); ++i) {
    if (out[i] <= 0.0) gx[i] *= slope;
  }
  return gx;
}

Vec global_average_pool(const Tensor3& x) {
  Vec out(x.c, 0.0);
  const size_t sites = static_cast<size_t>(x.h) * x.w;
  for (size_t s = 0; s < sites; ++s) {
    const double* p = x.v.data() + s * x.c;
    for (int ch = 0; ch < x.c; ++ch) out[ch] += p[ch];
  }
  const double inv = 1.0 / static_cast<double>(sites);
  for (double& v : out) v *= inv;
  return out;
}

Tensor3 global_average_pool_backward(int h, int w, const Vec& gy) {
  Tensor3 gx(h, w, static_cast<int>(gy.size()));
  const double inv = 1.0 / (static_cast<double>(h) * w);
  const size_t sites = static_cast<size_t>(h) * w;
  for (size_t s = 0; s < sites; ++s) {
    double* p = gx.v.data() + s * gx.c;
    for (int ch = 0; ch < gx.c; ++ch) p[ch] = gy[ch] * inv;
  }
  return gx;
}

// ----------------------------------------------------------------- Adam

void Adam::step(ParamRegistry& reg) {
  const auto& arrays = reg.arrays();
  if (state_.size() != arrays.size()) {
    state_.resize(arrays.size());
    for (size_t i = 0; i < arrays.size(); ++i) {
      state_[i].m.assign(arrays[i]->size(), 0.0);
      state_[i].v.assign(arrays[i]->size(), 0.0);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < arrays.size(); ++i) {
    ParamArray& a = *arrays[i];
    Moments& s = state_[i];
    for (size_t j = 0; j < a.size(); ++j) {
      const double g = a.g[j];
      s.m[j] = beta1_ * s.m[j] + (1.0 - beta1_) * g;
      s.v[j] = beta2_ * s.v[j] + (1.0 - beta2_) * g * g;
      const double mhat = s.m[j] / bc1;
      const double vhat = s.v[j] / bc2;
      a.w[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace zsc

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace zsc {

// Rank-3 tensor, channel-last: index (y, x, ch) at (y*w + x)*c + ch.
// Channel-last keeps the innermost convolution loops contiguous.
struct Tensor3 {
  int h = 0, w = 0, c = 0;
  std::vector<double> v;

  Tensor3() = default;
  Tensor3(int h_, int w_, int c_, double fill = 0.0)
      : h(h_), w(w_), c(c_), v(static_cast<size_t>(h_) * w_ * c_, fill) {}

  double& at(int y, int x, int ch) { return v[(static_cast<size_t>(y) * w + x) * c + ch]; }
  double at(int y, int x, int ch) const { return v[(static_cast<size_t>(y) * w + x) * c + ch]; }

  double* site(int y, int x) { return v.data() + (static_cast<size_t>(y) * w + x) * c; }
  const double* site(int y, int x) const { return v.data() + (static_cast<size_t>(y) * w + x) * c; }

  size_t size() const { return v.size(); }
  bool same_shape(const Tensor3& o) const { return h == o.h && w == o.w && c == o.c; }
};

// 2D real field. Used for both similarity maps and density maps.
struct Grid {
  int h = 0, w = 0;
  std::vector<double> v;

  Grid() = default;
  Grid(int h_, int w_, double fill = 0.0)
      : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}

  double& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
  bool same_shape(const Grid& o) const { return h == o.h && w == o.w; }
};

using SimilarityMap = Grid;
using DensityMap = Grid;

// Embedding/feature vectors in the shared selection space.
using Vec = std::vector<double>;

double sum(const Grid& g);
double sum(const Tensor3& t);
double dot(std::span<const double> a, std::span<const double> b);
double l2_distance(std::span<const double> a, std::span<const double> b);
Vec mean_embedding(const std::vector<Vec>& vecs);

}  // namespace zsc

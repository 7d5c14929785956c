#include "zsc/tensor.hpp"

#include <cmath>

#include "zsc/error.hpp"

namespace zsc {

double sum(const Grid& g) {
  double s = 0.0;
  for (double x : g.v) s += x;
  return s;
}

double sum(const Tensor3& t) {
  double s = 0.0;
  for (double x : t.v) s += x;
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("l2_distance: length mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Vec mean_embedding(const std::vector<Vec>& vecs) {
  if (vecs.empty()) throw DimensionError("mean_embedding: empty input");
  Vec m(vecs[0].size(), 0.0);
  for (const Vec& v : vecs) {
    if (v.size() != m.size()) throw DimensionError("mean_embedding: ragged input");
    for (size_t i = 0; i < m.size(); ++i) m[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(vecs.size());
  for (double& x : m) x *= inv;
  return m;
}

}  // namespace zsc

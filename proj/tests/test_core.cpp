#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "zsc/error.hpp"
#include "zsc/image.hpp"
#include "zsc/png_io.hpp"
#include "zsc/rng.hpp"
#include "zsc/stats.hpp"

using namespace zsc;

TEST_CASE("substreams are deterministic and independent") {
  Rng a = substream(42, "alpha");
  Rng b = substream(42, "alpha");
  Rng c = substream(42, "beta");
  CHECK(a.next_u64() == b.next_u64());
  CHECK(substream_seed(42, "alpha") != substream_seed(42, "beta"));
  CHECK(substream_seed(42, "alpha") != substream_seed(43, "alpha"));
  (void)c;
}

TEST_CASE("normal sampler has sane moments") {
  Rng rng(1);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("sample_indices returns sorted distinct indices") {
  Rng rng(9);
  const auto idx = rng.sample_indices(50, 10);
  CHECK(idx.size() == 10);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  for (size_t i = 1; i < idx.size(); ++i) CHECK(idx[i] != idx[i - 1]);
  CHECK(rng.sample_indices(3, 10).size() == 3);
}

TEST_CASE("bilinear resize to the same size is identity") {
  Rng rng(5);
  Tensor3 t(13, 17, 3);
  for (double& v : t.v) v = rng.uniform();
  const Tensor3 r = resize_bilinear(t, 13, 17);
  CHECK(r.v == t.v);
}

TEST_CASE("bilinear resize of a constant image stays constant") {
  Tensor3 t(8, 8, 2, 0.37);
  const Tensor3 r = resize_bilinear(t, 19, 5);
  for (double v : r.v) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("resize backward is the transpose of resize forward") {
  // <A x, y> == <x, A^T y> for the linear interpolation map A.
  Rng rng(11);
  const int in_h = 7, in_w = 9, out_h = 12, out_w = 5;
  Grid x(in_h, in_w), y(out_h, out_w);
  for (double& v : x.v) v = rng.normal();
  for (double& v : y.v) v = rng.normal();
  Tensor3 xt(in_h, in_w, 1);
  xt.v = x.v;
  const Tensor3 ax = resize_bilinear(xt, out_h, out_w);
  double lhs = 0.0;
  for (size_t i = 0; i < ax.v.size(); ++i) lhs += ax.v[i] * y.v[i];
  const Grid aty = resize_bilinear_backward(y, in_h, in_w);
  double rhs = 0.0;
  for (size_t i = 0; i < aty.v.size(); ++i) rhs += aty.v[i] * x.v[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("crop copies the exact pixels") {
  Image img(10, 12);
  Rng rng(3);
  for (double& v : img.t.v) v = rng.uniform();
  const Rect r{2, 3, 7, 9};
  const Image c = crop(img, r);
  CHECK(c.height() == 6);
  CHECK(c.width() == 5);
  CHECK(c.t.at(0, 0, 0) == img.t.at(3, 2, 0));
  CHECK(c.t.at(5, 4, 2) == img.t.at(8, 6, 2));
  CHECK_THROWS_AS(crop(img, Rect{5, 5, 20, 20}), DimensionError);
}

TEST_CASE("png round trip is lossless for quantized images") {
  Image img(21, 33);
  Rng rng(8);
  for (double& v : img.t.v) v = rng.uniform();
  quantize_u8(img);
  const auto dir = zsc::testing::temp_dir("png");
  save_png(dir / "a.png", img);
  const Image back = load_png(dir / "a.png");
  REQUIRE(back.height() == img.height());
  REQUIRE(back.width() == img.width());
  CHECK(back.t.v == img.t.v);
}

TEST_CASE("rect iou") {
  CHECK(rect_iou({0, 0, 10, 10}, {0, 0, 10, 10}) == doctest::Approx(1.0));
  CHECK(rect_iou({0, 0, 10, 10}, {10, 10, 20, 20}) == doctest::Approx(0.0));
  CHECK(rect_iou({0, 0, 10, 10}, {5, 0, 15, 10}) == doctest::Approx(50.0 / 150.0));
}

TEST_CASE("spearman rank correlation") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {40, 30, 20, 10}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 1, 1, 1}, {1, 2, 3, 4}) == doctest::Approx(0.0));
  // Monotone but nonlinear relation still ranks perfectly.
  CHECK(spearman({1, 2, 3, 4, 5}, {1, 8, 27, 64, 125}) == doctest::Approx(1.0));
}

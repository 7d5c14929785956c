#include <doctest.h>

#include "helpers.hpp"
#include "zsc/counter.hpp"
#include "zsc/error.hpp"

using namespace zsc;
using zsc::testing::fd_gradient;
using zsc::testing::random_param_coords;
using zsc::testing::rel_err;

namespace {

FeatureMap random_features(int h, int w, int c, uint64_t seed) {
  FeatureMap fm;
  fm.t = Tensor3(h, w, c);
  fm.image_h = h * Backbone::kStride;
  fm.image_w = w * Backbone::kStride;
  Rng rng(seed);
  for (double& v : fm.t.v) v = rng.normal();
  return fm;
}

// Exhaustive dot-product oracle.
Grid brute_force_similarity(const FeatureMap& fm, const Vec& b) {
  Grid s(fm.t.h, fm.t.w);
  for (int y = 0; y < fm.t.h; ++y) {
    for (int x = 0; x < fm.t.w; ++x) {
      double acc = 0.0;
      for (int c = 0; c < fm.t.c; ++c) acc += fm.t.at(y, x, c) * b[c];
      s.at(y, x) = acc;
    }
  }
  return s;
}

}  // namespace

TEST_CASE("similarity map examples") {
  FeatureMap fm = random_features(3, 4, 2, 1);
  SUBCASE("zero exemplar gives an all-zero map") {
    const Grid s = similarity_map(fm, Vec{0.0, 0.0});
    for (double v : s.v) CHECK(v == 0.0);
  }
  SUBCASE("hand-computed dot product") {
    fm.t.at(0, 0, 0) = 1.0;
    fm.t.at(0, 0, 1) = 2.0;
    const Grid s = similarity_map(fm, Vec{3.0, 4.0});
    CHECK(s.at(0, 0) == doctest::Approx(11.0));
  }
  SUBCASE("constant feature field gives a constant map") {
    FeatureMap cf;
    cf.t = Tensor3(4, 5, 3);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 5; ++x)
        for (int c = 0; c < 3; ++c) cf.t.at(y, x, c) = c + 1.0;
    const Grid s = similarity_map(cf, Vec{0.5, 0.25, -1.0});
    for (double v : s.v) CHECK(v == doctest::Approx(s.v[0]));
  }
  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS(similarity_map(fm, Vec{1.0, 2.0, 3.0}), DimensionError);
  }
}

TEST_CASE("similarity matches brute-force dot products on random tensors") {
  Rng rng(50);
  for (int trial = 0; trial < 50; ++trial) {
    const int h = rng.uniform_int(1, 8), w = rng.uniform_int(1, 8);
    const int d = rng.uniform_int(1, 8);
    FeatureMap fm = random_features(h, w, d, 1000 + trial);
    Vec b(d);
    for (double& v : b) v = rng.normal();
    const Grid fast = similarity_map(fm, b);
    const Grid slow = brute_force_similarity(fm, b);
    for (size_t i = 0; i < fast.v.size(); ++i) CHECK(std::abs(fast.v[i] - slow.v[i]) < 1e-6);
  }
}

TEST_CASE("similarity is linear in the exemplar") {
  FeatureMap fm = random_features(5, 6, 8, 3);
  Rng rng(4);
  Vec b1(8), b2(8);
  for (double& v : b1) v = rng.normal();
  for (double& v : b2) v = rng.normal();
  const double a = 2.75;
  Vec combo(8);
  for (int i = 0; i < 8; ++i) combo[i] = a * b1[i] + b2[i];
  const Grid lhs = similarity_map(fm, combo);
  const Grid s1 = similarity_map(fm, b1);
  const Grid s2 = similarity_map(fm, b2);
  for (size_t i = 0; i < lhs.v.size(); ++i) {
    CHECK(std::abs(lhs.v[i] - (a * s1.v[i] + s2.v[i])) < 1e-6);
  }
}

TEST_CASE("average similarity examples and permutation invariance") {
  Grid g1(2, 2), g2(2, 2);
  g1.at(0, 0) = 1.0;
  g2.at(0, 0) = 3.0;
  SUBCASE("single map is returned unchanged") {
    const Grid avg = average_similarity({g1});
    CHECK(avg.v == g1.v);
  }
  SUBCASE("mean of identical maps is that map") {
    const Grid avg = average_similarity({g2, g2, g2});
    CHECK(avg.v == g2.v);
  }
  SUBCASE("two maps average elementwise") {
    const Grid avg = average_similarity({g1, g2});
    CHECK(avg.at(0, 0) == doctest::Approx(2.0));
  }
  SUBCASE("permutation invariance") {
    Rng rng(6);
    std::vector<Grid> maps;
    for (int i = 0; i < 5; ++i) {
      Grid g(3, 3);
      for (double& v : g.v) v = rng.normal();
      maps.push_back(g);
    }
    const Grid before = average_similarity(maps);
    rng.shuffle(maps);
    const Grid after = average_similarity(maps);
    for (size_t i = 0; i < before.v.size(); ++i) {
      CHECK(before.v[i] == doctest::Approx(after.v[i]).epsilon(1e-12));
    }
  }
  SUBCASE("shape mismatch throws") {
    CHECK_THROWS_AS(average_similarity({g1, Grid(3, 3)}), DimensionError);
    CHECK_THROWS_AS(average_similarity({}), DimensionError);
  }
}

TEST_CASE("count_from_density examples") {
  CHECK(count_from_density(Grid(4, 4, 0.0)) == 0.0);
  Grid g(2, 2);
  g.at(0, 0) = 0.5;
  g.at(0, 1) = 0.5;
  g.at(1, 0) = 1.0;
  g.at(1, 1) = 1.0;
  CHECK(count_from_density(g) == doctest::Approx(3.0));
}

TEST_CASE("counting loss examples and analytic gradient") {
  Grid gt(6, 5);
  Rng rng(8);
  for (double& v : gt.v) v = rng.uniform();
  SUBCASE("zero when equal") { CHECK(counting_loss(gt, gt) == 0.0); }
  SUBCASE("constant offset c gives c^2 * H * W") {
    Grid pred = gt;
    for (double& v : pred.v) v += 0.3;
    CHECK(counting_loss(pred, gt) == doctest::Approx(0.09 * 30).epsilon(1e-9));
  }
  SUBCASE("gradient at a pixel is 2*(pred-gt), by central differences") {
    Grid pred = gt;
    for (double& v : pred.v) v += rng.normal() * 0.1;
    for (int i = 0; i < 5; ++i) {
      const size_t idx = static_cast<size_t>(rng.uniform() * pred.v.size());
      auto loss = [&]() { return counting_loss(pred, gt); };
      const double fd = fd_gradient(&pred.v[idx], loss);
      const double analytic = 2.0 * (pred.v[idx] - gt.v[idx]);
      CHECK(rel_err(analytic, fd) < 1e-4);
    }
  }
  SUBCASE("nonnegative always") {
    Grid pred = gt;
    pred.v[3] += 1.0;
    CHECK(counting_loss(pred, gt) > 0.0);
    CHECK_THROWS_AS(counting_loss(pred, Grid(2, 2)), DimensionError);
  }
}

TEST_CASE("decoder output matches query dims and density is nonnegative") {
  CounterConfig cfg;
  cfg.channels = 16;
  CounterModel model(cfg);
  model.init_weights(99);
  Image img(96, 132);
  Rng rng(15);
  for (double& v : img.t.v) v = rng.uniform();
  quantize_u8(img);

  const Image prepared = model.prepare_query(img);
  const FeatureMap fm = model.features(prepared);
  const Grid s = similarity_map(fm, Vec(16, 0.1));
  const Grid d1 = model.predict_density(fm, s);
  CHECK(d1.h == prepared.height());
  CHECK(d1.w == prepared.width());
  for (double v : d1.v) CHECK(v >= 0.0);
  const Grid d2 = model.predict_density(fm, s);
  CHECK(d1.v == d2.v);  // determinism
}

TEST_CASE("decoder reaches exact non-multiple-of-stride dims via the resize tail") {
  CounterConfig cfg;
  cfg.channels = 16;
  cfg.query_height = 96;
  CounterModel model(cfg);
  model.init_weights(7);
  // Feed features whose source image dims are not multiples of 4.
  Image img(50, 61);
  Rng rng(16);
  for (double& v : img.t.v) v = rng.uniform();
  const FeatureMap fm = extract_image_features(img, model.backbone());
  const Grid s = similarity_map(fm, Vec(16, 0.0));
  const Grid d = model.predict_density(fm, s);
  CHECK(d.h == 50);
  CHECK(d.w == 61);
}

TEST_CASE("count_with_exemplars conserves the density sum exactly") {
  CounterConfig cfg;
  cfg.channels = 16;
  CounterModel model(cfg);
  model.init_weights(123);
  Image img(96, 128);
  Rng rng(17);
  for (double& v : img.t.v) v = rng.uniform();
  quantize_u8(img);
  std::vector<Proposal> exemplars;
  exemplars.push_back({Rect{10, 10, 30, 30}, std::nullopt, ProposalSource::ground_truth});
  exemplars.push_back({Rect{50, 40, 80, 70}, std::nullopt, ProposalSource::ground_truth});
  const auto [count, density] = model.count_with_exemplars(img, exemplars);
  CHECK(count == sum(density));  // exact, not approximate
}

TEST_CASE("full counter gradients match central finite differences") {
  CounterConfig cfg;
  cfg.channels = 8;
  cfg.query_height = 32;
  cfg.exemplar_size = 16;
  CounterModel model(cfg);
  model.init_weights(31337);

  Image img(32, 48);
  Rng rng(18);
  for (double& v : img.t.v) v = rng.uniform();
  quantize_u8(img);
  const std::vector<Rect> rects = {{4, 4, 18, 20}, {20, 10, 40, 28}};
  Grid gt(32, 48);
  for (double& v : gt.v) v = rng.uniform() * 0.05;

  model.params().zero_grads();
  counter_example_loss(model, img, rects, gt, true);

  auto loss = [&]() { return counter_example_loss(model, img, rects, gt, false); };
  Rng coord_rng(19);
  int checked = 0;
  for (const auto& coord : random_param_coords(model.params(), 8, coord_rng)) {
    const double fd = fd_gradient(&coord.array->w[coord.index], loss);
    const double analytic = coord.array->g[coord.index];
    if (std::abs(fd) < 1e-12 && std::abs(analytic) < 1e-12) continue;
    CHECK(rel_err(analytic, fd) < 1e-4);
    ++checked;
  }
  CHECK(checked >= 5);
}

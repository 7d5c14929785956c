#include <doctest.h>

#include "helpers.hpp"
#include "zsc/error.hpp"
#include "zsc/features.hpp"
#include "zsc/png_io.hpp"

using namespace zsc;

namespace {

struct Fixture {
  ParamRegistry reg;
  Backbone backbone{reg, 32};
  ExemplarHead head{reg, 32};
  Fixture() {
    Rng rng(substream_seed(77, "features-test"));
    backbone.init(rng);
    head.init(rng);
  }
};

Image random_image(int h, int w, uint64_t seed) {
  Image img(h, w);
  Rng rng(seed);
  for (double& v : img.t.v) v = rng.uniform();
  quantize_u8(img);
  return img;
}

}  // namespace

TEST_CASE("all-zero image through a zero-weight backbone gives all-zero features") {
  ParamRegistry reg;
  Backbone backbone(reg, 32);  // weights default to zero
  const Image img(32, 32, 0.0);
  const FeatureMap fm = extract_image_features(img, backbone);
  for (double v : fm.t.v) CHECK(v == 0.0);
}

TEST_CASE("feature extraction is deterministic") {
  Fixture f;
  const Image img = random_image(48, 64, 5);
  const FeatureMap a = extract_image_features(img, f.backbone);
  const FeatureMap b = extract_image_features(img, f.backbone);
  CHECK(a.t.v == b.t.v);
}

TEST_CASE("stride-4 backbone maps 64x96 to 16x24") {
  Fixture f;
  const FeatureMap fm = extract_image_features(random_image(64, 96, 6), f.backbone);
  CHECK(fm.t.h == 16);
  CHECK(fm.t.w == 24);
  CHECK(fm.t.c == 32);
  CHECK(fm.image_h == 64);
  CHECK(fm.image_w == 96);
}

TEST_CASE("shape contract: spatial dims are floor(input/stride) over many sizes") {
  Fixture f;
  for (int size : {16, 17, 18, 19, 21, 33, 50, 63, 97, 128, 255, 1024}) {
    const FeatureMap fm = extract_image_features(random_image(size, 16, size), f.backbone);
    CHECK(fm.t.h == size / Backbone::kStride);
    CHECK(fm.t.w == 16 / Backbone::kStride);
  }
}

TEST_CASE("images below the receptive minimum are rejected") {
  Fixture f;
  CHECK_THROWS_AS(extract_image_features(random_image(15, 40, 1), f.backbone),
                  InputTooSmallError);
  CHECK_THROWS_AS(extract_image_features(random_image(40, 15, 1), f.backbone),
                  InputTooSmallError);
}

TEST_CASE("pool_exemplar equals GAP + linear map and is deterministic") {
  Fixture f;
  const Image patch = random_image(32, 32, 9);
  const Vec a = pool_exemplar(patch, f.backbone, f.head, 32);
  const Vec b = pool_exemplar(patch, f.backbone, f.head, 32);
  CHECK(a == b);
  // Identical content at the resize target gives identical embeddings.
  const Vec c = pool_exemplar(resize_bilinear(patch, 32, 32), f.backbone, f.head, 32);
  CHECK(a == c);
  const Vec manual =
      f.head.apply(global_average_pool(f.backbone.forward(patch.t)));
  REQUIRE(a.size() == manual.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(manual[i]).epsilon(1e-12));
}

TEST_CASE("embed_patch: file path and in-memory path agree") {
  Fixture f;
  const PatchEmbedder embedder(f.backbone, 32);
  Image img = random_image(60, 80, 12);
  const Rect r{10, 14, 42, 46};
  const Image patch = crop(img, r);
  const Vec direct = embedder.embed(patch);

  const auto dir = zsc::testing::temp_dir("embed");
  save_png(dir / "patch.png", patch);
  const Vec via_file = embedder.embed(load_png(dir / "patch.png"));
  REQUIRE(direct.size() == via_file.size());
  for (size_t i = 0; i < direct.size(); ++i) {
    CHECK(std::abs(direct[i] - via_file[i]) < 1e-6);
  }
}

TEST_CASE("backbone trace backward matches finite differences") {
  ParamRegistry reg;
  Backbone backbone(reg, 8);
  Rng rng(404);
  backbone.init(rng);
  Image img = random_image(20, 24, 13);

  Backbone::Trace tr;
  const Tensor3 out = backbone.forward_traced(img.t, tr);
  Tensor3 gy(out.h, out.w, out.c);
  for (double& v : gy.v) v = rng.normal();

  reg.zero_grads();
  backbone.backward(tr, gy);

  auto loss = [&]() {
    const Tensor3 y = backbone.forward(img.t);
    double s = 0.0;
    for (size_t i = 0; i < y.v.size(); ++i) s += y.v[i] * gy.v[i];
    return s;
  };
  for (const auto& coord : zsc::testing::random_param_coords(reg, 8, rng)) {
    const double fd = zsc::testing::fd_gradient(&coord.array->w[coord.index], loss);
    CHECK(zsc::testing::rel_err(coord.array->g[coord.index], fd) < 1e-5);
  }
}

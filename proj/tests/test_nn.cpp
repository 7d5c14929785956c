#include <doctest.h>

#include "helpers.hpp"
#include "zsc/nn.hpp"

using namespace zsc;
using zsc::testing::fd_gradient;
using zsc::testing::random_param_coords;
using zsc::testing::rel_err;

namespace {

Tensor3 random_tensor(int h, int w, int c, Rng& rng) {
  Tensor3 t(h, w, c);
  for (double& v : t.v) v = rng.normal();
  return t;
}

// Scalar readout so every layer output contributes to the loss.
double weighted_sum(const Tensor3& t, const Tensor3& weights) {
  double s = 0.0;
  for (size_t i = 0; i < t.v.size(); ++i) s += t.v[i] * weights.v[i];
  return s;
}

}  // namespace

TEST_CASE("conv2d output shapes") {
  ParamRegistry reg;
  Conv2d conv_s2(reg, "a", 3, 8, 2, 2, 0);
  CHECK(conv_s2.out_dim(64) == 32);
  CHECK(conv_s2.out_dim(65) == 32);
  CHECK(conv_s2.out_dim(17) == 8);
  Conv2d conv_s1(reg, "b", 8, 8, 3, 1, 1);
  CHECK(conv_s1.out_dim(24) == 24);
}

TEST_CASE("conv2d gradients match finite differences") {
  ParamRegistry reg;
  Conv2d conv(reg, "conv", 3, 5, 3, 2, 1);
  Rng rng(101);
  conv.init_he(rng);
  const Tensor3 x = random_tensor(9, 11, 3, rng);
  const Tensor3 y0 = conv.forward(x);
  const Tensor3 gy = random_tensor(y0.h, y0.w, y0.c, rng);

  reg.zero_grads();
  const Tensor3 gx = conv.backward(x, gy);

  auto loss = [&]() { return weighted_sum(conv.forward(x), gy); };
  for (const auto& coord : random_param_coords(reg, 6, rng)) {
    const double fd = fd_gradient(&coord.array->w[coord.index], loss);
    CHECK(rel_err(coord.array->g[coord.index], fd) < 1e-6);
  }
  // Input gradient spot checks.
  Tensor3 x_mut = x;
  auto loss_x = [&]() { return weighted_sum(conv.forward(x_mut), gy); };
  for (int i = 0; i < 5; ++i) {
    const size_t idx = static_cast<size_t>(rng.uniform() * x_mut.v.size());
    const double fd = fd_gradient(&x_mut.v[idx], loss_x);
    CHECK(rel_err(gx.v[idx], fd) < 1e-6);
  }
}

TEST_CASE("tconv2d doubles spatial dims and matches finite differences") {
  ParamRegistry reg;
  TConv2d tconv(reg, "tconv", 4, 3);
  Rng rng(202);
  tconv.init_he(rng);
  const Tensor3 x = random_tensor(5, 7, 4, rng);
  const Tensor3 y0 = tconv.forward(x);
  CHECK(y0.h == 10);
  CHECK(y0.w == 14);
  const Tensor3 gy = random_tensor(y0.h, y0.w, y0.c, rng);

  reg.zero_grads();
  const Tensor3 gx = tconv.backward(x, gy);
  auto loss = [&]() { return weighted_sum(tconv.forward(x), gy); };
  for (const auto& coord : random_param_coords(reg, 6, rng)) {
    const double fd = fd_gradient(&coord.array->w[coord.index], loss);
    CHECK(rel_err(coord.array->g[coord.index], fd) < 1e-6);
  }
  Tensor3 x_mut = x;
  auto loss_x = [&]() { return weighted_sum(tconv.forward(x_mut), gy); };
  for (int i = 0; i < 5; ++i) {
    const size_t idx = static_cast<size_t>(rng.uniform() * x_mut.v.size());
    const double fd = fd_gradient(&x_mut.v[idx], loss_x);
    CHECK(rel_err(gx.v[idx], fd) < 1e-6);
  }
}

TEST_CASE("linear gradients match finite differences") {
  ParamRegistry reg;
  Linear lin(reg, "lin", 6, 4);
  Rng rng(303);
  lin.init_he(rng);
  Vec x(6), gy(4);
  for (double& v : x) v = rng.normal();
  for (double& v : gy) v = rng.normal();

  reg.zero_grads();
  const Vec gx = lin.backward(x, gy);
  auto loss = [&]() {
    const Vec y = lin.forward(x);
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) s += y[i] * gy[i];
    return s;
  };
  for (const auto& coord : random_param_coords(reg, 5, rng)) {
    const double fd = fd_gradient(&coord.array->w[coord.index], loss);
    CHECK(rel_err(coord.array->g[coord.index], fd) < 1e-6);
  }
  for (size_t i = 0; i < x.size(); ++i) {
    const double fd = fd_gradient(&x[i], loss);
    CHECK(rel_err(gx[i], fd) < 1e-6);
  }
}

TEST_CASE("global average pool examples") {
  Tensor3 t(2, 2, 1);
  t.at(0, 0, 0) = 1;
  t.at(0, 1, 0) = 2;
  t.at(1, 0, 0) = 3;
  t.at(1, 1, 0) = 4;
  const Vec pooled = global_average_pool(t);
  REQUIRE(pooled.size() == 1);
  CHECK(pooled[0] == doctest::Approx(2.5));

  Tensor3 c(3, 5, 4, 0.7);
  for (double v : global_average_pool(c)) CHECK(v == doctest::Approx(0.7));
}

TEST_CASE("adam descends a quadratic") {
  ParamRegistry reg;
  ParamArray* p = reg.add("p", {4});
  for (double& v : p->w) v = 5.0;
  Adam opt(0.1);
  for (int step = 0; step < 200; ++step) {
    reg.zero_grads();
    for (size_t i = 0; i < p->size(); ++i) p->g[i] = 2.0 * p->w[i];
    opt.step(reg);
  }
  for (double v : p->w) CHECK(std::abs(v) < 0.1);
}

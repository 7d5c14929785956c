#pragma once

#include <memory>
#include <string>
#include <vector>

#include "zsc/rng.hpp"
#include "zsc/tensor.hpp"

namespace zsc {

// Named trainable array. Registered names are the unit of checkpointing,
// so layer names must be stable across construction order changes.
struct ParamArray {
  std::string name;
  std::vector<int> shape;
  std::vector<double> w;
  std::vector<double> g;

  size_t size() const { return w.size(); }
};

class ParamRegistry {
 public:
  ParamArray* add(std::string name, std::vector<int> shape);
  ParamArray* find(const std::string& name) const;
  const std::vector<std::unique_ptr<ParamArray>>& arrays() const { return arrays_; }
  void zero_grads();
  size_t total_params() const;

 private:
  std::vector<std::unique_ptr<ParamArray>> arrays_;
};

// 2D convolution over channel-last tensors. Weight layout (k, k, in_c, out_c)
// keeps the innermost accumulation contiguous in out_c.
struct Conv2d {
  int in_c = 0, out_c = 0, k = 1, stride = 1, pad = 0;
  ParamArray* w = nullptr;
  ParamArray* b = nullptr;

  Conv2d() = default;
  Conv2d(ParamRegistry& reg, const std::string& name, int in_c, int out_c, int k,
         int stride, int pad);
  void init_he(Rng& rng);

  int out_dim(int in) const { return (in + 2 * pad - k) / stride + 1; }
  Tensor3 forward(const Tensor3& x) const;
  // Accumulates dw/db into the registry and returns dx.
  Tensor3 backward(const Tensor3& x, const Tensor3& gy) const;
};

// Transposed convolution, kernel 2 stride 2: exact x2 upsampling, every
// output pixel fed by exactly one input pixel.
struct TConv2d {
  int in_c = 0, out_c = 0;
  ParamArray* w = nullptr;  // (2, 2, in_c, out_c)
  ParamArray* b = nullptr;

  TConv2d() = default;
  TConv2d(ParamRegistry& reg, const std::string& name, int in_c, int out_c);
  void init_he(Rng& rng);

  Tensor3 forward(const Tensor3& x) const;
  Tensor3 backward(const Tensor3& x, const Tensor3& gy) const;
};

struct Linear {
  int in = 0, out = 0;
  ParamArray* w = nullptr;  // (in, out)
  ParamArray* b = nullptr;

  Linear() = default;
  Linear(ParamRegistry& reg, const std::string& name, int in, int out);
  void init_he(Rng& rng);

  Vec forward(const Vec& x) const;
  Vec backward(const Vec& x, const Vec& gy) const;
};

// Activations keep enough in the output to recover the gate, so backward
// takes (output, grad_out).
Tensor3 relu(const Tensor3& x);
Tensor3 relu_backward(const Tensor3& out, const Tensor3& gy);
void relu_inplace(Vec& x);
Vec relu_backward(const Vec& out, const Vec& gy);
Vec leaky_relu(const Vec& x, double slope);
Vec leaky_relu_backward(const Vec& out, const Vec& gy, double slope);

Vec global_average_pool(const Tensor3& x);
Tensor3 global_average_pool_backward(int h, int w, const Vec& gy);

class Adam {
 public:
  explicit Adam(double lr) : lr_(lr) {}
  void step(ParamRegistry& reg);

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<Moments> state_;
};

}  // namespace zsc

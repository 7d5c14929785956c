#pragma once

#include <string>

#include "zsc/image.hpp"
#include "zsc/nn.hpp"

namespace zsc {

// Feature map plus the pixel dims of the image it came from, which the
// density decoder needs to reach full resolution again.
struct FeatureMap {
  Tensor3 t;
  int image_h = 0;
  int image_w = 0;
};

// Four-layer convolutional feature extractor, overall stride 4.
// The stride-2 stages use 2x2 kernels without padding, so spatial dims are
// exactly floor(input / 4) for every input size.
class Backbone {
 public:
  static constexpr int kStride = 4;
  static constexpr int kMinInput = 16;

  Backbone(ParamRegistry& reg, int channels, const std::string& prefix = "backbone");
  void init(Rng& rng);

  int channels() const { return d_; }

  Tensor3 forward(const Tensor3& img) const;

  struct Trace {
    Tensor3 x0, a1, a2, a3, a4;
  };
  Tensor3 forward_traced(const Tensor3& img, Trace& tr) const;
  // Accumulates weight grads; returns grad w.r.t. the input image.
  Tensor3 backward(const Trace& tr, const Tensor3& gy) const;

 private:
  int d_;
  Conv2d c1_, c2_, c3_, c4_;
};

// Throws InputTooSmallError below the backbone's receptive minimum.
FeatureMap extract_image_features(const Image& image, const Backbone& backbone);

// Linear map applied to the globally pooled exemplar features; output
// dimension matches the counter's channel dim.
class ExemplarHead {
 public:
  ExemplarHead(ParamRegistry& reg, int d, const std::string& prefix = "exemplar_head");
  void init(Rng& rng);
  Vec apply(const Vec& pooled) const { return map_.forward(pooled); }
  const Linear& linear() const { return map_; }

 private:
  Linear map_;
};

// Exemplar feature vector for the counter: resize -> backbone -> global
// average pool -> linear map.
Vec pool_exemplar(const Image& patch, const Backbone& backbone, const ExemplarHead& head,
                  int patch_size);

// Frozen embedder defining the shared selection space: resize -> backbone ->
// global average pool. Proposals, pool patches and VAE features all live here.
class PatchEmbedder {
 public:
  PatchEmbedder(const Backbone& backbone, int patch_size)
      : backbone_(&backbone), patch_size_(patch_size) {}

  Vec embed(const Image& patch) const;
  int dim() const { return backbone_->channels(); }
  int patch_size() const { return patch_size_; }
  const Backbone& backbone() const { return *backbone_; }

 private:
  const Backbone* backbone_;
  int patch_size_;
};

enum class PrototypeSource { vae, pool, semantic };
const char* to_string(PrototypeSource s);
PrototypeSource prototype_source_from_string(const std::string& s);

// Mean embedding standing in for a class in the selection space.
struct ClassPrototype {
  Vec embedding;
  PrototypeSource source = PrototypeSource::vae;
  std::string class_name;
  int sample_count = 1;
};

}  // namespace zsc

#include "zsc/features.hpp"

#include "zsc/error.hpp"

namespace zsc {

Backbone::Backbone(ParamRegistry& reg, int channels, const std::string& prefix)
    : d_(channels),
      c1_(reg, prefix + ".c1", 3, channels / 2, 2, 2, 0),
      c2_(reg, prefix + ".c2", channels / 2, channels, 3, 1, 1),
      c3_(reg, prefix + ".c3", channels, channels, 2, 2, 0),
      c4_(reg, prefix + ".c4", channels, channels, 3, 1, 1) {}

void Backbone::init(Rng& rng) {
  c1_.init_he(rng);
  c2_.init_he(rng);
  c3_.init_he(rng);
  c4_.init_he(rng);
}

Tensor3 Backbone::forward(const Tensor3& img) const {
  Tensor3 a = relu(c1_.forward(img));
  a = relu(c2_.forward(a));
  a = relu(c3_.forward(a));
  return relu(c4_.forward(a));
}

Tensor3 Backbone::forward_traced(const Tensor3& img, Trace& tr) const {
  tr.x0 = img;
  tr.a1 = relu(c1_.forward(tr.x0));
  tr.a2 = relu(c2_.forward(tr.a1));
  tr.a3 = relu(c3_.forward(tr.a2));
  tr.a4 = relu(c4_.forward(tr.a3));
  return tr.a4;
}

Tensor3 Backbone::backward(const Trace& tr, const Tensor3& gy) const {
  Tensor3 g = relu_backward(tr.a4, gy);
  g = c4_.backward(tr.a3, g);
  g = relu_backward(tr.a3, g);
  g = c3_.backward(tr.a2, g);
  g = relu_backward(tr.a2, g);
  g = c2_.backward(tr.a1, g);
  g = relu_backward(tr.a1, g);
  return c1_.backward(tr.x0, g);
}

FeatureMap extract_image_features(const Image& image, const Backbone& backbone) {
  if (image.height() < Backbone::kMinInput || image.width() < Backbone::kMinInput) {
    throw InputTooSmallError("features.extract_image_features: image below " +
                             std::to_string(Backbone::kMinInput) + "px minimum");
  }
  FeatureMap fm;
  fm.t = backbone.forward(image.t);
  fm.image_h = image.height();
  fm.image_w = image.width();
  return fm;
}

ExemplarHead::ExemplarHead(ParamRegistry& reg, int d, const std::string& prefix)
    : map_(reg, prefix + ".map", d, d) {}

void ExemplarHead::init(Rng& rng) { map_.init_he(rng); }

Vec pool_exemplar(const Image& patch, const Backbone& backbone, const ExemplarHead& head,
                  int patch_size) {
  const Image resized = resize_bilinear(patch, patch_size, patch_size);
  return head.apply(global_average_pool(backbone.forward(resized.t)));
}

Vec PatchEmbedder::embed(const Image& patch) const {
  const Image resized = resize_bilinear(patch, patch_size_, patch_size_);
  return global_average_pool(backbone_->forward(resized.t));
}

const char* to_string(PrototypeSource s) {
  switch (s) {
    case PrototypeSource::vae: return "vae";
    case PrototypeSource::pool: return "pool";
    case PrototypeSource::semantic: return "semantic";
  }
  return "?";
}

PrototypeSource prototype_source_from_string(const std::string& s) {
  if (s == "vae") return PrototypeSource::vae;
  if (s == "pool") return PrototypeSource::pool;
  if (s == "semantic") return PrototypeSource::semantic;
  throw ConfigError("unknown prototype source: " + s);
}

}  // namespace zsc

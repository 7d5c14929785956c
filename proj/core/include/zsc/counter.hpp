#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <vector>

#include "zsc/features.hpp"
#include "zsc/proposal.hpp"

namespace zsc {

struct DatasetManifest;

struct CounterConfig {
  int channels = 32;      // feature dim d; also the selection-space dim
  int query_height = 96;  // inputs are resized to this height, aspect kept
  int exemplar_size = 32;
  int epochs = 30;
  int batch = 8;
  double lr = 1e-3;
  uint64_t seed = 0;
};

// S[i,j] = <channel vector at (i,j), exemplar>.
Grid similarity_map(const FeatureMap& features, const Vec& exemplar);

// Elementwise mean over equally shaped maps.
Grid average_similarity(const std::vector<Grid>& maps);

// Predicted count: plain sum over the density map.
double count_from_density(const Grid& density);

// Squared L2 between density maps, summed over pixels.
double counting_loss(const Grid& pred, const Grid& gt);

// Upsampling density head: two stride-2 transposed convolutions back to
// pixel resolution, 1x1 head, bilinear fixup for dims that are not a
// multiple of the backbone stride, then a max(0, .) clamp.
class DensityDecoder {
 public:
  DensityDecoder(ParamRegistry& reg, int in_channels, const std::string& prefix = "decoder");
  void init(Rng& rng);

  Grid forward(const Tensor3& x, int out_h, int out_w) const;

  struct Trace {
    Tensor3 x, a1, a2;
    Tensor3 head_out;  // (4h, 4w, 1), pre-resize
    Grid up;           // (out_h, out_w), pre-clamp
    Grid out;
  };
  Grid forward_traced(const Tensor3& x, int out_h, int out_w, Trace& tr) const;
  Tensor3 backward(const Trace& tr, const Grid& gy) const;

  int in_channels() const { return t1_.in_c; }

 private:
  TConv2d t1_, t2_;
  Conv2d head_;
};

Tensor3 concat_channels(const Tensor3& features, const Grid& similarity);

// Exemplar-conditioned density counter: backbone + exemplar head + decoder.
class CounterModel {
 public:
  explicit CounterModel(const CounterConfig& cfg);
  void init_weights(uint64_t seed);

  const CounterConfig& config() const { return cfg_; }
  ParamRegistry& params() { return params_; }
  const ParamRegistry& params() const { return params_; }
  const Backbone& backbone() const { return backbone_; }
  const ExemplarHead& exemplar_head() const { return head_; }
  const DensityDecoder& decoder() const { return decoder_; }

  // Resize to the configured query height; width keeps aspect, rounded to a
  // multiple of the backbone stride.
  Image prepare_query(const Image& img) const;

  FeatureMap features(const Image& prepared) const;
  Vec exemplar_vector(const Image& original, const Rect& rect) const;
  Grid predict_density(const FeatureMap& fm, const Grid& similarity) const;

  // Full pipeline: features -> per-exemplar similarity -> average -> density.
  // The returned count is exactly the sum of the returned map.
  std::pair<double, Grid> count_with_exemplars(const Image& img,
                                               const std::vector<Proposal>& exemplars) const;
  std::pair<double, Grid> count_with_rects(const Image& img,
                                           const std::vector<Rect>& rects) const;

  void save(const std::filesystem::path& path) const;
  static std::unique_ptr<CounterModel> load(const std::filesystem::path& path);

  // Classes seen during training; evaluate() uses this for the zero-shot
  // disjointness guard.
  std::vector<std::string> train_classes;

 private:
  CounterConfig cfg_;
  ParamRegistry params_;
  Backbone backbone_;
  ExemplarHead head_;
  DensityDecoder decoder_;
};

// One training example: forward, squared-L2 loss against gt, and (optionally)
// gradient accumulation into the model registry. Exposed for gradient tests.
double counter_example_loss(CounterModel& model, const Image& image,
                            const std::vector<Rect>& exemplar_rects, const Grid& gt_density,
                            bool with_grads, double grad_scale = 1.0);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_mae = 0.0;
};

std::unique_ptr<CounterModel> train_counter(const DatasetManifest& manifest,
                                            const std::filesystem::path& data_root,
                                            const CounterConfig& cfg, std::ostream* log,
                                            std::vector<EpochLog>* history = nullptr);

}  // namespace zsc

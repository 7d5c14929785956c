#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>

#include "zsc/counter.hpp"
#include "zsc/patch_select.hpp"

namespace zsc {

struct ErrorPredictorConfig {
  int channels = 32;  // must match the counter's feature dim
  int epochs = 12;
  int batch = 32;
  double lr = 1e-3;
  bool normalized = true;  // regress epsilon / gt_count instead of raw epsilon
  int gt_patches = 1;      // per-image training candidates from gt boxes
  int proposal_patches = 7;
  uint64_t seed = 0;
};

// Counting error of a predicted density map against the ground-truth count:
// |sum - gt|, optionally divided by gt.
double counting_error(const Grid& pred_density, double gt_count, bool normalized);

// Regressor from (feature map || similarity map) to the counting error a
// candidate exemplar would induce: three conv layers, global average
// pooling, linear head. Output is left unconstrained so ranking near zero
// stays unbiased.
class ErrorPredictorModel {
 public:
  explicit ErrorPredictorModel(const ErrorPredictorConfig& cfg);
  void init_weights(uint64_t seed);

  const ErrorPredictorConfig& config() const { return cfg_; }
  ParamRegistry& params() { return params_; }
  const ParamRegistry& params() const { return params_; }
  bool normalized() const { return cfg_.normalized; }

  double predict(const Tensor3& features_and_similarity) const;
  // Squared-error training step against the observed counting error.
  double example_loss(const Tensor3& features_and_similarity, double target, bool with_grads,
                      double grad_scale = 1.0);

  void save(const std::filesystem::path& path) const;
  static std::unique_ptr<ErrorPredictorModel> load(const std::filesystem::path& path);

 private:
  ErrorPredictorConfig cfg_;
  ParamRegistry params_;
  Conv2d c1_, c2_, c3_;
  Linear head_;
};

double predict_error(const FeatureMap& features, const Grid& similarity,
                     const ErrorPredictorModel& predictor);

// Ascending by predicted error; ties keep the lower candidate index, which is
// the class-relevance rank when candidates come from class_relevant.
std::vector<int> rank_by_predicted_error(const std::vector<double>& predicted, int s);

// Top-s candidates by predicted counting error.
std::vector<Proposal> select_exemplars(const SelectionResult& candidates, const Image& image,
                                       const CounterModel& counter,
                                       const ErrorPredictorModel& predictor, int s);

// Same selection over a plain proposal list (no class-relevance stage).
std::vector<Proposal> select_exemplars_from(const std::vector<Proposal>& candidates,
                                            const Image& image, const CounterModel& counter,
                                            const ErrorPredictorModel& predictor, int s);

std::unique_ptr<ErrorPredictorModel> train_error_predictor(
    const CounterModel& counter, const DatasetManifest& manifest,
    const std::filesystem::path& data_root, const ErrorPredictorConfig& cfg, std::ostream* log,
    std::vector<double>* loss_history = nullptr);

}  // namespace zsc

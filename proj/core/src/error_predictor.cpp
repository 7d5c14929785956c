#include "zsc/error_predictor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "zsc/checkpoint.hpp"
#include "zsc/dataset.hpp"
#include "zsc/error.hpp"
#include "zsc/png_io.hpp"

namespace zsc {

double counting_error(const Grid& pred_density, double gt_count, bool normalized) {
  const double eps = std::abs(sum(pred_density) - gt_count);
  if (!normalized) return eps;
  if (gt_count <= 0.0) {
    throw DimensionError("error_predictor.counting_error: normalized mode needs gt > 0");
  }
  return eps / gt_count;
}

ErrorPredictorModel::ErrorPredictorModel(const ErrorPredictorConfig& cfg)
    : cfg_(cfg),
      c1_(params_, "errpred.c1", cfg.channels + 1, 32, 3, 1, 1),
      c2_(params_, "errpred.c2", 32, 32, 3, 2, 1),
      c3_(params_, "errpred.c3", 32, 32, 3, 2, 1),
      head_(params_, "errpred.head", 32, 1) {}

void ErrorPredictorModel::init_weights(uint64_t seed) {
  Rng rng = substream(seed, "errpred/init");
  c1_.init_he(rng);
  c2_.init_he(rng);
  c3_.init_he(rng);
  head_.init_he(rng);
}

double ErrorPredictorModel::predict(const Tensor3& x) const {
  Tensor3 a = relu(c1_.forward(x));
  a = relu(c2_.forward(a));
  a = relu(c3_.forward(a));
  const Vec pooled = global_average_pool(a);
  return head_.forward(pooled)[0];
}

double ErrorPredictorModel::example_loss(const Tensor3& x, double target, bool with_grads,
                                         double grad_scale) {
  const Tensor3 a1 = relu(c1_.forward(x));
  const Tensor3 a2 = relu(c2_.forward(a1));
  const Tensor3 a3 = relu(c3_.forward(a2));
  const Vec pooled = global_average_pool(a3);
  const double pred = head_.forward(pooled)[0];
  const double diff = pred - target;
  const double loss = diff * diff;
  if (!with_grads) return loss;

  const Vec g_head = {2.0 * diff * grad_scale};
  Vec g_pooled = head_.backward(pooled, g_head);
  Tensor3 g = global_average_pool_backward(a3.h, a3.w, g_pooled);
  g = relu_backward(a3, g);
  g = c3_.backward(a2, g);
  g = relu_backward(a2, g);
  g = c2_.backward(a1, g);
  g = relu_backward(a1, g);
  c1_.backward(x, g);
  return loss;
}

void ErrorPredictorModel::save(const std::filesystem::path& path) const {
  std::map<std::string, std::string> kv;
  kv["kind"] = "errpred";
  kv["channels"] = std::to_string(cfg_.channels);
  kv["epochs"] = std::to_string(cfg_.epochs);
  kv["batch"] = std::to_string(cfg_.batch);
  kv["lr"] = std::to_string(cfg_.lr);
  kv["normalized"] = cfg_.normalized ? "1" : "0";
  kv["gt_patches"] = std::to_string(cfg_.gt_patches);
  kv["proposal_patches"] = std::to_string(cfg_.proposal_patches);
  kv["seed"] = std::to_string(cfg_.seed);
  save_checkpoint(path, serialize_kv(kv), params_);
}

std::unique_ptr<ErrorPredictorModel> ErrorPredictorModel::load(
    const std::filesystem::path& path) {
  const auto kv = peek_checkpoint_config(path);
  if (kv.find("kind") == kv.end() || kv.at("kind") != "errpred") {
    throw IoError("error_predictor.load: not an errpred checkpoint: " + path.string());
  }
  ErrorPredictorConfig cfg;
  cfg.channels = std::stoi(kv.at("channels"));
  cfg.epochs = std::stoi(kv.at("epochs"));
  cfg.batch = std::stoi(kv.at("batch"));
  cfg.lr = std::stod(kv.at("lr"));
  cfg.normalized = kv.at("normalized") == "1";
  cfg.gt_patches = std::stoi(kv.at("gt_patches"));
  cfg.proposal_patches = std::stoi(kv.at("proposal_patches"));
  cfg.seed = std::stoull(kv.at("seed"));
  auto model = std::make_unique<ErrorPredictorModel>(cfg);
  load_checkpoint(path, model->params());
  return model;
}

double predict_error(const FeatureMap& features, const Grid& similarity,
                     const ErrorPredictorModel& predictor) {
  const double out = predictor.predict(concat_channels(features.t, similarity));
  require_finite(out, "error_predictor.predict_error");
  return out;
}

std::vector<int> rank_by_predicted_error(const std::vector<double>& predicted, int s) {
  std::vector<int> idx(predicted.size());
  for (size_t i = 0; i < predicted.size(); ++i) idx[i] = static_cast<int>(i);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (predicted[a] != predicted[b]) return predicted[a] < predicted[b];
    return a < b;
  });
  idx.resize(std::min<size_t>(idx.size(), static_cast<size_t>(std::max(0, s))));
  return idx;
}

namespace {

std::vector<Proposal> select_by_error(const std::vector<Proposal>& candidates,
                                      const Image& image, const CounterModel& counter,
                                      const ErrorPredictorModel& predictor, int s) {
  if (candidates.empty()) {
    throw NoProposalsError("error_predictor.select_exemplars: no candidates");
  }
  const Image prepared = counter.prepare_query(image);
  const FeatureMap fm = counter.features(prepared);
  std::vector<double> errors;
  errors.reserve(candidates.size());
  for (const Proposal& p : candidates) {
    const Grid s_map = similarity_map(fm, counter.exemplar_vector(image, p.rect));
    errors.push_back(predict_error(fm, s_map, predictor));
  }
  std::vector<Proposal> out;
  for (int i : rank_by_predicted_error(errors, s)) out.push_back(candidates[i]);
  return out;
}

}  // namespace

std::vector<Proposal> select_exemplars(const SelectionResult& candidates, const Image& image,
                                       const CounterModel& counter,
                                       const ErrorPredictorModel& predictor, int s) {
  std::vector<Proposal> list;
  list.reserve(candidates.ranked.size());
  for (const auto& [p, dist] : candidates.ranked) list.push_back(p);
  return select_by_error(list, image, counter, predictor, s);
}

std::vector<Proposal> select_exemplars_from(const std::vector<Proposal>& candidates,
                                            const Image& image, const CounterModel& counter,
                                            const ErrorPredictorModel& predictor, int s) {
  return select_by_error(candidates, image, counter, predictor, s);
}

std::unique_ptr<ErrorPredictorModel> train_error_predictor(
    const CounterModel& counter, const DatasetManifest& manifest,
    const std::filesystem::path& data_root, const ErrorPredictorConfig& cfg, std::ostream* log,
    std::vector<double>* loss_history) {
  if (cfg.channels != counter.config().channels) {
    throw DimensionError("error_predictor.train: channel dim does not match counter");
  }
  const auto train_recs = manifest.split_records("train");
  if (train_recs.empty()) throw MissingArtifactError("error_predictor.train: empty train split");

  // Per image: frozen feature map once, one similarity map per candidate
  // patch, epsilon targets from single-exemplar counting.
  struct TrainSample {
    int image_index;
    Grid similarity;
    double target;
  };
  std::vector<Tensor3> feature_maps;
  std::vector<TrainSample> samples;
  Rng pick_rng = substream(cfg.seed, "errpred/patches");

  for (const ImageRecord* rec : train_recs) {
    const Image image = load_png(data_root / rec->image_path);
    const Image prepared = counter.prepare_query(image);
    const FeatureMap fm = counter.features(prepared);

    SlidingWindowConfig swc;
    swc.seed = substream_seed(cfg.seed, "errpred/proposals/" + rec->id);
    const std::vector<Proposal> proposals =
        propose_sliding_window(image.height(), image.width(), swc);

    std::vector<Rect> candidates;
    for (int i : pick_rng.sample_indices(static_cast<int>(rec->boxes.size()),
                                         std::min<int>(cfg.gt_patches,
                                                       static_cast<int>(rec->boxes.size())))) {
      candidates.push_back(rec->boxes[i]);
    }
    for (int i : pick_rng.sample_indices(static_cast<int>(proposals.size()),
                                         std::min<int>(cfg.proposal_patches,
                                                       static_cast<int>(proposals.size())))) {
      candidates.push_back(proposals[i].rect);
    }

    const int image_index = static_cast<int>(feature_maps.size());
    feature_maps.push_back(fm.t);
    for (const Rect& r : candidates) {
      const Grid s_map = similarity_map(fm, counter.exemplar_vector(image, r));
      const Grid density = counter.predict_density(fm, s_map);
      const double eps = counting_error(density, rec->gt_count, cfg.normalized);
      samples.push_back({image_index, s_map, eps});
    }
  }

  auto model = std::make_unique<ErrorPredictorModel>(cfg);
  model->init_weights(cfg.seed);
  Adam opt(cfg.lr);
  Rng shuffle_rng = substream(cfg.seed, "errpred/shuffle");

  std::vector<size_t> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
      const double scale = 1.0 / static_cast<double>(end - start);
      model->params().zero_grads();
      for (size_t i = start; i < end; ++i) {
        const TrainSample& s = samples[order[i]];
        const Tensor3 x = concat_channels(feature_maps[s.image_index], s.similarity);
        epoch_loss += model->example_loss(x, s.target, true, scale);
      }
      opt.step(model->params());
    }
    epoch_loss /= static_cast<double>(samples.size());
    require_finite(epoch_loss, "error_predictor.train");
    if (log) (*log) << "errpred epoch " << epoch << " loss " << epoch_loss << "\n";
    if (loss_history) loss_history->push_back(epoch_loss);
  }
  return model;
}

}  // namespace zsc

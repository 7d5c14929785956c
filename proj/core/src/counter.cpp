#include "zsc/counter.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "zsc/checkpoint.hpp"
#include "zsc/dataset.hpp"
#include "zsc/error.hpp"
#include "zsc/metrics.hpp"
#include "zsc/png_io.hpp"

namespace zsc {

Grid similarity_map(const FeatureMap& features, const Vec& exemplar) {
  const Tensor3& f = features.t;
  if (static_cast<int>(exemplar.size()) != f.c) {
    throw DimensionError("counter.similarity_map: exemplar dim != feature channels");
  }
  Grid s(f.h, f.w);
  for (int y = 0; y < f.h; ++y) {
    for (int x = 0; x < f.w; ++x) {
      const double* p = f.site(y, x);
      double acc = 0.0;
      for (int c = 0; c < f.c; ++c) acc += p[c] * exemplar[c];
      s.at(y, x) = acc;
    }
  }
  return s;
}

Grid average_similarity(const std::vector<Grid>& maps) {
  if (maps.empty()) throw DimensionError("counter.average_similarity: empty input");
  Grid out = maps[0];
  for (size_t i = 1; i < maps.size(); ++i) {
    if (!maps[i].same_shape(out)) {
      throw DimensionError("counter.average_similarity: shape mismatch");
    }
    for (size_t j = 0; j < out.v.size(); ++j) out.v[j] += maps[i].v[j];
  }
  const double inv = 1.0 / static_cast<double>(maps.size());
  for (double& v : out.v) v *= inv;
  return out;
}

double count_from_density(const Grid& density) { return sum(density); }

double counting_loss(const Grid& pred, const Grid& gt) {
  if (!pred.same_shape(gt)) throw DimensionError("counter.counting_loss: shape mismatch");
  double loss = 0.0;
  for (size_t i = 0; i < pred.v.size(); ++i) {
    const double d = pred.v[i] - gt.v[i];
    loss += d * d;
  }
  return loss;
}

// ---------------------------------------------------------- DensityDecoder

DensityDecoder::DensityDecoder(ParamRegistry& reg, int in_channels, const std::string& prefix)
    : t1_(reg, prefix + ".t1", in_channels, 16),
      t2_(reg, prefix + ".t2", 16, 8),
      head_(reg, prefix + ".head", 8, 1, 1, 1, 0) {}

void DensityDecoder::init(Rng& rng) {
  t1_.init_he(rng);
  t2_.init_he(rng);
  head_.init_he(rng);
}

Grid DensityDecoder::forward(const Tensor3& x, int out_h, int out_w) const {
  Tensor3 a = relu(t1_.forward(x));
  a = relu(t2_.forward(a));
  const Tensor3 head = head_.forward(a);
  Grid up(head.h, head.w);
  up.v = head.v;
  up = resize_bilinear(up, out_h, out_w);
  for (double& v : up.v) v = v > 0.0 ? v : 0.0;
  return up;
}

Grid DensityDecoder::forward_traced(const Tensor3& x, int out_h, int out_w, Trace& tr) const {
  tr.x = x;
  tr.a1 = relu(t1_.forward(tr.x));
  tr.a2 = relu(t2_.forward(tr.a1));
  tr.head_out = head_.forward(tr.a2);
  Grid up(tr.head_out.h, tr.head_out.w);
  up.v = tr.head_out.v;
  tr.up = resize_bilinear(up, out_h, out_w);
  tr.out = tr.up;
  for (double& v : tr.out.v) v = v > 0.0 ? v : 0.0;
  return tr.out;
}

Tensor3 DensityDecoder::backward(const Trace& tr, const Grid& gy) const {
  Grid g = gy;
  for (size_t i = 0; i < g.v.size(); ++i) {
    if (tr.up.v[i] <= 0.0) g.v[i] = 0.0;  // clamp gate
  }
  g = resize_bilinear_backward(g, tr.head_out.h, tr.head_out.w);
  Tensor3 gh(tr.head_out.h, tr.head_out.w, 1);
  gh.v = g.v;
  Tensor3 gt = head_.backward(tr.a2, gh);
  gt = relu_backward(tr.a2, gt);
  gt = t2_.backward(tr.a1, gt);
  gt = relu_backward(tr.a1, gt);
  return t1_.backward(tr.x, gt);
}

Tensor3 concat_channels(const Tensor3& features, const Grid& similarity) {
  if (features.h != similarity.h || features.w != similarity.w) {
    throw DimensionError("counter.concat: feature/similarity shape mismatch");
  }
  Tensor3 out(features.h, features.w, features.c + 1);
  for (int y = 0; y < features.h; ++y) {
    for (int x = 0; x < features.w; ++x) {
      const double* src = features.site(y, x);
      double* dst = out.site(y, x);
      std::copy(src, src + features.c, dst);
      dst[features.c] = similarity.at(y, x);
    }
  }
  return out;
}

// ------------------------------------------------------------ CounterModel

CounterModel::CounterModel(const CounterConfig& cfg)
    : cfg_(cfg),
      backbone_(params_, cfg.channels),
      head_(params_, cfg.channels),
      decoder_(params_, cfg.channels + 1) {}

void CounterModel::init_weights(uint64_t seed) {
  Rng rng = substream(seed, "counter/init");
  backbone_.init(rng);
  head_.init(rng);
  decoder_.init(rng);
}

Image CounterModel::prepare_query(const Image& img) const {
  return resize_to_height(img, cfg_.query_height, Backbone::kStride);
}

FeatureMap CounterModel::features(const Image& prepared) const {
  return extract_image_features(prepared, backbone_);
}

Vec CounterModel::exemplar_vector(const Image& original, const Rect& rect) const {
  return pool_exemplar(crop(original, rect), backbone_, head_, cfg_.exemplar_size);
}

Grid CounterModel::predict_density(const FeatureMap& fm, const Grid& similarity) const {
  return decoder_.forward(concat_channels(fm.t, similarity), fm.image_h, fm.image_w);
}

std::pair<double, Grid> CounterModel::count_with_rects(const Image& img,
                                                       const std::vector<Rect>& rects) const {
  if (rects.empty()) throw DimensionError("counter.count_with_exemplars: no exemplars");
  const Image prepared = prepare_query(img);
  const FeatureMap fm = features(prepared);
  std::vector<Grid> sims;
  sims.reserve(rects.size());
  for (const Rect& r : rects) {
    sims.push_back(similarity_map(fm, exemplar_vector(img, r)));
  }
  const Grid s = average_similarity(sims);
  Grid density = predict_density(fm, s);
  require_all_finite(density.v, "counter.count_with_exemplars");
  const double count = count_from_density(density);
  return {count, std::move(density)};
}

std::pair<double, Grid> CounterModel::count_with_exemplars(
    const Image& img, const std::vector<Proposal>& exemplars) const {
  std::vector<Rect> rects;
  rects.reserve(exemplars.size());
  for (const Proposal& p : exemplars) rects.push_back(p.rect);
  return count_with_rects(img, rects);
}

void CounterModel::save(const std::filesystem::path& path) const {
  std::map<std::string, std::string> kv;
  kv["kind"] = "counter";
  kv["channels"] = std::to_string(cfg_.channels);
  kv["query_height"] = std::to_string(cfg_.query_height);
  kv["exemplar_size"] = std::to_string(cfg_.exemplar_size);
  kv["epochs"] = std::to_string(cfg_.epochs);
  kv["batch"] = std::to_string(cfg_.batch);
  kv["lr"] = std::to_string(cfg_.lr);
  kv["seed"] = std::to_string(cfg_.seed);
  std::string classes;
  for (const std::string& c : train_classes) {
    if (!classes.empty()) classes += ",";
    classes += c;
  }
  kv["train_classes"] = classes;
  save_checkpoint(path, serialize_kv(kv), params_);
}

std::unique_ptr<CounterModel> CounterModel::load(const std::filesystem::path& path) {
  const auto kv = peek_checkpoint_config(path);
  if (kv.find("kind") == kv.end() || kv.at("kind") != "counter") {
    throw IoError("counter.load: not a counter checkpoint: " + path.string());
  }
  CounterConfig cfg;
  cfg.channels = std::stoi(kv.at("channels"));
  cfg.query_height = std::stoi(kv.at("query_height"));
  cfg.exemplar_size = std::stoi(kv.at("exemplar_size"));
  cfg.epochs = std::stoi(kv.at("epochs"));
  cfg.batch = std::stoi(kv.at("batch"));
  cfg.lr = std::stod(kv.at("lr"));
  cfg.seed = std::stoull(kv.at("seed"));
  auto model = std::make_unique<CounterModel>(cfg);
  load_checkpoint(path, model->params_);
  const std::string classes = kv.count("train_classes") ? kv.at("train_classes") : "";
  std::istringstream cs(classes);
  std::string c;
  while (std::getline(cs, c, ',')) {
    if (!c.empty()) model->train_classes.push_back(c);
  }
  return model;
}

// ----------------------------------------------------------- training

double counter_example_loss(CounterModel& model, const Image& image,
                            const std::vector<Rect>& exemplar_rects, const Grid& gt_density,
                            bool with_grads, double grad_scale) {
  const CounterConfig& cfg = model.config();
  const Image prepared = model.prepare_query(image);
  if (gt_density.h != prepared.height() || gt_density.w != prepared.width()) {
    throw DimensionError("counter.train: gt density does not match prepared query dims");
  }

  const Backbone& bb = model.backbone();
  Backbone::Trace query_tr;
  const Tensor3 feats = bb.forward_traced(prepared.t, query_tr);
  FeatureMap fm{feats, prepared.height(), prepared.width()};

  const size_t n_ex = exemplar_rects.size();
  std::vector<Backbone::Trace> patch_tr(n_ex);
  std::vector<Vec> gaps(n_ex);
  std::vector<Vec> exemplars(n_ex);
  std::vector<Grid> sims(n_ex);
  for (size_t i = 0; i < n_ex; ++i) {
    const Image patch =
        resize_bilinear(crop(image, exemplar_rects[i]), cfg.exemplar_size, cfg.exemplar_size);
    const Tensor3 pf = bb.forward_traced(patch.t, patch_tr[i]);
    gaps[i] = global_average_pool(pf);
    exemplars[i] = model.exemplar_head().apply(gaps[i]);
    sims[i] = similarity_map(fm, exemplars[i]);
  }
  const Grid s = average_similarity(sims);

  DensityDecoder::Trace dec_tr;
  const Tensor3 x = concat_channels(feats, s);
  const Grid pred =
      model.decoder().forward_traced(x, prepared.height(), prepared.width(), dec_tr);
  const double loss = counting_loss(pred, gt_density);

  if (!with_grads) return loss;

  Grid g_pred(pred.h, pred.w);
  for (size_t i = 0; i < pred.v.size(); ++i) {
    g_pred.v[i] = 2.0 * (pred.v[i] - gt_density.v[i]) * grad_scale;
  }
  const Tensor3 gx = model.decoder().backward(dec_tr, g_pred);

  // Split concat grad into feature part and similarity part.
  Tensor3 g_feats(feats.h, feats.w, feats.c);
  Grid g_sim(feats.h, feats.w);
  for (int y = 0; y < feats.h; ++y) {
    for (int x2 = 0; x2 < feats.w; ++x2) {
      const double* src = gx.site(y, x2);
      std::copy(src, src + feats.c, g_feats.site(y, x2));
      g_sim.at(y, x2) = src[feats.c];
    }
  }

  // S = (1/n) sum_i S_i with S_i[y,x] = <F[y,x,:], b_i>. Features receive
  // g_sim * mean(b); every exemplar receives the same (1/n) sum g_sim * F.
  Vec b_mean(feats.c, 0.0);
  for (const Vec& b : exemplars) {
    for (int c = 0; c < feats.c; ++c) b_mean[c] += b[c];
  }
  for (double& v : b_mean) v /= static_cast<double>(n_ex);

  Vec g_b_shared(feats.c, 0.0);
  for (int y = 0; y < feats.h; ++y) {
    for (int x2 = 0; x2 < feats.w; ++x2) {
      const double gs = g_sim.at(y, x2);
      const double* f = feats.site(y, x2);
      double* gf = g_feats.site(y, x2);
      for (int c = 0; c < feats.c; ++c) {
        gf[c] += gs * b_mean[c];
        g_b_shared[c] += gs * f[c];
      }
    }
  }
  for (double& v : g_b_shared) v /= static_cast<double>(n_ex);

  bb.backward(query_tr, g_feats);
  for (size_t i = 0; i < n_ex; ++i) {
    const Vec g_gap = model.exemplar_head().linear().backward(gaps[i], g_b_shared);
    const Tensor3 g_pf =
        global_average_pool_backward(patch_tr[i].a4.h, patch_tr[i].a4.w, g_gap);
    bb.backward(patch_tr[i], g_pf);
  }
  return loss;
}

std::unique_ptr<CounterModel> train_counter(const DatasetManifest& manifest,
                                            const std::filesystem::path& data_root,
                                            const CounterConfig& cfg, std::ostream* log,
                                            std::vector<EpochLog>* history) {
  const auto train_recs = manifest.split_records("train");
  if (train_recs.empty()) throw MissingArtifactError("train_counter: empty train split");

  struct Sample {
    Image image;
    Grid density;
    std::vector<Rect> boxes;
  };
  std::vector<Sample> samples;
  samples.reserve(train_recs.size());
  for (const ImageRecord* r : train_recs) {
    Sample s;
    s.image = load_png(data_root / r->image_path);
    s.density = load_density(data_root / r->density_path);
    s.boxes = r->boxes;
    samples.push_back(std::move(s));
  }

  struct ValSample {
    Image image;
    std::vector<Rect> boxes;
    double gt = 0.0;
  };
  std::vector<ValSample> val;
  for (const ImageRecord* r : manifest.split_records("val")) {
    ValSample v;
    v.image = load_png(data_root / r->image_path);
    v.boxes.assign(r->boxes.begin(),
                   r->boxes.begin() + std::min<size_t>(3, r->boxes.size()));
    v.gt = r->gt_count;
    val.push_back(std::move(v));
  }

  auto model = std::make_unique<CounterModel>(cfg);
  model->init_weights(cfg.seed);
  model->train_classes = manifest.classes_of("train");

  Adam opt(cfg.lr);
  Rng shuffle_rng = substream(cfg.seed, "counter/shuffle");
  Rng exemplar_rng = substream(cfg.seed, "counter/exemplars");

  std::vector<size_t> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    size_t seen = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      const size_t end = std::min(order.size(), start + cfg.batch);
      const double scale = 1.0 / static_cast<double>(end - start);
      model->params().zero_grads();
      for (size_t i = start; i < end; ++i) {
        const Sample& s = samples[order[i]];
        const int want = exemplar_rng.uniform_int(1, 3);
        const int n_ex = std::min<int>(want, static_cast<int>(s.boxes.size()));
        std::vector<int> picks = exemplar_rng.sample_indices(
            static_cast<int>(s.boxes.size()), std::max(1, n_ex));
        std::vector<Rect> rects;
        for (int p : picks) rects.push_back(s.boxes[p]);
        epoch_loss +=
            counter_example_loss(*model, s.image, rects, s.density, true, scale);
        ++seen;
      }
      opt.step(model->params());
    }
    epoch_loss /= static_cast<double>(seen);
    require_finite(epoch_loss, "counter.train_counter");

    double val_mae = -1.0;
    if (!val.empty()) {
      std::vector<CountPair> pairs;
      for (const ValSample& v : val) {
        const auto [count, density] = model->count_with_rects(v.image, v.boxes);
        pairs.push_back({v.gt, count});
      }
      val_mae = mae(pairs);
    }
    if (log) {
      (*log) << "counter epoch " << epoch << " train_loss " << epoch_loss << " val_mae "
             << val_mae << "\n";
    }
    if (history) history->push_back({epoch, epoch_loss, val_mae});
  }
  return model;
}

}  // namespace zsc

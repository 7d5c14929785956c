#include "zsc/pipeline.hpp"

#include <algorithm>
#include <set>
#include <thread>

#include "zsc/error.hpp"
#include "zsc/png_io.hpp"

namespace zsc {

namespace {

// Deterministic parallel map: worker w handles indices w, w+workers, ...;
// outputs land in an index-addressed vector.
template <typename Fn>
void parallel_for(size_t n, int workers, Fn&& fn) {
  workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (workers == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&fn, w, workers, n]() {
      for (size_t i = static_cast<size_t>(w); i < n; i += workers) fn(i);
    });
  }
  for (std::thread& t : threads) t.join();
}

std::vector<Proposal> proposals_for(const PipelineContext& ctx, const Image& image,
                                    const std::string& image_key) {
  SlidingWindowConfig swc;
  swc.window_sizes = ctx.cfg.window_sizes;
  swc.max_proposals = ctx.cfg.max_proposals;
  swc.seed = substream_seed(ctx.cfg.seed, "proposals/" + image_key);
  return propose_sliding_window(image.height(), image.width(), swc);
}

std::vector<Rect> to_rects(const std::vector<Proposal>& ps) {
  std::vector<Rect> out;
  out.reserve(ps.size());
  for (const Proposal& p : ps) out.push_back(p.rect);
  return out;
}

std::vector<Proposal> random_subset(const std::vector<Proposal>& ps, int s, Rng& rng) {
  std::vector<Proposal> out;
  for (int i : rng.sample_indices(static_cast<int>(ps.size()),
                                  std::min<int>(s, static_cast<int>(ps.size())))) {
    out.push_back(ps[i]);
  }
  return out;
}

}  // namespace

PipelineContext PipelineContext::load(const PipelineConfig& cfg, bool need_vae,
                                      bool need_predictor) {
  PipelineContext ctx;
  ctx.cfg = cfg;
  ctx.styles = default_class_styles(cfg.classes);
  const std::filesystem::path out(cfg.out_dir);
  ctx.counter = CounterModel::load(out / "counter.ckpt");
  if (need_vae) ctx.vae = CondVae::load(out / "vae.ckpt");
  if (need_predictor) ctx.predictor = ErrorPredictorModel::load(out / "errpred.ckpt");
  return ctx;
}

ClassPrototype make_prototype(const PipelineContext& ctx, const std::string& class_name,
                              PrototypeSource source,
                              const std::vector<Vec>& query_embeddings) {
  const PatchEmbedder embedder = ctx.embedder();
  switch (source) {
    case PrototypeSource::vae: {
      if (!ctx.vae) throw MissingArtifactError("pipeline: vae checkpoint not loaded");
      const ClassStyle& style = style_by_name(ctx.styles, class_name);
      const Vec a = class_semantic_embedding(style, ctx.vae->config().semantic_dim);
      Rng rng = substream(ctx.cfg.seed, "vae/prototype/" + class_name);
      return vae_class_prototype(*ctx.vae, class_name, a,
                                 ctx.vae->config().prototype_samples, rng);
    }
    case PrototypeSource::pool: {
      PoolProviderFn provider;
      if (ctx.cfg.pool_provider == "synthetic") {
        provider = make_synthetic_pool_provider(ctx.styles, embedder, ctx.cfg.pool_size,
                                                ctx.cfg.diversity, ctx.cfg.seed);
      } else if (ctx.cfg.pool_provider == "file") {
        const std::filesystem::path dir(ctx.cfg.pool_dir);
        provider = [dir](const std::string& name) {
          return load_pool_file(dir / (name + ".pool"));
        };
      } else {
        const std::string cmd = ctx.cfg.pool_plugin;
        const std::filesystem::path scratch =
            std::filesystem::path(ctx.cfg.out_dir) / "pool_plugin";
        provider = [cmd, scratch](const std::string& name) {
          return pool_from_plugin(cmd, name, scratch);
        };
      }
      const PatchPool pool = build_pool(class_name, provider, embedder.dim());
      return pool_class_prototype(pool, query_embeddings, ctx.cfg.pool_k);
    }
    case PrototypeSource::semantic: {
      return semantic_prototype_baseline(class_name, [&](const std::string& name) {
        return canonical_class_embedding(style_by_name(ctx.styles, name), embedder);
      });
    }
  }
  throw ConfigError("pipeline: unhandled prototype source");
}

CountResult zero_shot_count(const PipelineContext& ctx, const Image& image,
                            const std::string& class_name) {
  if (!ctx.predictor) throw MissingArtifactError("pipeline: predictor checkpoint not loaded");
  const PatchEmbedder embedder = ctx.embedder();
  const PrototypeSource source = prototype_source_from_string(ctx.cfg.prototype_source);

  CountResult res;
  res.source = source;
  res.proposals = proposals_for(ctx, image, class_name);
  const std::vector<Vec> embeddings = embed_proposals(image, res.proposals, embedder);
  const ClassPrototype prototype = make_prototype(ctx, class_name, source, embeddings);
  const SelectionResult relevant =
      class_relevant(res.proposals, embeddings, prototype, ctx.cfg.select_n);
  res.selected = select_exemplars(relevant, image, *ctx.counter, *ctx.predictor, ctx.cfg.top_s);
  auto [count, density] = ctx.counter->count_with_exemplars(image, res.selected);
  res.count = count;
  res.density = std::move(density);
  return res;
}

std::string arm_label(const ArmSpec& spec) {
  switch (spec.arm) {
    case ExemplarArm::baseline_random:
      return "baseline-random-" + std::to_string(spec.s);
    case ExemplarArm::prototype_only:
      return std::string("prototype-") + to_string(spec.source) + "-N" +
             std::to_string(spec.N) + "-random-" + std::to_string(spec.s);
    case ExemplarArm::predictor_only:
      return "predictor-top" + std::to_string(spec.s);
    case ExemplarArm::full:
      return std::string("full-") + to_string(spec.source) + "-N" + std::to_string(spec.N) +
             "-s" + std::to_string(spec.s);
  }
  return "?";
}

std::vector<EvalRow> evaluate_arms(const PipelineContext& ctx, const DatasetManifest& manifest,
                                   const std::filesystem::path& data_root,
                                   const std::string& split, const std::vector<ArmSpec>& arms,
                                   int workers) {
  // Zero-shot guard: scoring a split that shares classes with the counter's
  // training classes would leak label knowledge.
  if (split != "train") {
    std::set<std::string> train_set(ctx.counter->train_classes.begin(),
                                    ctx.counter->train_classes.end());
    for (const std::string& c : manifest.classes_of(split)) {
      if (train_set.count(c)) {
        throw ConfigError("evaluate: split '" + split + "' shares class '" + c +
                          "' with the counter's training classes");
      }
    }
  }

  const auto records = manifest.split_records(split);
  if (records.empty()) throw MissingArtifactError("evaluate: split '" + split + "' is empty");

  const bool needs_predictor = std::any_of(arms.begin(), arms.end(), [](const ArmSpec& a) {
    return a.arm == ExemplarArm::predictor_only || a.arm == ExemplarArm::full;
  });
  if (needs_predictor && !ctx.predictor) {
    throw MissingArtifactError("evaluate: predictor checkpoint not loaded");
  }

  // Class-level prototypes (vae / semantic) are query-independent; build
  // them once up front so the per-image loop stays read-only.
  std::map<std::pair<std::string, PrototypeSource>, ClassPrototype> class_protos;
  std::map<std::pair<std::string, PrototypeSource>, PatchPool> pools;
  const PatchEmbedder embedder = ctx.embedder();
  for (const ArmSpec& a : arms) {
    if (a.arm == ExemplarArm::baseline_random || a.arm == ExemplarArm::predictor_only) continue;
    for (const std::string& cls : manifest.classes_of(split)) {
      const auto key = std::make_pair(cls, a.source);
      if (a.source == PrototypeSource::pool) {
        if (!pools.count(key)) {
          PoolProviderFn provider = make_synthetic_pool_provider(
              ctx.styles, embedder, ctx.cfg.pool_size, ctx.cfg.diversity, ctx.cfg.seed);
          if (ctx.cfg.pool_provider == "file") {
            const std::filesystem::path dir(ctx.cfg.pool_dir);
            provider = [dir](const std::string& name) {
              return load_pool_file(dir / (name + ".pool"));
            };
          } else if (ctx.cfg.pool_provider == "plugin") {
            const std::string cmd = ctx.cfg.pool_plugin;
            const std::filesystem::path scratch =
                std::filesystem::path(ctx.cfg.out_dir) / "pool_plugin";
            provider = [cmd, scratch](const std::string& name) {
              return pool_from_plugin(cmd, name, scratch);
            };
          }
          pools.emplace(key, build_pool(cls, provider, embedder.dim()));
        }
      } else if (!class_protos.count(key)) {
        class_protos.emplace(key, make_prototype(ctx, cls, a.source, {}));
      }
    }
  }

  std::vector<std::vector<double>> counts(arms.size(),
                                          std::vector<double>(records.size(), 0.0));

  parallel_for(records.size(), workers, [&](size_t i) {
    const ImageRecord& rec = *records[i];
    const Image image = load_png(data_root / rec.image_path);
    const std::vector<Proposal> proposals = proposals_for(ctx, image, rec.id);
    std::vector<Vec> embeddings;  // computed lazily, shared across arms
    bool have_embeddings = false;

    for (size_t ai = 0; ai < arms.size(); ++ai) {
      const ArmSpec& arm = arms[ai];
      std::vector<Proposal> exemplars;
      switch (arm.arm) {
        case ExemplarArm::baseline_random: {
          Rng rng = substream(ctx.cfg.seed, "eval/random/" + rec.id);
          exemplars = random_subset(proposals, arm.s, rng);
          break;
        }
        case ExemplarArm::predictor_only: {
          exemplars =
              select_exemplars_from(proposals, image, *ctx.counter, *ctx.predictor, arm.s);
          break;
        }
        case ExemplarArm::prototype_only:
        case ExemplarArm::full: {
          if (!have_embeddings) {
            embeddings = embed_proposals(image, proposals, embedder);
            have_embeddings = true;
          }
          ClassPrototype proto;
          const auto key = std::make_pair(rec.class_name, arm.source);
          if (arm.source == PrototypeSource::pool) {
            proto = pool_class_prototype(pools.at(key), embeddings, ctx.cfg.pool_k);
          } else {
            proto = class_protos.at(key);
          }
          const SelectionResult relevant =
              class_relevant(proposals, embeddings, proto, arm.N);
          if (arm.arm == ExemplarArm::full) {
            exemplars = select_exemplars(relevant, image, *ctx.counter, *ctx.predictor, arm.s);
          } else {
            std::vector<Proposal> candidates;
            for (const auto& [p, d] : relevant.ranked) candidates.push_back(p);
            Rng rng = substream(ctx.cfg.seed, "eval/proto-random/" + rec.id);
            exemplars = random_subset(candidates, arm.s, rng);
          }
          break;
        }
      }
      const auto [count, density] = ctx.counter->count_with_exemplars(image, exemplars);
      counts[ai][i] = count;
    }
  });

  std::vector<EvalRow> rows;
  rows.reserve(arms.size());
  for (size_t ai = 0; ai < arms.size(); ++ai) {
    std::vector<CountPair> pairs;
    pairs.reserve(records.size());
    for (size_t i = 0; i < records.size(); ++i) {
      pairs.push_back({static_cast<double>(records[i]->gt_count), counts[ai][i]});
    }
    rows.push_back({arms[ai], evaluate(pairs)});
  }
  return rows;
}

ErrorPairs heldout_error_pairs(const PipelineContext& ctx, const DatasetManifest& manifest,
                               const std::filesystem::path& data_root, const std::string& split,
                               int patches_per_image, int workers) {
  if (!ctx.predictor) throw MissingArtifactError("pipeline: predictor checkpoint not loaded");
  const auto records = manifest.split_records(split);
  if (records.empty()) throw MissingArtifactError("heldout_error_pairs: empty split");

  std::vector<std::vector<std::pair<double, double>>> per_image(records.size());
  parallel_for(records.size(), workers, [&](size_t i) {
    const ImageRecord& rec = *records[i];
    const Image image = load_png(data_root / rec.image_path);
    const Image prepared = ctx.counter->prepare_query(image);
    const FeatureMap fm = ctx.counter->features(prepared);
    const std::vector<Proposal> proposals = proposals_for(ctx, image, "err/" + rec.id);

    Rng rng = substream(ctx.cfg.seed, "heldout/patches/" + rec.id);
    std::vector<Rect> rects;
    if (!rec.boxes.empty()) rects.push_back(rec.boxes[rng.uniform_int(0, static_cast<int>(rec.boxes.size()) - 1)]);
    for (int pi : rng.sample_indices(static_cast<int>(proposals.size()),
                                     std::max(0, patches_per_image - 1))) {
      rects.push_back(proposals[pi].rect);
    }
    for (const Rect& r : rects) {
      const Grid s_map = similarity_map(fm, ctx.counter->exemplar_vector(image, r));
      const Grid density = ctx.counter->predict_density(fm, s_map);
      const double actual =
          counting_error(density, rec.gt_count, ctx.predictor->normalized());
      const double predicted = predict_error(fm, s_map, *ctx.predictor);
      per_image[i].emplace_back(predicted, actual);
    }
  });

  ErrorPairs out;
  for (const auto& pairs : per_image) {
    for (const auto& [p, a] : pairs) {
      out.predicted.push_back(p);
      out.actual.push_back(a);
    }
  }
  return out;
}

void draw_rect_outline(Image& img, const Rect& r, double red, double green, double blue) {
  const auto set = [&](int y, int x) {
    if (y < 0 || y >= img.height() || x < 0 || x >= img.width()) return;
    double* p = img.t.site(y, x);
    p[0] = red;
    p[1] = green;
    p[2] = blue;
  };
  for (int x = r.x0; x < r.x1; ++x) {
    set(r.y0, x);
    set(r.y1 - 1, x);
  }
  for (int y = r.y0; y < r.y1; ++y) {
    set(y, r.x0);
    set(y, r.x1 - 1);
  }
}

}  // namespace zsc

#pragma once

#include <filesystem>
#include <map>
#include <memory>

#include "zsc/config.hpp"
#include "zsc/counter.hpp"
#include "zsc/error_predictor.hpp"
#include "zsc/metrics.hpp"
#include "zsc/patch_select.hpp"
#include "zsc/synth.hpp"
#include "zsc/vae.hpp"

namespace zsc {

// Loaded models plus the providers they need; shared by the CLI commands and
// the evaluation harness. Counter is always required; vae/predictor only for
// the paths that use them.
struct PipelineContext {
  PipelineConfig cfg;
  std::vector<ClassStyle> styles;
  std::unique_ptr<CounterModel> counter;
  std::unique_ptr<CondVae> vae;
  std::unique_ptr<ErrorPredictorModel> predictor;

  PatchEmbedder embedder() const {
    return PatchEmbedder(counter->backbone(), cfg.exemplar_size);
  }

  static PipelineContext load(const PipelineConfig& cfg, bool need_vae, bool need_predictor);
};

// Class prototype for the configured source. Pool prototypes are
// image-specific and need the query-side proposal embeddings; vae/semantic
// prototypes ignore them.
ClassPrototype make_prototype(const PipelineContext& ctx, const std::string& class_name,
                              PrototypeSource source,
                              const std::vector<Vec>& query_embeddings);

struct CountResult {
  double count = 0.0;
  Grid density;
  std::vector<Proposal> selected;
  PrototypeSource source = PrototypeSource::pool;
  std::vector<Proposal> proposals;  // full candidate set, for diagnostics
};

// Full zero-shot path: proposals -> prototype -> class-relevant N ->
// predictor top-s -> exemplar-based count.
CountResult zero_shot_count(const PipelineContext& ctx, const Image& image,
                            const std::string& class_name);

// Evaluation arms mirroring the component on/off grid.
enum class ExemplarArm {
  baseline_random,  // s random proposals, no selection
  prototype_only,   // s random picks among the N class-relevant patches
  predictor_only,   // predictor top-s over all proposals
  full              // class-relevant N, then predictor top-s
};

struct ArmSpec {
  ExemplarArm arm = ExemplarArm::full;
  PrototypeSource source = PrototypeSource::pool;
  int N = 10;
  int s = 3;
};

std::string arm_label(const ArmSpec& spec);

struct EvalRow {
  ArmSpec spec;
  MetricsReport report;
};

// Runs every arm over the split in one pass per image (features, proposals
// and embeddings are shared). Parallel over images; results are reduced in
// record order so worker count never changes the output. Refuses to score a
// non-train split whose classes intersect the counter's training classes.
std::vector<EvalRow> evaluate_arms(const PipelineContext& ctx, const DatasetManifest& manifest,
                                   const std::filesystem::path& data_root,
                                   const std::string& split, const std::vector<ArmSpec>& arms,
                                   int workers);

// Held-out (predicted, actual) counting-error pairs for rank-correlation
// checks: per image, the gt boxes plus sampled proposals.
struct ErrorPairs {
  std::vector<double> predicted;
  std::vector<double> actual;
};
ErrorPairs heldout_error_pairs(const PipelineContext& ctx, const DatasetManifest& manifest,
                               const std::filesystem::path& data_root, const std::string& split,
                               int patches_per_image, int workers);

void draw_rect_outline(Image& img, const Rect& r, double red, double green, double blue);

}  // namespace zsc

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace zsc {

// All pipeline knobs with their documented defaults. Keys use dotted names
// ("counter.epochs"); unknown keys are rejected. Every random draw anywhere
// in the pipeline descends from run.seed through named substreams.
struct PipelineConfig {
  // synthetic dataset
  std::string data_dir = "data";
  int image_height = 96;
  int image_width = 128;
  int classes = 12;
  int images_per_class = 40;
  int count_min = 3;
  int count_max = 25;
  double distractor_fraction = 0.3;
  int distractor_min = 2;
  int distractor_max = 8;
  double diversity = 0.35;
  double max_overlap_iou = 0.2;

  // shared feature dims / counter
  int channels = 32;
  int query_height = 96;
  int exemplar_size = 32;
  int counter_epochs = 30;
  int counter_batch = 8;
  double counter_lr = 1e-3;

  // conditional VAE
  int vae_latent_dim = 16;
  int vae_semantic_dim = 16;
  int vae_hidden = 64;
  int vae_epochs = 60;
  int vae_batch = 32;
  double vae_lr = 1e-3;
  int vae_prototype_samples = 256;

  // patch pool
  int pool_size = 64;
  int pool_k = 5;
  std::string pool_provider = "synthetic";  // synthetic | file | plugin
  std::string pool_dir;                     // for provider=file: <dir>/<class>.pool
  std::string pool_plugin;                  // for provider=plugin: command

  // proposal generation + class-relevant selection
  int select_n = 10;
  std::vector<int> window_sizes = {16, 24, 32};
  int max_proposals = 100;
  double heatmap_threshold = 0.35;

  // error predictor
  int errpred_epochs = 12;
  int errpred_batch = 32;
  double errpred_lr = 1e-3;
  bool errpred_normalized = true;
  int errpred_gt_patches = 1;
  int errpred_proposal_patches = 7;

  // end-to-end pipeline
  std::string prototype_source = "pool";  // vae | pool | semantic
  int top_s = 3;

  // evaluation sweeps: one result row per (source, N, s) combination
  std::vector<std::string> eval_sources = {"pool"};
  std::vector<int> eval_n_values = {10};
  std::vector<int> eval_s_values = {3};

  // run
  uint64_t seed = 0;
  int workers = 1;
  std::string out_dir = "out";
};

// "key = value" lines, '#' comments. Unknown keys throw ConfigError.
void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path);
// One dotted override, e.g. "counter.epochs=50".
void apply_override(PipelineConfig& cfg, const std::string& assignment);
// Full snapshot of every key in registry order.
std::string config_to_text(const PipelineConfig& cfg);
// Post-parse sanity checks (ranges, enums).
void validate(const PipelineConfig& cfg);

}  // namespace zsc

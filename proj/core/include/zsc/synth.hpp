#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "zsc/dataset.hpp"
#include "zsc/features.hpp"
#include "zsc/pool.hpp"

namespace zsc {

enum class ShapeKind { disc, square, triangle, cross, ring };

// Fixed per-class appearance: shape, base color, object size range and a
// shape parameter (ring thickness / cross arm width / triangle aspect).
struct ClassStyle {
  int id = 0;
  std::string name;
  ShapeKind shape = ShapeKind::disc;
  std::array<double, 3> color{};
  double r_min = 4.0, r_max = 8.0;
  double shape_param = 0.5;
};

// Deterministic style registry; class names are "<color>-<shape>".
std::vector<ClassStyle> default_class_styles(int n_classes);
const ClassStyle& style_by_name(const std::vector<ClassStyle>& styles, const std::string& name);

struct SceneSpec {
  int class_id = 0;
  int object_count = 0;
  int height = 96, width = 128;
  uint64_t seed = 0;
  // Per-image appearance spread: 0 renders every image of a class alike.
  double diversity = 0.35;
  double max_overlap_iou = 0.2;
  std::vector<std::pair<int, int>> distractors;  // (class_id, count)
};

struct Scene {
  Image image;
  std::vector<Rect> boxes;  // target-class objects only
  Grid density;             // unit mass per target object
};

// Renders the scene and its ground-truth density: one unit-mass isotropic
// Gaussian per target object (sigma = radius/2, truncated at 4 sigma and
// renormalized). Distractor objects contribute no density mass.
Scene generate_scene(const SceneSpec& spec, const std::vector<ClassStyle>& styles);

// Attribute vector standing in for a text-side class embedding:
// [shape one-hot (5) | base RGB (3) | size stats (2) | fixed per-class jitter].
Vec class_semantic_embedding(const ClassStyle& style, int d_s);

// Selection-space embeddings of freshly rendered single-object crops with
// style jitter scaled by `diversity`; stands in for generative-model patches.
std::vector<Vec> synthesize_pool_embeddings(const ClassStyle& style, int m, double diversity,
                                            Rng& rng, const PatchEmbedder& embedder);

// Embedding of one canonical (jitter-free) rendering; the class-name-only
// prototype for the direct-semantic baseline.
Vec canonical_class_embedding(const ClassStyle& style, const PatchEmbedder& embedder);

struct SynthConfig {
  int classes = 12;
  int images_per_class = 40;
  int image_height = 96, image_width = 128;
  int count_min = 3, count_max = 25;
  double distractor_fraction = 0.3;
  int distractor_min = 2, distractor_max = 8;
  double diversity = 0.35;
  double max_overlap_iou = 0.2;
  uint64_t seed = 0;
};

// Generates the full benchmark under out_dir (images/, density/, manifest.txt)
// with class-disjoint train/val/test splits. Same config and seed reproduce
// byte-identical outputs.
DatasetManifest build_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

// Providers wired to the style registry.
PoolProviderFn make_synthetic_pool_provider(const std::vector<ClassStyle>& styles,
                                            const PatchEmbedder& embedder, int m,
                                            double diversity, uint64_t root_seed);

// Semantic embeddings importable from text: one record per line,
// class name then d_s decimals.
std::map<std::string, Vec> load_semantic_file(const std::filesystem::path& path);
void save_semantic_file(const std::filesystem::path& path,
                        const std::map<std::string, Vec>& embeddings);

}  // namespace zsc

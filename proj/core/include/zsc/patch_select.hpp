#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "zsc/counter.hpp"
#include "zsc/features.hpp"
#include "zsc/proposal.hpp"

namespace zsc {

struct SlidingWindowConfig {
  std::vector<int> window_sizes = {16, 24, 32};
  int max_proposals = 100;
  uint64_t seed = 0;
};

// Multi-scale sliding window, stride = window/2. Deduplicated by exact rect;
// capped at max_proposals by top objectness where present, otherwise by a
// seeded uniform subsample. Throws NoProposalsError when nothing fits.
std::vector<Proposal> propose_sliding_window(int image_h, int image_w,
                                             const SlidingWindowConfig& cfg);

// One proposal per line: "x0 y0 x1 y1 [objectness]".
std::vector<Proposal> load_proposal_file(const std::filesystem::path& path, int image_h,
                                         int image_w);

// Dedup + cap shared by every provider path.
std::vector<Proposal> finalize_proposals(std::vector<Proposal> proposals, int max_proposals,
                                         uint64_t seed);

std::vector<Vec> embed_proposals(const Image& image, const std::vector<Proposal>& proposals,
                                 const PatchEmbedder& embedder);

// Class-relevant proposals: the N nearest neighbors of the prototype,
// ascending by distance, ties broken by lower proposal index.
struct SelectionResult {
  std::vector<std::pair<Proposal, double>> ranked;
  PrototypeSource prototype_source = PrototypeSource::vae;
  int N = 0;
};

SelectionResult class_relevant(const std::vector<Proposal>& proposals,
                               const std::vector<Vec>& embeddings,
                               const ClassPrototype& prototype, int N);

SelectionResult class_relevant(const std::vector<Proposal>& proposals, const Image& image,
                               const ClassPrototype& prototype, int N,
                               const PatchEmbedder& embedder);

// Baseline where the class's own semantic-space vector acts as the
// prototype directly; the provider must emit selection-space vectors.
using SemanticSpaceFn = std::function<Vec(const std::string& class_name)>;
ClassPrototype semantic_prototype_baseline(const std::string& class_name,
                                           const SemanticSpaceFn& provider);

// Binary relevance mask from the min-max normalized similarity map;
// constant maps normalize to all-ones.
struct Mask {
  int h = 0, w = 0;
  std::vector<uint8_t> v;
};
Mask relevance_heatmap(const FeatureMap& features, const Vec& exemplar, double threshold);

}  // namespace zsc

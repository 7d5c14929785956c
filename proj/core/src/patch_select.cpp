#include "zsc/patch_select.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "zsc/error.hpp"

namespace zsc {

std::vector<Proposal> finalize_proposals(std::vector<Proposal> proposals, int max_proposals,
                                         uint64_t seed) {
  // Dedup by exact rect, first occurrence wins.
  std::set<std::tuple<int, int, int, int>> seen;
  std::vector<Proposal> unique;
  unique.reserve(proposals.size());
  for (Proposal& p : proposals) {
    if (seen.insert({p.rect.x0, p.rect.y0, p.rect.x1, p.rect.y1}).second) {
      unique.push_back(std::move(p));
    }
  }
  if (unique.empty()) throw NoProposalsError("patch_select.propose: no proposals");
  if (static_cast<int>(unique.size()) <= max_proposals) return unique;

  const bool all_scored =
      std::all_of(unique.begin(), unique.end(), [](const Proposal& p) { return p.objectness.has_value(); });
  std::vector<int> keep;
  if (all_scored) {
    std::vector<int> idx(unique.size());
    for (size_t i = 0; i < unique.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      if (*unique[a].objectness != *unique[b].objectness) {
        return *unique[a].objectness > *unique[b].objectness;
      }
      return a < b;
    });
    keep.assign(idx.begin(), idx.begin() + max_proposals);
    std::sort(keep.begin(), keep.end());
  } else {
    Rng rng = substream(seed, "patch_select/subsample");
    keep = rng.sample_indices(static_cast<int>(unique.size()), max_proposals);
  }
  std::vector<Proposal> out;
  out.reserve(keep.size());
  for (int i : keep) out.push_back(unique[i]);
  return out;
}

std::vector<Proposal> propose_sliding_window(int image_h, int image_w,
                                             const SlidingWindowConfig& cfg) {
  std::vector<Proposal> proposals;
  for (int win : cfg.window_sizes) {
    if (win > image_h || win > image_w) continue;
    const int stride = std::max(1, win / 2);
    for (int y = 0; y + win <= image_h; y += stride) {
      for (int x = 0; x + win <= image_w; x += stride) {
        Proposal p;
        p.rect = {x, y, x + win, y + win};
        p.source = ProposalSource::sliding_window;
        proposals.push_back(p);
      }
    }
  }
  return finalize_proposals(std::move(proposals), cfg.max_proposals, cfg.seed);
}

std::vector<Proposal> load_proposal_file(const std::filesystem::path& path, int image_h,
                                         int image_w) {
  std::ifstream is(path);
  if (!is) throw MissingArtifactError("patch_select.load_proposal_file: cannot open " + path.string());
  std::vector<Proposal> proposals;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Proposal p;
    p.source = ProposalSource::provider_file;
    if (!(ls >> p.rect.x0 >> p.rect.y0 >> p.rect.x1 >> p.rect.y1)) {
      throw IoError("patch_select.load_proposal_file: malformed line: " + line);
    }
    double obj;
    if (ls >> obj) {
      if (obj < 0.0 || obj > 1.0) {
        throw IoError("patch_select.load_proposal_file: objectness outside [0,1]: " + line);
      }
      p.objectness = obj;
    }
    if (!p.rect.inside(image_h, image_w)) {
      throw IoError("patch_select.load_proposal_file: rect out of bounds: " + line);
    }
    proposals.push_back(p);
  }
  if (proposals.empty()) {
    throw NoProposalsError("patch_select.load_proposal_file: no proposals in " + path.string());
  }
  return proposals;
}

std::vector<Vec> embed_proposals(const Image& image, const std::vector<Proposal>& proposals,
                                 const PatchEmbedder& embedder) {
  std::vector<Vec> out;
  out.reserve(proposals.size());
  for (const Proposal& p : proposals) out.push_back(embedder.embed(crop(image, p.rect)));
  return out;
}

SelectionResult class_relevant(const std::vector<Proposal>& proposals,
                               const std::vector<Vec>& embeddings,
                               const ClassPrototype& prototype, int N) {
  if (N < 1) throw DimensionError("patch_select.class_relevant: N must be >= 1");
  if (proposals.size() != embeddings.size()) {
    throw DimensionError("patch_select.class_relevant: proposals/embeddings size mismatch");
  }
  if (proposals.empty()) throw NoProposalsError("patch_select.class_relevant: no proposals");

  std::vector<std::pair<int, double>> scored;
  scored.reserve(proposals.size());
  for (size_t i = 0; i < proposals.size(); ++i) {
    scored.emplace_back(static_cast<int>(i), l2_distance(embeddings[i], prototype.embedding));
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });

  SelectionResult res;
  res.prototype_source = prototype.source;
  res.N = N;
  const int take = std::min<int>(N, static_cast<int>(scored.size()));
  res.ranked.reserve(take);
  for (int i = 0; i < take; ++i) {
    res.ranked.emplace_back(proposals[scored[i].first], scored[i].second);
  }
  return res;
}

SelectionResult class_relevant(const std::vector<Proposal>& proposals, const Image& image,
                               const ClassPrototype& prototype, int N,
                               const PatchEmbedder& embedder) {
  return class_relevant(proposals, embed_proposals(image, proposals, embedder), prototype, N);
}

ClassPrototype semantic_prototype_baseline(const std::string& class_name,
                                           const SemanticSpaceFn& provider) {
  ClassPrototype p;
  p.embedding = provider(class_name);
  require_all_finite(p.embedding, "patch_select.semantic_prototype_baseline");
  p.source = PrototypeSource::semantic;
  p.class_name = class_name;
  p.sample_count = 1;
  return p;
}

Mask relevance_heatmap(const FeatureMap& features, const Vec& exemplar, double threshold) {
  const Grid s = similarity_map(features, exemplar);
  const auto [lo_it, hi_it] = std::minmax_element(s.v.begin(), s.v.end());
  const double lo = *lo_it, range = *hi_it - *lo_it;
  Mask m;
  m.h = s.h;
  m.w = s.w;
  m.v.resize(s.v.size());
  for (size_t i = 0; i < s.v.size(); ++i) {
    // Degenerate (constant) maps normalize to all-ones.
    const double norm = range > 0.0 ? (s.v[i] - lo) / range : 1.0;
    m.v[i] = norm >= threshold ? 1 : 0;
  }
  return m;
}

}  // namespace zsc

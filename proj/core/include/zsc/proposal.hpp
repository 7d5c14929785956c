#pragma once

#include <optional>

#include "zsc/image.hpp"

namespace zsc {

enum class ProposalSource { provider_file, sliding_window, ground_truth };

// Candidate exemplar patch. Objectness is only present for providers that
// score their proposals.
struct Proposal {
  Rect rect;
  std::optional<double> objectness;
  ProposalSource source = ProposalSource::sliding_window;
};

}  // namespace zsc

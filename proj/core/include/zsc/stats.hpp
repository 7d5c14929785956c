#pragma once

#include <vector>

namespace zsc {

// Spearman rank correlation with average ranks for ties.
// Returns 0 when either side has zero rank variance.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

double mean(const std::vector<double>& v);

}  // namespace zsc

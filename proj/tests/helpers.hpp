#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "zsc/metrics.hpp"
#include "zsc/nn.hpp"
#include "zsc/rng.hpp"
#include "zsc/tensor.hpp"

namespace zsc::testing {

// Independent brute-force metric evaluator. Deliberately written against the
// formulas directly, not via the library's accumulator.
struct BruteForceMetrics {
  double mae = 0.0, rmse = 0.0, nae = 0.0, sre = 0.0;
};

inline BruteForceMetrics brute_force_metrics(const std::vector<CountPair>& pairs) {
  BruteForceMetrics r;
  const double n = static_cast<double>(pairs.size());
  for (const CountPair& p : pairs) {
    r.mae += std::abs(p.ground_truth - p.predicted) / n;
    r.rmse += (p.ground_truth - p.predicted) * (p.ground_truth - p.predicted) / n;
  }
  r.rmse = std::sqrt(r.rmse);
  double m = 0.0;
  std::vector<CountPair> retained;
  for (const CountPair& p : pairs) {
    if (p.ground_truth > 0.0) retained.push_back(p);
  }
  for (const CountPair& p : retained) {
    r.nae += std::abs(p.ground_truth - p.predicted) / p.ground_truth;
    m += (p.ground_truth - p.predicted) * (p.ground_truth - p.predicted) / p.ground_truth;
  }
  if (!retained.empty()) {
    r.nae /= static_cast<double>(retained.size());
    r.sre = std::sqrt(m / static_cast<double>(retained.size()));
  }
  return r;
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-12});
  return std::abs(a - b) / scale;
}

// Central finite difference for d(loss)/d(param) on one scalar weight.
template <typename LossFn>
double fd_gradient(double* weight, LossFn&& loss, double step = 1e-5) {
  const double saved = *weight;
  *weight = saved + step;
  const double hi = loss();
  *weight = saved - step;
  const double lo = loss();
  *weight = saved;
  return (hi - lo) / (2.0 * step);
}

// Pick `count` distinct (array, element) parameter coordinates.
struct ParamCoord {
  ParamArray* array;
  size_t index;
};

inline std::vector<ParamCoord> random_param_coords(ParamRegistry& reg, int count, Rng& rng) {
  std::vector<ParamCoord> coords;
  size_t total = reg.total_params();
  for (int i = 0; i < count; ++i) {
    size_t flat = static_cast<size_t>(rng.uniform() * static_cast<double>(total));
    for (const auto& arr : reg.arrays()) {
      if (flat < arr->size()) {
        coords.push_back({arr.get(), flat});
        break;
      }
      flat -= arr->size();
    }
  }
  return coords;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("zsc-test-" + tag);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace zsc::testing

#include "zsc/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "zsc/error.hpp"

namespace zsc {

namespace {

struct Accum {
  double abs_err = 0.0;
  double sq_err = 0.0;
  double rel_abs = 0.0;
  double rel_sq = 0.0;
  int n = 0;
  int n_retained = 0;  // pairs with ground_truth > 0
};

Accum accumulate(const std::vector<CountPair>& pairs) {
  Accum a;
  for (const CountPair& p : pairs) {
    const double err = p.ground_truth - p.predicted;
    a.abs_err += std::abs(err);
    a.sq_err += err * err;
    if (p.ground_truth > 0.0) {
      a.rel_abs += std::abs(err) / p.ground_truth;
      a.rel_sq += err * err / p.ground_truth;
      ++a.n_retained;
    }
    ++a.n;
  }
  return a;
}

void require_nonempty(const std::vector<CountPair>& pairs, const char* op) {
  if (pairs.empty()) {
    throw EmptyEvaluationError(std::string("metrics.") + op + ": no pairs");
  }
}

}  // namespace

double mae(const std::vector<CountPair>& pairs) {
  require_nonempty(pairs, "mae");
  return accumulate(pairs).abs_err / pairs.size();
}

double rmse(const std::vector<CountPair>& pairs) {
  require_nonempty(pairs, "rmse");
  return std::sqrt(accumulate(pairs).sq_err / pairs.size());
}

double nae(const std::vector<CountPair>& pairs) {
  require_nonempty(pairs, "nae");
  const Accum a = accumulate(pairs);
  if (a.n_retained == 0) {
    throw EmptyEvaluationError("metrics.nae: all pairs have zero ground truth");
  }
  return a.rel_abs / a.n_retained;
}

double sre(const std::vector<CountPair>& pairs) {
  require_nonempty(pairs, "sre");
  const Accum a = accumulate(pairs);
  if (a.n_retained == 0) {
    throw EmptyEvaluationError("metrics.sre: all pairs have zero ground truth");
  }
  return std::sqrt(a.rel_sq / a.n_retained);
}

MetricsReport evaluate(const std::vector<CountPair>& pairs) {
  require_nonempty(pairs, "evaluate");
  const Accum a = accumulate(pairs);
  if (a.n_retained == 0) {
    throw EmptyEvaluationError("metrics.evaluate: all pairs have zero ground truth");
  }
  MetricsReport r;
  r.mae = a.abs_err / a.n;
  r.rmse = std::sqrt(a.sq_err / a.n);
  r.nae = a.rel_abs / a.n_retained;
  r.sre = std::sqrt(a.rel_sq / a.n_retained);
  r.n_images = a.n;
  r.n_excluded_zero_gt = a.n - a.n_retained;
  return r;
}

std::string format_report(const MetricsReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "mae %.4f\nrmse %.4f\nnae %.4f\nsre %.4f\nn_images %d\nn_excluded_zero_gt %d\n",
                r.mae, r.rmse, r.nae, r.sre, r.n_images, r.n_excluded_zero_gt);
  return buf;
}

}  // namespace zsc

#pragma once

#include <string>
#include <vector>

namespace zsc {

// One evaluated image: ground-truth object count and predicted count.
// Predicted counts are density sums, so they stay real-valued.
struct CountPair {
  double ground_truth = 0.0;
  double predicted = 0.0;
};

struct MetricsReport {
  double mae = 0.0;
  double rmse = 0.0;
  double nae = 0.0;
  double sre = 0.0;
  int n_images = 0;
  int n_excluded_zero_gt = 0;
};

// MAE = (1/n) sum |y - yhat|
double mae(const std::vector<CountPair>& pairs);
// RMSE = sqrt((1/n) sum (y - yhat)^2)
double rmse(const std::vector<CountPair>& pairs);
// NAE = (1/n) sum |y - yhat| / y over pairs with y > 0; zero-gt pairs are
// excluded rather than epsilon-padded.
double nae(const std::vector<CountPair>& pairs);
// SRE = sqrt((1/n) sum (y - yhat)^2 / y), same exclusion rule as NAE.
double sre(const std::vector<CountPair>& pairs);

MetricsReport evaluate(const std::vector<CountPair>& pairs);

// Flat key-value text record, metric values with 4 fractional digits.
std::string format_report(const MetricsReport& r);

}  // namespace zsc

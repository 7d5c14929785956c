#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "zsc/error.hpp"
#include "zsc/metrics.hpp"
#include "zsc/rng.hpp"

using namespace zsc;
using zsc::testing::brute_force_metrics;
using zsc::testing::rel_err;

TEST_CASE("mae examples") {
  CHECK(mae({{5, 5}}) == doctest::Approx(0.0));
  CHECK(mae({{2, 3}, {4, 8}}) == doctest::Approx(2.5));
  CHECK(mae({{10, 7}}) == doctest::Approx(3.0));
  CHECK_THROWS_AS(mae({}), EmptyEvaluationError);
}

TEST_CASE("rmse examples") {
  CHECK(rmse({{5, 5}}) == doctest::Approx(0.0));
  CHECK(rmse({{2, 3}, {4, 8}}) == doctest::Approx(std::sqrt(8.5)));
  CHECK(rmse({{0, 2}}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(rmse({}), EmptyEvaluationError);
}

TEST_CASE("nae examples and zero-gt exclusion") {
  CHECK(nae({{5, 5}}) == doctest::Approx(0.0));
  CHECK(nae({{2, 3}, {4, 8}}) == doctest::Approx(0.75));
  CHECK(nae({{0, 3}, {2, 3}}) == doctest::Approx(0.5));
  const MetricsReport r = evaluate({{0, 3}, {2, 3}});
  CHECK(r.n_excluded_zero_gt == 1);
  CHECK(r.n_images == 2);
  CHECK_THROWS_AS(nae({{0, 1}}), EmptyEvaluationError);
}

TEST_CASE("sre examples") {
  CHECK(sre({{5, 5}}) == doctest::Approx(0.0));
  CHECK(sre({{2, 3}, {4, 8}}) == doctest::Approx(1.5));
  CHECK(sre({{4, 2}}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(sre({{0, 1}}), EmptyEvaluationError);
}

TEST_CASE("metrics match the brute-force oracle on random pair lists") {
  Rng rng(20250809);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.uniform_int(1, 50);
    std::vector<CountPair> pairs;
    for (int i = 0; i < n; ++i) {
      pairs.push_back({rng.uniform(0.5, 500.0), rng.uniform(0.0, 500.0)});
    }
    const auto oracle = brute_force_metrics(pairs);
    CHECK(rel_err(mae(pairs), oracle.mae) < 1e-9);
    CHECK(rel_err(rmse(pairs), oracle.rmse) < 1e-9);
    CHECK(rel_err(nae(pairs), oracle.nae) < 1e-9);
    CHECK(rel_err(sre(pairs), oracle.sre) < 1e-9);
    CHECK(rmse(pairs) >= mae(pairs) - 1e-12);
  }
}

TEST_CASE("metrics are permutation invariant") {
  Rng rng(7);
  std::vector<CountPair> pairs;
  for (int i = 0; i < 20; ++i) pairs.push_back({rng.uniform(1.0, 50.0), rng.uniform(0.0, 50.0)});
  const MetricsReport before = evaluate(pairs);
  for (int shuffle = 0; shuffle < 5; ++shuffle) {
    rng.shuffle(pairs);
    const MetricsReport after = evaluate(pairs);
    CHECK(after.mae == doctest::Approx(before.mae).epsilon(1e-12));
    CHECK(after.rmse == doctest::Approx(before.rmse).epsilon(1e-12));
    CHECK(after.nae == doctest::Approx(before.nae).epsilon(1e-12));
    CHECK(after.sre == doctest::Approx(before.sre).epsilon(1e-12));
  }
}

TEST_CASE("all metrics are zero iff predictions are exact") {
  std::vector<CountPair> exact = {{3, 3}, {7, 7}, {20, 20}};
  const MetricsReport r = evaluate(exact);
  CHECK(r.mae == 0.0);
  CHECK(r.rmse == 0.0);
  CHECK(r.nae == 0.0);
  CHECK(r.sre == 0.0);

  std::vector<CountPair> off = {{3, 3}, {7, 7.001}};
  CHECK(mae(off) > 0.0);
  CHECK(rmse(off) > 0.0);
  CHECK(nae(off) > 0.0);
  CHECK(sre(off) > 0.0);
}

TEST_CASE("report formatting uses 4 fractional digits") {
  MetricsReport r = evaluate({{2, 3}, {4, 8}});
  const std::string text = format_report(r);
  CHECK(text.find("mae 2.5000") != std::string::npos);
  CHECK(text.find("nae 0.7500") != std::string::npos);
  CHECK(text.find("n_images 2") != std::string::npos);
}

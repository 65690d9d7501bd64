// SPDX-License-Identifier: Apache-2.0

#include "slsec/metrics.hpp"

#include <cmath>
#include <vector>

#include <doctest.h>

#include "slsec/error.hpp"
#include "slsec/rng.hpp"

using namespace slsec;

namespace {

// O(n^2) pair-count oracle with 0.5 credit for ties.
double pair_count_auc(const std::vector<double>& scores,
                      const std::vector<int>& labels) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("roc_auc fixtures") {
  std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  std::vector<int> y{0, 0, 1, 1};
  CHECK(roc_auc(s, y) == doctest::Approx(0.75));  // 3 of 4 pairs concordant

  std::vector<double> ties{0.5, 0.5, 0.5, 0.5};
  CHECK(roc_auc(ties, y) == doctest::Approx(0.5));

  std::vector<double> sep{0.0, 0.1, 0.9, 1.0};
  CHECK(roc_auc(sep, y) == doctest::Approx(1.0));
}

TEST_CASE("roc_auc argument errors") {
  std::vector<double> s{0.1, 0.2};
  CHECK_THROWS_AS(roc_auc(s, std::vector<int>{1, 1}), Error);
  CHECK_THROWS_AS(roc_auc(s, std::vector<int>{0}), Error);
  CHECK_THROWS_AS(roc_auc(s, std::vector<int>{0, 2}), Error);
}

TEST_CASE("rank-sum equals the pair-count oracle, ties included") {
  RngStream rng(314);
  for (int trial = 0; trial < 120; ++trial) {
    std::size_t n = 2 + rng.below(199);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    // Coarse quantization forces plenty of ties.
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.below(8)) / 4.0;
      labels[i] = static_cast<int>(rng.below(2));
    }
    labels[0] = 0;
    labels[n - 1] = 1;  // both classes present
    CHECK(roc_auc(scores, labels) ==
          doctest::Approx(pair_count_auc(scores, labels)).epsilon(1e-12));
  }
}

TEST_CASE("roc_auc invariances") {
  RngStream rng(2718);
  std::size_t n = 60;
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.gaussian();
    labels[i] = static_cast<int>(rng.below(2));
  }
  labels[0] = 0;
  labels[1] = 1;

  double base = roc_auc(scores, labels);

  // Strictly monotone transform.
  std::vector<double> warped(n);
  for (std::size_t i = 0; i < n; ++i) warped[i] = std::exp(scores[i]) + 3.0;
  CHECK(roc_auc(warped, labels) == doctest::Approx(base).epsilon(1e-12));

  // Orientation flip.
  std::vector<double> neg(n);
  for (std::size_t i = 0; i < n; ++i) neg[i] = -scores[i];
  CHECK(std::abs(roc_auc(neg, labels) + base - 1.0) <= 1e-15);
}

TEST_CASE("accuracy") {
  std::vector<int> a{1, 0, 2, 1};
  CHECK(accuracy(a, a) == doctest::Approx(1.0));
  std::vector<int> b{0, 1};
  std::vector<int> nb{1, 0};
  CHECK(accuracy(b, nb) == doctest::Approx(0.0));
  std::vector<int> p{0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
  std::vector<int> t{0, 1, 2, 0, 1, 2, 0, 0, 0, 2};
  CHECK(accuracy(p, t) == doctest::Approx(0.7));
  CHECK_THROWS_AS(accuracy(b, a), Error);
}

TEST_CASE("leak_auc orientation") {
  std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  std::vector<int> y{0, 0, 1, 1};
  CHECK(leak_auc(s, y) == doctest::Approx(0.75));

  std::vector<double> inv{0.8, 0.35, 0.4, 0.1};
  CHECK(roc_auc(inv, y) == doctest::Approx(0.25));
  CHECK(leak_auc(inv, y) == doctest::Approx(0.75));

  std::vector<double> flat{1, 1, 1, 1};
  CHECK(leak_auc(flat, y) == doctest::Approx(0.5));
}

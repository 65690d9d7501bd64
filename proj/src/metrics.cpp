// SPDX-License-Identifier: Apache-2.0

#include "slsec/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "slsec/error.hpp"

namespace slsec {

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  const std::size_t n = scores.size();
  require(n == labels.size(), ErrorKind::kArgument, "roc_auc: length mismatch");
  std::size_t n_pos = 0;
  for (int y : labels) {
    require(y == 0 || y == 1, ErrorKind::kArgument, "roc_auc: labels must be 0/1");
    n_pos += static_cast<std::size_t>(y);
  }
  std::size_t n_neg = n - n_pos;
  require(n_pos > 0 && n_neg > 0, ErrorKind::kArgument,
          "roc_auc: both classes must be present");

  // Rank-sum with average ranks over ties: O(n log n).
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t t = i; t <= j; ++t) {
      if (labels[order[t]] == 1) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  double u = rank_sum_pos -
             0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  require(predicted.size() == truth.size() && !truth.empty(),
          ErrorKind::kArgument, "accuracy: length mismatch or empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += (predicted[i] == truth[i]);
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double leak_auc(std::span<const double> scores, std::span<const int> labels) {
  double a = roc_auc(scores, labels);
  return std::max(a, 1.0 - a);
}

}  // namespace slsec

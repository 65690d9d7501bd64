// SPDX-License-Identifier: Apache-2.0
//
// Scoring utilities: ROC-AUC via the Mann-Whitney rank-sum statistic,
// plain accuracy, and the orientation-free leak AUC.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace slsec {

// Fraction of (positive, negative) pairs with score_pos > score_neg; tied
// pairs count 0.5. Labels must be 0/1 with both classes present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

// max(auc, 1 - auc): information content regardless of score orientation.
double leak_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace slsec

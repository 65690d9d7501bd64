// SPDX-License-Identifier: Apache-2.0
//
// Dataset construction and ingestion: an imbalanced synthetic blob generator,
// a generic CSV loader, an IDX (big-endian image/label) loader, and a
// stratified train/test split.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slsec/matrix.hpp"
#include "slsec/rng.hpp"

namespace slsec {

enum class SplitTag { kFull, kTrain, kTest };

struct Dataset {
  Matrix features;          // n × d
  std::vector<int> labels;  // values in [0, k)
  int k = 0;
  SplitTag tag = SplitTag::kFull;
  // Original label values in sorted order when labels were remapped by a
  // loader (label_values[new] == original); empty otherwise.
  std::vector<long long> label_values;

  std::size_t size() const { return features.rows; }
  std::size_t dim() const { return features.cols; }
};

// Per-class Gaussian blobs with unit covariance. Class means sit on mutually
// orthogonal random directions scaled so that every pair of means is exactly
// `separation` apart (requires k <= d). Labels are drawn i.i.d. from
// class_weights, so the first n samples are identical for any larger n drawn
// from the same stream.
Dataset gen_synthetic(std::size_t n, std::size_t d, int k,
                      const std::vector<double>& class_weights,
                      double separation, RngStream& rng);

// Header row required; all columns numeric; the label column must hold
// integers. Labels are remapped to [0, k) preserving sorted original order;
// the remap table lands in Dataset::label_values. feature_columns empty
// means "every column except the label".
Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::vector<std::string>& feature_columns = {});

// IDX pair (0x00000803 image magic, 0x00000801 label magic, big-endian dims).
// Pixels are scaled to [0, 1]; each image becomes one row of length h*w.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Seeded stratified split; every class appears in both parts.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data,
                                             double test_fraction,
                                             RngStream& rng);

// n × k one-hot matrix from class labels.
Matrix one_hot(const std::vector<int>& labels, int k);

}  // namespace slsec

// SPDX-License-Identifier: Apache-2.0
//
// Deterministic numerical primitives: stabilized softmax, norms, power
// iteration for the dominant singular pair, Lloyd's k-means, and the
// Calinski-Harabasz cluster score. All functions are pure given their
// inputs and seed.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "slsec/matrix.hpp"
#include "slsec/rng.hpp"

namespace slsec {

// Max-subtraction stabilized softmax; entries > 0 and sum to 1.
std::vector<double> softmax(std::span<const double> v);

double l2_norm(std::span<const double> v);

// Clamped to [-1, 1]; raises kDegenerate when either vector has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct SingularPair {
  std::vector<double> vector;  // unit-norm right singular vector of m
  double value = 0.0;          // dominant singular value
  std::size_t iterations = 0;
};

// Power iteration on mᵀm. Sign convention: first nonzero component of the
// returned vector is positive. Raises kDegenerate on a zero matrix and
// kConvergence when max_iter is exhausted (message carries the last iterate's
// residual).
SingularPair top_singular_vector(const Matrix& m, double tol = 1e-8,
                                 std::size_t max_iter = 1000);

struct KMeansResult {
  std::vector<std::size_t> assignment;  // one cluster id per point
  Matrix centroids;                     // c × dim
  double wcss = 0.0;                    // within-cluster sum of squares
};

// Lloyd's algorithm with seeded distance^2-weighted (k-means++) centroid
// seeding, best of `restarts` by WCSS. Empty clusters are reseeded to the
// point farthest from its current centroid. If iteration_wcss is non-null it
// receives the WCSS after every assignment step of the winning restart
// (monotone non-increasing).
KMeansResult kmeans(const Matrix& points, std::size_t c, RngStream& rng,
                    std::size_t restarts = 10, std::size_t max_iter = 100,
                    std::vector<double>* iteration_wcss = nullptr);

// (SSB/(c-1)) / (SSW/(n-c)). Raises kDegenerate when fewer than two distinct
// clusters are present or SSW is zero.
double calinski_harabasz(const Matrix& points,
                         std::span<const std::size_t> assignment);

}  // namespace slsec

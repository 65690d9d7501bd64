// SPDX-License-Identifier: Apache-2.0
//
// The secdt defense: label-space dimension transformation (mapping pools,
// maximum/weighted decrease mappings), cut-layer gradient normalization, and
// softmax-normalized Gaussian label noise. All of it runs on the guest; the
// host only ever sees the resulting embeddings-for-gradients exchange.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slsec/matrix.hpp"
#include "slsec/rng.hpp"

namespace slsec {

struct MappingPools {
  int k = 0;  // original class count
  int K = 0;  // increased class count, multiple of k
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> pools;  // k disjoint code sets covering [0, K)
  std::vector<int> code_to_class;       // length K inverse of `pools`
  Matrix pool_weights;                  // k × K 0/1 rows (one-hot sums per pool)
  std::vector<int> per_sample_codes;    // filled by transform_labels, then fixed

  int pool_size() const { return K / k; }
  bool operator==(const MappingPools&) const = default;
};

enum class NormStandard { kOff, kMin, kMean, kMax };
enum class NoiseResample { kPerEpoch, kOnce };

struct DefenseConfig {
  int K = 0;
  NormStandard norm_standard = NormStandard::kMean;
  double mu = 0.0;
  NoiseResample noise_resample = NoiseResample::kPerEpoch;
  // The literal noise formula leaves targets summing to 1 + mu; by default we
  // rescale them back to probability simplex. Disabled via --no-renormalize
  // for ablation.
  bool renormalize_targets = true;
};

// Raises kArgument unless K is a positive multiple of k with K >= k and
// mu in [0, 1).
void validate_defense(const DefenseConfig& cfg, int k);

// Shuffle the ordered code set {0..K-1} and split it into k consecutive
// pools of K/k codes each; derives the 0/1 pool weight rows.
MappingPools build_mapping_pools(int k, int K, RngStream& rng);

// Assign every sample a code drawn uniformly from its class's pool, record
// the assignment in pools.per_sample_codes (fixed for the rest of training),
// and return the n × K one-hot target matrix.
Matrix transform_labels(const std::vector<int>& labels, MappingPools& pools,
                        RngStream& rng);

// Class owning the argmax code; ties break toward the lowest code index.
int maximum_mapping(std::span<const double> p_k, const MappingPools& pools);

// argmax_y of w_y . p; ties break toward the lowest class index.
int weighted_mapping(std::span<const double> p_k, const MappingPools& pools);

// Rescale every nonzero row to the chosen standard norm phi (min/mean/max of
// nonzero row norms). Zero rows pass through and are excluded from phi. With
// kOff, or when every row is zero, the input is returned unchanged.
// phi_out (optional) receives the standard norm, 0 when nothing was scaled.
Matrix normalize_gradients(const Matrix& grads, NormStandard standard,
                           double* phi_out = nullptr);

// target + mu * softmax(gaussian noise), optionally renormalized to sum 1.
// Argmax is preserved for every mu < 1.
std::vector<double> sgn_noise(std::span<const double> one_hot_target, double mu,
                              RngStream& rng, bool renormalize = true);

// Row-wise sgn_noise over a one-hot target matrix.
Matrix apply_sgn_noise(const Matrix& one_hot_targets, double mu, RngStream& rng,
                       bool renormalize = true);

// Text sidecar so experiments stay auditable: header with k/K/seed, one line
// per pool listing its codes.
void save_pools(const MappingPools& pools, const std::string& path);
MappingPools load_pools(const std::string& path);

}  // namespace slsec

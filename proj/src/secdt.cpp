// SPDX-License-Identifier: Apache-2.0

#include "slsec/secdt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "slsec/error.hpp"
#include "slsec/numerics.hpp"

namespace slsec {

void validate_defense(const DefenseConfig& cfg, int k) {
  require(k >= 1, ErrorKind::kArgument, "defense: k must be >= 1");
  require(cfg.K >= k, ErrorKind::kArgument, "defense: K must be >= k");
  require(cfg.K % k == 0, ErrorKind::kArgument,
          "defense: K must be a multiple of k (pools divide equally)");
  require(cfg.mu >= 0.0 && cfg.mu < 1.0, ErrorKind::kArgument,
          "defense: mu must be in [0, 1)");
}

MappingPools build_mapping_pools(int k, int K, RngStream& rng) {
  require(k >= 1, ErrorKind::kArgument, "build_mapping_pools: k must be >= 1");
  require(K >= k, ErrorKind::kArgument, "build_mapping_pools: K must be >= k");
  require(K % k == 0, ErrorKind::kArgument,
          "build_mapping_pools: K must be a multiple of k");

  MappingPools mp;
  mp.k = k;
  mp.K = K;
  mp.seed = rng.seed();

  std::vector<int> codes(static_cast<std::size_t>(K));
  std::iota(codes.begin(), codes.end(), 0);
  rng.shuffle(codes);

  const int sigma = K / k;
  mp.pools.resize(static_cast<std::size_t>(k));
  mp.code_to_class.assign(static_cast<std::size_t>(K), -1);
  mp.pool_weights = Matrix(static_cast<std::size_t>(k), static_cast<std::size_t>(K));
  for (int y = 0; y < k; ++y) {
    auto& pool = mp.pools[static_cast<std::size_t>(y)];
    pool.assign(codes.begin() + static_cast<std::ptrdiff_t>(y) * sigma,
                codes.begin() + static_cast<std::ptrdiff_t>(y + 1) * sigma);
    for (int code : pool) {
      mp.code_to_class[static_cast<std::size_t>(code)] = y;
      mp.pool_weights.at(static_cast<std::size_t>(y),
                         static_cast<std::size_t>(code)) = 1.0;
    }
  }
  return mp;
}

Matrix transform_labels(const std::vector<int>& labels, MappingPools& pools,
                        RngStream& rng) {
  const std::size_t n = labels.size();
  const int sigma = pools.pool_size();
  Matrix targets(n, static_cast<std::size_t>(pools.K));
  pools.per_sample_codes.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    int y = labels[i];
    require(y >= 0 && y < pools.k, ErrorKind::kArgument,
            "transform_labels: label out of range");
    const auto& pool = pools.pools[static_cast<std::size_t>(y)];
    int code = pool[static_cast<std::size_t>(
        rng.below(static_cast<std::uint64_t>(sigma)))];
    pools.per_sample_codes[i] = code;
    targets.at(i, static_cast<std::size_t>(code)) = 1.0;
  }
  return targets;
}

int maximum_mapping(std::span<const double> p_k, const MappingPools& pools) {
  require(p_k.size() == static_cast<std::size_t>(pools.K), ErrorKind::kArgument,
          "maximum_mapping: prediction length != K");
  std::size_t best = 0;
  for (std::size_t j = 1; j < p_k.size(); ++j) {
    require(p_k[j] >= 0.0, ErrorKind::kArgument,
            "maximum_mapping: negative probability entry");
    if (p_k[j] > p_k[best]) best = j;
  }
  require(p_k[0] >= 0.0, ErrorKind::kArgument,
          "maximum_mapping: negative probability entry");
  return pools.code_to_class[best];
}

int weighted_mapping(std::span<const double> p_k, const MappingPools& pools) {
  require(p_k.size() == static_cast<std::size_t>(pools.K), ErrorKind::kArgument,
          "weighted_mapping: prediction length != K");
  int best_y = 0;
  double best_score = -1.0;
  for (int y = 0; y < pools.k; ++y) {
    double score = 0.0;
    for (int code : pools.pools[static_cast<std::size_t>(y)]) {
      double p = p_k[static_cast<std::size_t>(code)];
      require(p >= 0.0, ErrorKind::kArgument,
              "weighted_mapping: negative probability entry");
      score += p;
    }
    if (score > best_score) {
      best_score = score;
      best_y = y;
    }
  }
  return best_y;
}

Matrix normalize_gradients(const Matrix& grads, NormStandard standard,
                           double* phi_out) {
  if (phi_out) *phi_out = 0.0;
  if (standard == NormStandard::kOff) return grads;
  require(grads.rows >= 1, ErrorKind::kArgument,
          "normalize_gradients: empty batch");

  std::vector<double> norms(grads.rows);
  double mn = 0.0, mx = 0.0, sum = 0.0;
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < grads.rows; ++i) {
    norms[i] = l2_norm(grads.row(i));
    if (norms[i] == 0.0) continue;
    if (nonzero == 0) {
      mn = mx = norms[i];
    } else {
      mn = std::min(mn, norms[i]);
      mx = std::max(mx, norms[i]);
    }
    sum += norms[i];
    ++nonzero;
  }
  if (nonzero == 0) return grads;  // no signal to hide; pass through

  double phi = 0.0;
  switch (standard) {
    case NormStandard::kMin: phi = mn; break;
    case NormStandard::kMax: phi = mx; break;
    case NormStandard::kMean: phi = sum / static_cast<double>(nonzero); break;
    case NormStandard::kOff: break;
  }
  if (phi_out) *phi_out = phi;

  Matrix out = grads;
  for (std::size_t i = 0; i < out.rows; ++i) {
    if (norms[i] == 0.0) continue;
    double scale = phi / norms[i];
    auto row = out.row(i);
    for (double& v : row) v *= scale;
  }
  return out;
}

std::vector<double> sgn_noise(std::span<const double> one_hot_target, double mu,
                              RngStream& rng, bool renormalize) {
  require(mu >= 0.0 && mu < 1.0, ErrorKind::kArgument,
          "sgn_noise: mu must be in [0, 1) to preserve the argmax");
  std::size_t hot = one_hot_target.size();
  for (std::size_t j = 0; j < one_hot_target.size(); ++j) {
    double v = one_hot_target[j];
    require(v == 0.0 || v == 1.0, ErrorKind::kArgument,
            "sgn_noise: target must be one-hot");
    if (v == 1.0) {
      require(hot == one_hot_target.size(), ErrorKind::kArgument,
              "sgn_noise: target must have exactly one hot entry");
      hot = j;
    }
  }
  require(hot != one_hot_target.size(), ErrorKind::kArgument,
          "sgn_noise: target must have exactly one hot entry");

  std::vector<double> out(one_hot_target.begin(), one_hot_target.end());
  if (mu == 0.0) return out;

  std::vector<double> gamma(out.size());
  for (double& g : gamma) g = rng.gaussian();
  std::vector<double> bar = softmax(gamma);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += mu * bar[j];
  if (renormalize) {
    for (double& v : out) v /= (1.0 + mu);
  }
  return out;
}

Matrix apply_sgn_noise(const Matrix& one_hot_targets, double mu, RngStream& rng,
                       bool renormalize) {
  if (mu == 0.0) return one_hot_targets;
  Matrix out(one_hot_targets.rows, one_hot_targets.cols);
  for (std::size_t i = 0; i < one_hot_targets.rows; ++i) {
    auto noised = sgn_noise(one_hot_targets.row(i), mu, rng, renormalize);
    std::copy(noised.begin(), noised.end(), out.row(i).begin());
  }
  return out;
}

void save_pools(const MappingPools& pools, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorKind::kIo, "save_pools: cannot open " + path);
  out << "slsec-pools v1\n";
  out << "k " << pools.k << "\n";
  out << "K " << pools.K << "\n";
  out << "seed " << pools.seed << "\n";
  for (int y = 0; y < pools.k; ++y) {
    out << y << ":";
    for (int code : pools.pools[static_cast<std::size_t>(y)]) out << " " << code;
    out << "\n";
  }
  require(out.good(), ErrorKind::kIo, "save_pools: write failed for " + path);
}

MappingPools load_pools(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kIo, "load_pools: cannot open " + path);
  std::string line;
  require(std::getline(in, line) && line == "slsec-pools v1", ErrorKind::kFormat,
          "load_pools: bad header in " + path);
  MappingPools mp;
  std::string key;
  in >> key >> mp.k;
  require(in.good() && key == "k", ErrorKind::kFormat, "load_pools: expected k");
  in >> key >> mp.K;
  require(in.good() && key == "K", ErrorKind::kFormat, "load_pools: expected K");
  in >> key >> mp.seed;
  require(!in.fail() && key == "seed", ErrorKind::kFormat,
          "load_pools: expected seed");
  require(mp.k >= 1 && mp.K >= mp.k && mp.K % mp.k == 0, ErrorKind::kFormat,
          "load_pools: inconsistent k/K");
  std::getline(in, line);  // finish the seed line

  mp.pools.resize(static_cast<std::size_t>(mp.k));
  mp.code_to_class.assign(static_cast<std::size_t>(mp.K), -1);
  mp.pool_weights =
      Matrix(static_cast<std::size_t>(mp.k), static_cast<std::size_t>(mp.K));
  for (int y = 0; y < mp.k; ++y) {
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::kFormat,
            "load_pools: missing pool line");
    std::istringstream ls(line);
    int label = -1;
    char colon = 0;
    ls >> label >> colon;
    require(label == y && colon == ':', ErrorKind::kFormat,
            "load_pools: malformed pool line");
    auto& pool = mp.pools[static_cast<std::size_t>(y)];
    int code;
    while (ls >> code) {
      require(code >= 0 && code < mp.K &&
                  mp.code_to_class[static_cast<std::size_t>(code)] == -1,
              ErrorKind::kFormat, "load_pools: invalid or duplicate code");
      pool.push_back(code);
      mp.code_to_class[static_cast<std::size_t>(code)] = y;
      mp.pool_weights.at(static_cast<std::size_t>(y),
                         static_cast<std::size_t>(code)) = 1.0;
    }
    require(pool.size() == static_cast<std::size_t>(mp.pool_size()),
            ErrorKind::kFormat, "load_pools: pool size != K/k");
  }
  return mp;
}

}  // namespace slsec

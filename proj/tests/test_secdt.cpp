// SPDX-License-Identifier: Apache-2.0

#include "slsec/secdt.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include <doctest.h>

#include "slsec/error.hpp"
#include "slsec/numerics.hpp"

using namespace slsec;

namespace {

// Fixed pools rho_0 = {0,1}, rho_1 = {2,3} for the mapping hand cases.
MappingPools fixed_pools_2x4() {
  MappingPools mp;
  mp.k = 2;
  mp.K = 4;
  mp.pools = {{0, 1}, {2, 3}};
  mp.code_to_class = {0, 0, 1, 1};
  mp.pool_weights = Matrix::from_rows({{1, 1, 0, 0}, {0, 0, 1, 1}});
  return mp;
}

void check_partition(const MappingPools& mp) {
  std::set<int> seen;
  for (int y = 0; y < mp.k; ++y) {
    CHECK(mp.pools[static_cast<std::size_t>(y)].size() ==
          static_cast<std::size_t>(mp.K / mp.k));
    for (int code : mp.pools[static_cast<std::size_t>(y)]) {
      CHECK(code >= 0);
      CHECK(code < mp.K);
      CHECK(seen.insert(code).second);  // disjoint
      CHECK(mp.code_to_class[static_cast<std::size_t>(code)] == y);
    }
  }
  CHECK(seen.size() == static_cast<std::size_t>(mp.K));  // coverage
  // w_y has exactly sigma ones at the pool's indices.
  for (int y = 0; y < mp.k; ++y) {
    double ones = 0.0;
    for (std::size_t j = 0; j < static_cast<std::size_t>(mp.K); ++j)
      ones += mp.pool_weights.at(static_cast<std::size_t>(y), j);
    CHECK(ones == static_cast<double>(mp.K / mp.k));
  }
}

}  // namespace

TEST_CASE("build_mapping_pools: partition invariants and sizes") {
  RngStream rng(31);
  MappingPools mp = build_mapping_pools(2, 4, rng);
  check_partition(mp);

  RngStream rng2(32);
  CHECK_THROWS_AS(build_mapping_pools(2, 3, rng2), Error);

  // Pool size K/k over the ratios 2, 5, 10.
  for (int ratio : {2, 5, 10}) {
    RngStream r(100 + static_cast<std::uint64_t>(ratio));
    MappingPools p = build_mapping_pools(2, 2 * ratio, r);
    CHECK(p.pool_size() == ratio);
    check_partition(p);
  }
}

TEST_CASE("build_mapping_pools: random property sample") {
  RngStream meta(555);
  for (int trial = 0; trial < 100; ++trial) {
    int k = 2 + static_cast<int>(meta.below(6));
    int ratio = 1 + static_cast<int>(meta.below(10));
    RngStream rng(meta.next_u64());
    MappingPools mp = build_mapping_pools(k, k * ratio, rng);
    check_partition(mp);
  }
}

TEST_CASE("transform_labels: codes stay in the right pool") {
  RngStream pool_rng(41);
  MappingPools mp = build_mapping_pools(2, 10, pool_rng);
  std::vector<int> labels;
  RngStream lab_rng(42);
  for (int i = 0; i < 500; ++i) labels.push_back(static_cast<int>(lab_rng.below(2)));
  RngStream assign_rng(43);
  Matrix targets = transform_labels(labels, mp, assign_rng);

  REQUIRE(mp.per_sample_codes.size() == labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int code = mp.per_sample_codes[i];
    CHECK(mp.code_to_class[static_cast<std::size_t>(code)] == labels[i]);
    // Exactly one hot entry, at the assigned code.
    double sum = 0.0;
    for (std::size_t j = 0; j < targets.cols; ++j) sum += targets.at(i, j);
    CHECK(sum == 1.0);
    CHECK(targets.at(i, static_cast<std::size_t>(code)) == 1.0);
  }

  std::vector<int> bad{2};
  CHECK_THROWS_AS(transform_labels(bad, mp, assign_rng), Error);
}

TEST_CASE("transform_labels: K = k degenerates to a fixed permutation") {
  RngStream pool_rng(51);
  MappingPools mp = build_mapping_pools(3, 3, pool_rng);
  std::vector<int> labels{0, 1, 2, 0, 1, 2};
  RngStream assign_rng(52);
  transform_labels(labels, mp, assign_rng);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    CHECK(mp.per_sample_codes[i] ==
          mp.pools[static_cast<std::size_t>(labels[i])][0]);
  }
}

TEST_CASE("transform_labels: codes within a pool are uniformly used") {
  // Multinomial concentration: each code receives n_y/sigma +- 3*sqrt(n_y/sigma).
  RngStream pool_rng(61);
  MappingPools mp = build_mapping_pools(2, 10, pool_rng);
  const std::size_t n = 10000;
  std::vector<int> labels(n);
  RngStream lab_rng(62);
  for (auto& y : labels) y = static_cast<int>(lab_rng.below(2));
  RngStream assign_rng(63);
  transform_labels(labels, mp, assign_rng);

  std::vector<std::size_t> class_counts(2, 0);
  for (int y : labels) ++class_counts[static_cast<std::size_t>(y)];
  std::vector<std::size_t> code_counts(10, 0);
  for (int code : mp.per_sample_codes) ++code_counts[static_cast<std::size_t>(code)];
  for (int y = 0; y < 2; ++y) {
    double expect = static_cast<double>(class_counts[y]) / 5.0;
    double band = 3.0 * std::sqrt(expect);
    for (int code : mp.pools[static_cast<std::size_t>(y)]) {
      CHECK(std::abs(static_cast<double>(
                code_counts[static_cast<std::size_t>(code)]) -
                expect) <= band);
    }
  }
}

TEST_CASE("maximum and weighted mapping hand cases") {
  MappingPools mp = fixed_pools_2x4();

  std::vector<double> hot{0.0, 1.0, 0.0, 0.0};  // code 1 in pool 0
  CHECK(maximum_mapping(hot, mp) == 0);
  CHECK(weighted_mapping(hot, mp) == 0);

  // The motivating divergence: argmax lands in pool 1 but the pool mass
  // favors pool 0.
  std::vector<double> p{0.3, 0.3, 0.39, 0.01};
  CHECK(maximum_mapping(p, mp) == 1);
  CHECK(weighted_mapping(p, mp) == 0);

  // Uniform vector: tie-breaks toward the lowest code / class index.
  std::vector<double> uniform(4, 0.25);
  CHECK(maximum_mapping(uniform, mp) == mp.code_to_class[0]);
  CHECK(weighted_mapping(uniform, mp) == 0);

  std::vector<double> neg{0.5, -0.1, 0.3, 0.3};
  CHECK_THROWS_AS(maximum_mapping(neg, mp), Error);
  CHECK_THROWS_AS(weighted_mapping(neg, mp), Error);
}

TEST_CASE("mapping round trip over random pools") {
  RngStream meta(71);
  for (int trial = 0; trial < 20; ++trial) {
    int k = 2 + static_cast<int>(meta.below(5));
    int ratio = 1 + static_cast<int>(meta.below(6));
    RngStream rng(meta.next_u64());
    MappingPools mp = build_mapping_pools(k, k * ratio, rng);
    std::vector<int> labels;
    for (int y = 0; y < k; ++y) labels.insert(labels.end(), 5, y);
    RngStream assign(meta.next_u64());
    Matrix targets = transform_labels(labels, mp, assign);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      CHECK(weighted_mapping(targets.row(i), mp) == labels[i]);
      CHECK(maximum_mapping(targets.row(i), mp) == labels[i]);
    }
  }
}

TEST_CASE("normalize_gradients: mean standard hand case") {
  Matrix grads = Matrix::from_rows({{3.0, 4.0}, {0.0, 0.5}});
  double phi = 0.0;
  Matrix out = normalize_gradients(grads, NormStandard::kMean, &phi);
  CHECK(phi == doctest::Approx(2.75));  // (5 + 0.5) / 2
  CHECK(l2_norm(out.row(0)) == doctest::Approx(2.75).epsilon(1e-12));
  CHECK(l2_norm(out.row(1)) == doctest::Approx(2.75).epsilon(1e-12));
}

TEST_CASE("normalize_gradients: single row is unchanged under the mean") {
  Matrix g = Matrix::from_rows({{1.0, 2.0, 2.0}});
  Matrix out = normalize_gradients(g, NormStandard::kMean);
  CHECK(out == g);
}

TEST_CASE("normalize_gradients: every standard equalizes nonzero row norms") {
  RngStream rng(81);
  Matrix grads(16, 5);
  for (double& v : grads.data) v = rng.gaussian() * (1.0 + rng.uniform() * 9.0);
  for (std::size_t j = 0; j < 5; ++j) grads.at(7, j) = 0.0;  // zero row

  for (NormStandard std_ : {NormStandard::kMin, NormStandard::kMean, NormStandard::kMax}) {
    double phi = 0.0;
    Matrix out = normalize_gradients(grads, std_, &phi);
    CHECK(phi > 0.0);
    for (std::size_t i = 0; i < out.rows; ++i) {
      if (i == 7) {
        for (std::size_t j = 0; j < 5; ++j) CHECK(out.at(i, j) == 0.0);
        continue;
      }
      CHECK(l2_norm(out.row(i)) == doctest::Approx(phi).epsilon(1e-9));
      // Direction is untouched.
      CHECK(cosine_similarity(grads.row(i), out.row(i)) ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  Matrix zeros(3, 4);
  double phi = 1.0;
  Matrix out = normalize_gradients(zeros, NormStandard::kMean, &phi);
  CHECK(out == zeros);
  CHECK(phi == 0.0);
}

TEST_CASE("sgn_noise: zero noise, sums, argmax preservation") {
  std::vector<double> target{0.0, 0.0, 1.0, 0.0, 0.0};

  RngStream rng(91);
  auto same = sgn_noise(target, 0.0, rng);
  CHECK(same == target);

  auto noised = sgn_noise(target, 0.4, rng);
  double sum = std::accumulate(noised.begin(), noised.end(), 0.0);
  CHECK(std::abs(sum - 1.0) <= 1e-12);
  CHECK(std::max_element(noised.begin(), noised.end()) - noised.begin() == 2);
  for (double v : noised) CHECK(v > 0.0);

  // Without renormalization the literal formula sums to 1 + mu.
  auto literal = sgn_noise(target, 0.4, rng, /*renormalize=*/false);
  double lsum = std::accumulate(literal.begin(), literal.end(), 0.0);
  CHECK(std::abs(lsum - 1.4) <= 1e-12);

  CHECK_THROWS_AS(sgn_noise(target, 1.0, rng), Error);
  std::vector<double> not_one_hot{0.5, 0.5};
  CHECK_THROWS_AS(sgn_noise(not_one_hot, 0.2, rng), Error);
}

TEST_CASE("sgn_noise: argmax invariant over many draws") {
  RngStream meta(92);
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t k = 2 + meta.below(30);
    std::vector<double> target(k, 0.0);
    std::size_t hot = meta.below(k);
    target[hot] = 1.0;
    double mu = meta.uniform() * 0.999;
    RngStream rng(meta.next_u64());
    auto noised = sgn_noise(target, mu, rng);
    CHECK(static_cast<std::size_t>(
              std::max_element(noised.begin(), noised.end()) - noised.begin()) ==
          hot);
  }
}

TEST_CASE("pools sidecar round trip") {
  RngStream rng(101);
  MappingPools mp = build_mapping_pools(3, 12, rng);
  std::string path =
      (std::filesystem::temp_directory_path() / "slsec_pools_test.txt").string();
  save_pools(mp, path);
  MappingPools back = load_pools(path);
  CHECK(back.k == mp.k);
  CHECK(back.K == mp.K);
  CHECK(back.seed == mp.seed);
  CHECK(back.pools == mp.pools);
  CHECK(back.code_to_class == mp.code_to_class);
  CHECK(back.pool_weights == mp.pool_weights);
  std::filesystem::remove(path);
}

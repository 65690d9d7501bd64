// SPDX-License-Identifier: Apache-2.0

#include "slsec/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "slsec/error.hpp"
#include "slsec/metrics.hpp"
#include "slsec/numerics.hpp"

using namespace slsec;

namespace {

GradientTap tap_from_rows(const Matrix& rows, bool as_embeddings = false) {
  GradientTap tap;
  std::vector<std::uint64_t> ids(rows.rows);
  for (std::size_t i = 0; i < rows.rows; ++i) ids[i] = i;
  if (as_embeddings) {
    CutLayerMessage msg;
    msg.epoch = 0;
    msg.batch_id = 0;
    msg.sample_ids = ids;
    msg.embeddings = rows;
    tap.embeddings.push_back(msg);
    // Attacks resolve their window from the gradient log too; keep one
    // matching gradient message so max_epoch is defined.
    GradientMessage g;
    g.sample_ids = ids;
    g.gradients = rows;
    tap.gradients.push_back(g);
  } else {
    GradientMessage msg;
    msg.epoch = 0;
    msg.batch_id = 0;
    msg.sample_ids = ids;
    msg.gradients = rows;
    tap.gradients.push_back(msg);
  }
  return tap;
}

}  // namespace

TEST_CASE("norm attack: perfect ordering and all-ties") {
  Matrix rows = Matrix::from_rows({{0.1, 0.0}, {0.2, 0.0}, {3.0, 0.0}});
  GradientTap tap = tap_from_rows(rows);
  AttackReport rep = norm_attack(tap);
  std::vector<int> labels{0, 0, 1};
  CHECK(leak_auc(rep.scores, labels) == doctest::Approx(1.0));

  Matrix same = Matrix::from_rows({{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}});
  AttackReport tied = norm_attack(tap_from_rows(same));
  CHECK(leak_auc(tied.scores, labels) == doctest::Approx(0.5));

  GradientTap empty;
  CHECK_THROWS_AS(norm_attack(empty), Error);
}

TEST_CASE("norm attack scores ignore gradient sign flips") {
  Matrix rows = Matrix::from_rows({{0.5, -1.0}, {2.0, 0.25}});
  AttackReport a = norm_attack(tap_from_rows(rows));
  Matrix flipped = rows;
  for (double& v : flipped.data) v = -v;
  AttackReport b = norm_attack(tap_from_rows(flipped));
  CHECK(a.scores == b.scores);
}

TEST_CASE("direction attack: pairwise-vote hand case") {
  // Four gradients near +e1, one at -e1; the majority class hint is 0.
  Matrix rows = Matrix::from_rows({{1.0, 0.01},
                                   {1.0, -0.01},
                                   {0.9, 0.02},
                                   {1.1, 0.0},
                                   {-1.0, 0.0}});
  GradientTap tap = tap_from_rows(rows);
  AttackReport rep = direction_attack(tap, 0);
  REQUIRE(rep.scores.size() == 5);
  for (int i = 0; i < 4; ++i) {
    CHECK(rep.scores[static_cast<std::size_t>(i)] == doctest::Approx(0.75));
    CHECK(rep.predicted_labels[static_cast<std::size_t>(i)] == 0);
  }
  CHECK(rep.scores[4] == doctest::Approx(0.0));
  CHECK(rep.predicted_labels[4] == 1);
}

TEST_CASE("direction attack: parallel gradients carry no signal") {
  Matrix rows = Matrix::from_rows({{1.0, 0.0}, {2.0, 0.0}, {0.5, 0.0}, {3.0, 0.0}});
  AttackReport rep = direction_attack(tap_from_rows(rows), 0);
  for (double s : rep.scores) CHECK(s == doctest::Approx(1.0));
  std::vector<int> labels{0, 0, 1, 1};
  CHECK(leak_auc(rep.scores, labels) == doctest::Approx(0.5));
}

TEST_CASE("direction attack: scale invariance and error paths") {
  Matrix rows = Matrix::from_rows({{1.0, 0.3}, {-0.5, 1.0}, {0.2, -0.9}});
  AttackReport a = direction_attack(tap_from_rows(rows), 0);
  Matrix scaled = rows;
  for (double& v : scaled.data) v *= 2.7;
  AttackReport b = direction_attack(tap_from_rows(scaled), 0);
  CHECK(a.scores == b.scores);

  AttackOptions nonbinary;
  nonbinary.task_classes = 3;
  CHECK_THROWS_AS(direction_attack(tap_from_rows(rows), 0, nonbinary), Error);

  Matrix zeros(3, 2);
  CHECK_THROWS_AS(direction_attack(tap_from_rows(zeros), 0), Error);
}

TEST_CASE("spectral attack separates two embedding clusters") {
  RngStream rng(61);
  const std::size_t n = 40;
  Matrix rows(n, 4);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i < 30 ? 0 : 1;  // imbalanced so orientation matters
    double center = labels[i] == 0 ? -5.0 : 5.0;
    rows.at(i, 0) = center + 0.1 * rng.gaussian();
    for (std::size_t j = 1; j < 4; ++j) rows.at(i, j) = 0.1 * rng.gaussian();
  }
  GradientTap tap = tap_from_rows(rows, /*as_embeddings=*/true);
  AttackReport rep = spectral_attack(tap);
  CHECK(leak_auc(rep.scores, labels) == doctest::Approx(1.0));
  // Majority cluster got the majority hint.
  std::size_t hint_count = 0;
  for (int p : rep.predicted_labels) hint_count += (p == 0);
  CHECK(hint_count == 30);
}

TEST_CASE("spectral attack: degenerate and shift-invariant inputs") {
  Matrix same(5, 3, 1.25);
  CHECK_THROWS_AS(spectral_attack(tap_from_rows(same, true)), Error);

  RngStream rng(62);
  Matrix rows(12, 3);
  for (double& v : rows.data) v = rng.gaussian();
  AttackReport a = spectral_attack(tap_from_rows(rows, true));
  Matrix shifted = rows;
  for (std::size_t i = 0; i < rows.rows; ++i)
    for (std::size_t j = 0; j < 3; ++j) shifted.at(i, j) += (j + 1) * 10.0;
  AttackReport b = spectral_attack(tap_from_rows(shifted, true));
  for (std::size_t i = 0; i < a.scores.size(); ++i)
    CHECK(a.scores[i] == doctest::Approx(b.scores[i]).epsilon(1e-6));
}

TEST_CASE("attacks leave the tap untouched") {
  RngStream rng(63);
  Matrix rows(20, 4);
  for (double& v : rows.data) v = rng.gaussian();
  GradientTap tap = tap_from_rows(rows, true);
  std::uint64_t before = tap.digest();
  norm_attack(tap);
  direction_attack(tap, 0);
  spectral_attack(tap);
  RngStream ik(1);
  infer_k_attack(tap, 2, 5, ik);
  CHECK(tap.digest() == before);
}

TEST_CASE("model completion on an untrained bottom sits near chance") {
  RngStream rng(64);
  RngStream data_rng = rng.child("data");
  const int k = 10;
  std::vector<double> weights(k, 0.1);
  // Weak separation: a 100-sample fine-tune through a random bottom should
  // hover near the 1/k floor.
  Dataset full = gen_synthetic(2100, 12, k, weights, 0.5, data_rng);
  RngStream split_rng = rng.child("split");
  auto [unlabeled, aux_pool] = train_test_split(full, 0.1, split_rng);

  // Exactly 10 aux samples per class.
  Dataset aux;
  aux.k = k;
  std::vector<int> taken(k, 0);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < aux_pool.size(); ++i) {
    int y = aux_pool.labels[i];
    if (taken[static_cast<std::size_t>(y)] < 10) {
      ++taken[static_cast<std::size_t>(y)];
      idx.push_back(i);
    }
  }
  aux.features = Matrix(idx.size(), aux_pool.dim());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    auto src = aux_pool.features.row(idx[r]);
    std::copy(src.begin(), src.end(), aux.features.row(r).begin());
    aux.labels.push_back(aux_pool.labels[idx[r]]);
  }

  RngStream net_rng = rng.child("net");
  Network bottom = Network::make({12, 16, 8},
                                 {Activation::kRelu, Activation::kIdentity}, net_rng);
  AttackReport rep = model_completion_attack(bottom, aux, unlabeled);
  double acc = accuracy(rep.predicted_labels, unlabeled.labels);
  CHECK(acc >= 1.0 / k - 0.05);
  CHECK(acc <= 1.0 / k + 0.15);

  // Width mismatch with the checkpointed bottom.
  Dataset narrow = aux;
  narrow.features = Matrix(aux.size(), 5);
  CHECK_THROWS_AS(model_completion_attack(bottom, narrow, unlabeled), Error);

  // Aux must cover every class.
  Dataset missing = aux;
  for (auto& y : missing.labels)
    if (y == 3) y = 4;
  CHECK_THROWS_AS(model_completion_attack(bottom, missing, unlabeled), Error);
}

TEST_CASE("infer_k picks out well-separated blob counts") {
  RngStream rng(65);
  auto make_blob_tap = [&](int blobs) {
    const std::size_t per = 40;
    Matrix rows(per * static_cast<std::size_t>(blobs), 6);
    RngStream dir_rng = rng.child("dirs", static_cast<std::uint64_t>(blobs));
    Matrix centers(static_cast<std::size_t>(blobs), 6);
    for (double& v : centers.data) v = 10.0 * dir_rng.gaussian();
    for (int b = 0; b < blobs; ++b) {
      for (std::size_t i = 0; i < per; ++i) {
        auto row = rows.row(static_cast<std::size_t>(b) * per + i);
        for (std::size_t j = 0; j < 6; ++j)
          row[j] = centers.at(static_cast<std::size_t>(b), j) + 0.3 * dir_rng.gaussian();
      }
    }
    return tap_from_rows(rows);
  };

  GradientTap ten = make_blob_tap(10);
  RngStream a(7);
  InferKResult res10 = infer_k_attack(ten, 2, 20, a);
  CHECK(res10.guessed_dimension == 10);

  GradientTap two = make_blob_tap(2);
  RngStream b(7);
  InferKResult res2 = infer_k_attack(two, 2, 8, b);
  CHECK(res2.guessed_dimension == 2);

  // Deterministic under a fixed seed.
  RngStream c(7);
  InferKResult again = infer_k_attack(ten, 2, 20, c);
  CHECK(again.guessed_dimension == res10.guessed_dimension);
  CHECK(again.scores == res10.scores);

  GradientTap empty;
  RngStream d(1);
  CHECK_THROWS_AS(infer_k_attack(empty, 2, 10, d), Error);
}

TEST_CASE("attack reports serialize to csv") {
  Matrix rows = Matrix::from_rows({{1.0, 0.0}, {0.0, 2.0}});
  AttackReport rep = norm_attack(tap_from_rows(rows));
  std::string path =
      (std::filesystem::temp_directory_path() / "slsec_attack_report.csv").string();
  write_report_csv(rep, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "sample_id,score,predicted_label");
  std::string line;
  std::size_t rows_read = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows_read;
  CHECK(rows_read == 2);
  std::filesystem::remove(path);
}

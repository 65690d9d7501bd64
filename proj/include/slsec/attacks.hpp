// SPDX-License-Identifier: Apache-2.0
//
// Label-inference attacks run by the honest-but-curious host over its
// gradient tap and bottom model: norm, direction, spectral, model
// completion, and cluster-count (K) inference. Attacks are pure functions of
// (tap snapshot, options); they never mutate the tap.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slsec/dataset.hpp"
#include "slsec/model.hpp"
#include "slsec/protocol.hpp"
#include "slsec/rng.hpp"

namespace slsec {

struct AttackOptions {
  // Window of tapped epochs to use; unset means the final tapped epoch,
  // where gradients are most label-correlated.
  std::optional<TapWindow> window;
  std::uint64_t seed = 0x5150ull;  // attacker-side randomness
  int task_classes = 2;
  int majority_class_hint = 0;
  std::size_t direction_reference = 512;  // pairwise-vote subsample bound
};

struct AttackReport {
  std::string attack;
  std::vector<std::uint64_t> sample_ids;
  std::vector<double> scores;        // one per sample id
  std::vector<int> predicted_labels; // empty when the attack emits only scores
  TapWindow window;                  // epochs actually used
  std::optional<double> leak;        // filled by the harness after scoring
};

// score(sample) = l2 norm of its latest cut-layer gradient.
AttackReport norm_attack(const GradientTap& tap, const AttackOptions& opts = {});

// score(sample) = fraction of reference samples with positive cosine
// similarity; binary tasks only. predicted = majority hint when the score
// exceeds 1/2.
AttackReport direction_attack(const GradientTap& tap, int majority_class_hint,
                              const AttackOptions& opts = {});

enum class SpectralSource { kEmbeddings, kGradients };

// Projects mean-centered rows onto the dominant right singular vector and
// clusters by the projection's sign; the majority-sign side is labeled with
// the majority class hint.
AttackReport spectral_attack(const GradientTap& tap,
                             SpectralSource source = SpectralSource::kEmbeddings,
                             const AttackOptions& opts = {});

struct ModelCompletionOptions {
  std::size_t head_hidden = 32;
  std::uint32_t fine_tune_epochs = 30;
  std::size_t batch_size = 16;
  double learning_rate = 0.1;
  std::uint64_t seed = 0x5150ull;
};

// Appends a fresh head [cut -> head_hidden relu -> k] to the stolen bottom
// model and fine-tunes everything on the auxiliary labeled set with plain
// supervised cross entropy, then predicts labels for the unlabeled samples.
AttackReport model_completion_attack(const Network& bottom, const Dataset& aux,
                                     const Dataset& unlabeled,
                                     const ModelCompletionOptions& opts = {});
AttackReport model_completion_attack(const std::string& bottom_checkpoint,
                                     const Dataset& aux, const Dataset& unlabeled,
                                     const ModelCompletionOptions& opts = {});

struct InferKOptions {
  std::optional<TapWindow> window;
  std::size_t max_points = 512;  // cluster at most this many gradients
  std::size_t restarts = 4;
  std::size_t kmeans_iters = 60;
};

struct InferKResult {
  int guessed_dimension = 0;
  std::map<int, double> scores;  // candidate cluster count -> CH score
};

// For every candidate c in [max(2, k), k_max]: k-means over the tapped
// per-sample gradients, Calinski-Harabasz score, argmax wins. Degenerate
// candidates are skipped; raises kDegenerate if every candidate is.
InferKResult infer_k_attack(const GradientTap& tap, int k, int k_max,
                            RngStream& rng, const InferKOptions& opts = {});

// (sample_id, score, predicted_label) rows.
void write_report_csv(const AttackReport& report, const std::string& path);

}  // namespace slsec

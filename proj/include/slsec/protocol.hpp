// SPDX-License-Identifier: Apache-2.0
//
// Two-party split training: the host owns features and the bottom model, the
// guest owns labels and the top model. Per batch the host forwards
// embeddings, the guest answers with cut-layer gradients (after any defense
// processing), and an honest-but-curious tap on the host side records the
// exchange. Transport is an in-process channel; the framed codec in
// codec.hpp serializes the same messages for trace files.

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "slsec/codec.hpp"
#include "slsec/dataset.hpp"
#include "slsec/model.hpp"
#include "slsec/secdt.hpp"

namespace slsec {

struct SplitModel {
  Network bottom;  // host: E
  Network top;     // guest: C

  std::size_t cut_width() const { return bottom.output_width(); }
  bool operator==(const SplitModel&) const = default;
};

struct TapWindow {
  std::uint32_t first_epoch = 0;
  std::uint32_t last_epoch = std::numeric_limits<std::uint32_t>::max();

  bool contains(std::uint32_t epoch) const {
    return epoch >= first_epoch && epoch <= last_epoch;
  }
  static TapWindow all() { return {}; }
  static TapWindow single(std::uint32_t epoch) { return {epoch, epoch}; }
};

// The adversary's observation log. Append-only, arrival order.
struct GradientTap {
  std::vector<CutLayerMessage> embeddings;
  std::vector<GradientMessage> gradients;
  TapWindow window;

  bool empty() const { return gradients.empty() && embeddings.empty(); }
  std::uint32_t max_epoch() const;
  // FNV-1a over the canonical frame encoding of every message in order;
  // used for determinism and read-only checks.
  std::uint64_t digest() const;
};

// One row per sample id, keeping only the newest observation inside the
// window (ordered by ascending sample id).
struct SampleRows {
  std::vector<std::uint64_t> ids;
  Matrix rows;
};
SampleRows latest_gradients(const GradientTap& tap, TapWindow window);
SampleRows latest_embeddings(const GradientTap& tap, TapWindow window);

struct TimingReport {
  double default_train_s = 0.0;
  double dim_transform_s = 0.0;
  double grad_norm_s = 0.0;
  double noise_rand_s = 0.0;
  double total_s = 0.0;
};

struct TrainConfig {
  std::uint32_t epochs = 1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  std::optional<DefenseConfig> defense;
  TapWindow tap_window = TapWindow::all();
  bool tap_enabled = true;
  OptimizerState optimizer;
};

struct TrainResult {
  SplitModel model;
  GradientTap tap;
  std::vector<double> epoch_losses;
  TimingReport timing;
  std::optional<MappingPools> pools;  // present when a defense ran
};

// Deterministic under (networks, data, cfg.seed). Batches are consecutive
// index ranges of the dataset; sample ids are dataset row indices. Raises
// kProtocol on shape disagreements and kTraining on a non-finite loss.
TrainResult run_training(Network bottom, Network top, const Dataset& train,
                         const TrainConfig& cfg);

// Alg-1 style orchestration: pools, fixed label transform, per-epoch noise,
// egress gradient normalization. Thin wrapper that insists the defense is
// configured.
TrainResult secdt_fit(Network bottom, Network top, const Dataset& train,
                      const TrainConfig& cfg);

struct UtilityReport {
  std::string metric;  // "auc" for binary tasks, "accuracy" otherwise
  double utility = 0.0;
  double accuracy_weighted = 0.0;  // weighted-mapping accuracy (plain argmax
                                   // accuracy when undefended)
  double accuracy_maximum = 0.0;   // maximum-mapping accuracy
  std::optional<double> auc;       // binary tasks only
};

// Scores the held-out set. With pools the K-dim prediction is decreased via
// weighted_mapping (maximum_mapping is also reported for comparison).
UtilityReport evaluate(const SplitModel& model, const Dataset& test,
                       const MappingPools* pools = nullptr);

}  // namespace slsec

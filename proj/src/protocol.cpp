// SPDX-License-Identifier: Apache-2.0

#include "slsec/protocol.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "slsec/error.hpp"
#include "slsec/metrics.hpp"
#include "slsec/numerics.hpp"

namespace slsec {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename M>
SampleRows collapse_latest(const std::vector<M>& messages, TapWindow window,
                           const Matrix M::* payload) {
  // Later messages overwrite earlier ones: last observation wins.
  std::map<std::uint64_t, std::vector<double>> latest;
  std::size_t width = 0;
  for (const M& msg : messages) {
    if (!window.contains(msg.epoch)) continue;
    const Matrix& rows = msg.*payload;
    width = rows.cols;
    for (std::size_t r = 0; r < rows.rows; ++r) {
      auto row = rows.row(r);
      latest[msg.sample_ids[r]].assign(row.begin(), row.end());
    }
  }
  SampleRows out;
  out.ids.reserve(latest.size());
  out.rows = Matrix(latest.size(), width);
  std::size_t r = 0;
  for (const auto& [id, row] : latest) {
    out.ids.push_back(id);
    std::copy(row.begin(), row.end(), out.rows.row(r).begin());
    ++r;
  }
  return out;
}

}  // namespace

std::uint32_t GradientTap::max_epoch() const {
  std::uint32_t mx = 0;
  for (const auto& m : embeddings) mx = std::max(mx, m.epoch);
  for (const auto& m : gradients) mx = std::max(mx, m.epoch);
  return mx;
}

std::uint64_t GradientTap::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const std::vector<std::uint8_t>& bytes) {
    for (std::uint8_t b : bytes) {
      h ^= b;
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& m : embeddings) mix(encode_frame(Message{m}));
  for (const auto& m : gradients) mix(encode_frame(Message{m}));
  return h;
}

SampleRows latest_gradients(const GradientTap& tap, TapWindow window) {
  return collapse_latest(tap.gradients, window, &GradientMessage::gradients);
}

SampleRows latest_embeddings(const GradientTap& tap, TapWindow window) {
  return collapse_latest(tap.embeddings, window, &CutLayerMessage::embeddings);
}

TrainResult run_training(Network bottom, Network top, const Dataset& train,
                         const TrainConfig& cfg) {
  const std::size_t n = train.size();
  require(n > 0, ErrorKind::kArgument, "run_training: empty training set");
  require(cfg.epochs >= 1, ErrorKind::kArgument, "run_training: epochs must be >= 1");
  require(cfg.batch_size >= 1, ErrorKind::kArgument,
          "run_training: batch size must be >= 1");
  require(bottom.input_width() == train.dim(), ErrorKind::kProtocol,
          "run_training: bottom input width != feature dim");
  require(bottom.output_width() == top.input_width(), ErrorKind::kProtocol,
          "run_training: cut widths disagree between parties");

  const auto t_start = Clock::now();
  TrainResult result;
  result.tap.window = cfg.tap_window;
  RngStream rng(cfg.seed);

  // Guest side: build targets in the (possibly increased) label space.
  Matrix base_targets;
  double dim_transform_s = 0.0;
  if (cfg.defense) {
    validate_defense(*cfg.defense, train.k);
    require(top.output_width() == static_cast<std::size_t>(cfg.defense->K),
            ErrorKind::kProtocol,
            "run_training: top output width != defense K");
    const auto t0 = Clock::now();
    RngStream pool_rng = rng.child("secdt.pools");
    MappingPools pools = build_mapping_pools(train.k, cfg.defense->K, pool_rng);
    RngStream assign_rng = rng.child("secdt.assign");
    base_targets = transform_labels(train.labels, pools, assign_rng);
    dim_transform_s = seconds_since(t0);
    result.pools = std::move(pools);
  } else {
    require(top.output_width() == static_cast<std::size_t>(train.k),
            ErrorKind::kProtocol,
            "run_training: top output width != class count");
    base_targets = one_hot(train.labels, train.k);
  }

  const bool noisy = cfg.defense && cfg.defense->mu > 0.0;
  const NormStandard standard =
      cfg.defense ? cfg.defense->norm_standard : NormStandard::kOff;
  OptimizerState opt_bottom = cfg.optimizer;
  OptimizerState opt_top = cfg.optimizer;

  Matrix targets = base_targets;
  double noise_s = 0.0, norm_s = 0.0;
  const std::size_t n_batches = (n + cfg.batch_size - 1) / cfg.batch_size;

  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (noisy && (cfg.defense->noise_resample == NoiseResample::kPerEpoch ||
                  epoch == 0)) {
      const auto t0 = Clock::now();
      RngStream noise_rng = rng.child("secdt.noise", epoch);
      targets = apply_sgn_noise(base_targets, cfg.defense->mu, noise_rng,
                                cfg.defense->renormalize_targets);
      noise_s += seconds_since(t0);
    }

    double loss_sum = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t lo = b * cfg.batch_size;
      const std::size_t hi = std::min(lo + cfg.batch_size, n);
      const std::size_t rows = hi - lo;

      Matrix xb(rows, train.dim());
      Matrix tb(rows, targets.cols);
      std::vector<std::uint64_t> ids(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        auto src = train.features.row(lo + r);
        std::copy(src.begin(), src.end(), xb.row(r).begin());
        auto tsrc = targets.row(lo + r);
        std::copy(tsrc.begin(), tsrc.end(), tb.row(r).begin());
        ids[r] = lo + r;
      }

      // Host: forward embedding, ship it to the guest.
      ForwardTrace host_trace = forward(bottom, xb);
      CutLayerMessage fwd{epoch, static_cast<std::uint32_t>(b), ids,
                          host_trace.output()};
      const bool tapped = cfg.tap_enabled && cfg.tap_window.contains(epoch);
      if (tapped) result.tap.embeddings.push_back(fwd);

      // Guest: finish the forward pass, compute loss, backprop the top.
      ForwardTrace guest_trace = forward(top, fwd.embeddings);
      CrossEntropyResult ce = cross_entropy_soft(guest_trace.output(), tb);
      if (!std::isfinite(ce.loss)) {
        raise(ErrorKind::kTraining,
              "run_training: non-finite loss at epoch " + std::to_string(epoch) +
                  ", batch " + std::to_string(b));
      }
      Gradients top_grads = backward(top, guest_trace, ce.grad_logits);
      sgd_step(top, top_grads, opt_top);

      Matrix cut_grads = std::move(top_grads.input_grad);
      if (standard != NormStandard::kOff) {
        const auto t0 = Clock::now();
        cut_grads = normalize_gradients(cut_grads, standard);
        norm_s += seconds_since(t0);
      }
      GradientMessage bwd{epoch, static_cast<std::uint32_t>(b), ids, cut_grads};
      if (tapped) result.tap.gradients.push_back(bwd);

      // Host: backprop the bottom with the received gradient.
      Gradients bottom_grads = backward(bottom, host_trace, bwd.gradients);
      sgd_step(bottom, bottom_grads, opt_bottom);

      loss_sum += ce.loss * static_cast<double>(rows);
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(n));
  }

  result.model = SplitModel{std::move(bottom), std::move(top)};
  result.timing.total_s = seconds_since(t_start);
  result.timing.dim_transform_s = dim_transform_s;
  result.timing.noise_rand_s = noise_s;
  result.timing.grad_norm_s = norm_s;
  result.timing.default_train_s =
      result.timing.total_s - dim_transform_s - noise_s - norm_s;
  return result;
}

TrainResult secdt_fit(Network bottom, Network top, const Dataset& train,
                      const TrainConfig& cfg) {
  require(cfg.defense.has_value(), ErrorKind::kArgument,
          "secdt_fit: defense config required");
  return run_training(std::move(bottom), std::move(top), train, cfg);
}

UtilityReport evaluate(const SplitModel& model, const Dataset& test,
                       const MappingPools* pools) {
  require(test.size() > 0, ErrorKind::kArgument, "evaluate: empty test set");
  if (pools) {
    require(model.top.output_width() == static_cast<std::size_t>(pools->K),
            ErrorKind::kArgument, "evaluate: top output width != pools K");
  } else {
    require(model.top.output_width() == static_cast<std::size_t>(test.k),
            ErrorKind::kArgument, "evaluate: top output width != class count");
  }

  ForwardTrace bottom_trace = forward(model.bottom, test.features);
  ForwardTrace top_trace = forward(model.top, bottom_trace.output());
  const Matrix& logits = top_trace.output();

  std::vector<int> pred_weighted(test.size()), pred_maximum(test.size());
  std::vector<double> binary_scores(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    std::vector<double> p = softmax(logits.row(i));
    if (pools) {
      pred_weighted[i] = weighted_mapping(p, *pools);
      pred_maximum[i] = maximum_mapping(p, *pools);
      if (test.k == 2) {
        // Pool mass of class 1; pools partition the codes, so this is a
        // proper probability.
        double s = 0.0;
        for (int code : pools->pools[1]) s += p[static_cast<std::size_t>(code)];
        binary_scores[i] = s;
      }
    } else {
      int arg = 0;
      for (std::size_t j = 1; j < p.size(); ++j)
        if (p[j] > p[static_cast<std::size_t>(arg)]) arg = static_cast<int>(j);
      pred_weighted[i] = arg;
      pred_maximum[i] = arg;
      if (test.k == 2) binary_scores[i] = p[1];
    }
  }

  UtilityReport report;
  report.accuracy_weighted = accuracy(pred_weighted, test.labels);
  report.accuracy_maximum = accuracy(pred_maximum, test.labels);
  if (test.k == 2) {
    report.metric = "auc";
    report.auc = roc_auc(binary_scores, test.labels);
    report.utility = *report.auc;
  } else {
    report.metric = "accuracy";
    report.utility = report.accuracy_weighted;
  }
  return report;
}

}  // namespace slsec

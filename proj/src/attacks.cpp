// SPDX-License-Identifier: Apache-2.0

#include "slsec/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "slsec/error.hpp"
#include "slsec/numerics.hpp"

namespace slsec {

namespace {

TapWindow resolve_window(const GradientTap& tap, const AttackOptions& opts) {
  if (opts.window) return *opts.window;
  return TapWindow::single(tap.max_epoch());
}

}  // namespace

AttackReport norm_attack(const GradientTap& tap, const AttackOptions& opts) {
  require(!tap.gradients.empty(), ErrorKind::kArgument,
          "norm_attack: empty gradient tap");
  TapWindow window = resolve_window(tap, opts);
  SampleRows rows = latest_gradients(tap, window);
  require(rows.ids.size() > 0, ErrorKind::kArgument,
          "norm_attack: no gradients inside the window");

  AttackReport report;
  report.attack = "norm";
  report.window = window;
  report.sample_ids = rows.ids;
  report.scores.resize(rows.ids.size());
  for (std::size_t i = 0; i < rows.ids.size(); ++i)
    report.scores[i] = l2_norm(rows.rows.row(i));
  return report;
}

AttackReport direction_attack(const GradientTap& tap, int majority_class_hint,
                              const AttackOptions& opts) {
  require(!tap.gradients.empty(), ErrorKind::kArgument,
          "direction_attack: empty gradient tap");
  require(opts.task_classes == 2, ErrorKind::kUnsupported,
          "direction_attack: binary tasks only");
  require(majority_class_hint == 0 || majority_class_hint == 1,
          ErrorKind::kArgument, "direction_attack: hint must be 0 or 1");

  TapWindow window = resolve_window(tap, opts);
  SampleRows all = latest_gradients(tap, window);

  // Zero-norm gradients carry no direction; exclude them.
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < all.ids.size(); ++i)
    if (l2_norm(all.rows.row(i)) > 0.0) keep.push_back(i);
  require(!keep.empty(), ErrorKind::kDegenerate,
          "direction_attack: all gradients are zero");

  // Seeded reference subsample bounds the O(n^2) vote.
  std::vector<std::size_t> ref = keep;
  if (ref.size() > opts.direction_reference) {
    RngStream rng(opts.seed);
    rng.shuffle(ref);
    ref.resize(opts.direction_reference);
    std::sort(ref.begin(), ref.end());
  }

  AttackReport report;
  report.attack = "direction";
  report.window = window;
  const int minority = 1 - majority_class_hint;
  for (std::size_t i : keep) {
    auto gi = all.rows.row(i);
    std::size_t positive = 0, counted = 0;
    for (std::size_t j : ref) {
      if (j == i) continue;
      double dot = 0.0;
      for (std::size_t t = 0; t < gi.size(); ++t) dot += gi[t] * all.rows.row(j)[t];
      positive += (dot > 0.0);
      ++counted;
    }
    double score = counted ? static_cast<double>(positive) /
                                 static_cast<double>(counted)
                           : 1.0;
    report.sample_ids.push_back(all.ids[i]);
    report.scores.push_back(score);
    report.predicted_labels.push_back(score > 0.5 ? majority_class_hint
                                                  : minority);
  }
  return report;
}

AttackReport spectral_attack(const GradientTap& tap, SpectralSource source,
                             const AttackOptions& opts) {
  TapWindow window = resolve_window(tap, opts);
  SampleRows rows = source == SpectralSource::kEmbeddings
                        ? latest_embeddings(tap, window)
                        : latest_gradients(tap, window);
  require(rows.ids.size() >= 2, ErrorKind::kArgument,
          "spectral_attack: need at least 2 samples");

  const std::size_t n = rows.ids.size(), d = rows.rows.cols;
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = rows.rows.row(i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  Matrix centered(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto src = rows.rows.row(i);
    auto dst = centered.row(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] - mean[j];
  }

  SingularPair top = top_singular_vector(centered);  // kDegenerate on zero matrix

  std::vector<double> scores(n);
  std::size_t positive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    auto r = centered.row(i);
    for (std::size_t j = 0; j < d; ++j) s += r[j] * top.vector[j];
    scores[i] = s;
    positive += (s > 0.0);
  }
  // Orient so the majority-sign cluster sits on the negative side and gets
  // the majority class hint; the minority side scores higher.
  if (positive > n - positive) {
    for (double& s : scores) s = -s;
  }

  AttackReport report;
  report.attack = source == SpectralSource::kEmbeddings ? "spectral"
                                                        : "spectral_gradients";
  report.window = window;
  report.sample_ids = rows.ids;
  report.scores = std::move(scores);
  const int minority = 1 - opts.majority_class_hint;
  report.predicted_labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    report.predicted_labels[i] =
        report.scores[i] > 0.0 ? minority : opts.majority_class_hint;
  }
  return report;
}

AttackReport model_completion_attack(const Network& bottom, const Dataset& aux,
                                     const Dataset& unlabeled,
                                     const ModelCompletionOptions& opts) {
  require(aux.size() > 0 && unlabeled.size() > 0, ErrorKind::kArgument,
          "model_completion_attack: empty dataset");
  require(bottom.input_width() == aux.dim() && aux.dim() == unlabeled.dim(),
          ErrorKind::kArgument,
          "model_completion_attack: feature width mismatch with checkpoint");
  std::vector<int> counts(static_cast<std::size_t>(aux.k), 0);
  for (int y : aux.labels) ++counts[static_cast<std::size_t>(y)];
  for (int c : counts) {
    require(c >= 1, ErrorKind::kArgument,
            "model_completion_attack: aux needs >= 1 sample per class");
  }

  // Fresh random head on top of the stolen bottom, then fine-tune everything.
  RngStream rng(opts.seed);
  RngStream head_rng = rng.child("mc.head");
  Network head = Network::make(
      {bottom.output_width(), opts.head_hidden, static_cast<std::size_t>(aux.k)},
      {Activation::kRelu, Activation::kSoftmaxAtLoss}, head_rng);
  Network complete = stack(bottom, head);

  Matrix targets = one_hot(aux.labels, aux.k);
  OptimizerState opt;
  opt.learning_rate = opts.learning_rate;
  const std::size_t n = aux.size();
  const std::size_t n_batches = (n + opts.batch_size - 1) / opts.batch_size;
  for (std::uint32_t epoch = 0; epoch < opts.fine_tune_epochs; ++epoch) {
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t lo = b * opts.batch_size;
      const std::size_t hi = std::min(lo + opts.batch_size, n);
      Matrix xb(hi - lo, aux.dim());
      Matrix tb(hi - lo, targets.cols);
      for (std::size_t r = 0; r < hi - lo; ++r) {
        auto src = aux.features.row(lo + r);
        std::copy(src.begin(), src.end(), xb.row(r).begin());
        auto tsrc = targets.row(lo + r);
        std::copy(tsrc.begin(), tsrc.end(), tb.row(r).begin());
      }
      ForwardTrace trace = forward(complete, xb);
      CrossEntropyResult ce = cross_entropy_soft(trace.output(), tb);
      Gradients grads = backward(complete, trace, ce.grad_logits);
      sgd_step(complete, grads, opt);
    }
  }

  ForwardTrace trace = forward(complete, unlabeled.features);
  const Matrix& logits = trace.output();
  AttackReport report;
  report.attack = "model_completion";
  report.sample_ids.resize(unlabeled.size());
  std::iota(report.sample_ids.begin(), report.sample_ids.end(),
            std::uint64_t{0});
  report.scores.resize(unlabeled.size());
  report.predicted_labels.resize(unlabeled.size());
  for (std::size_t i = 0; i < unlabeled.size(); ++i) {
    std::vector<double> p = softmax(logits.row(i));
    int arg = 0;
    for (std::size_t j = 1; j < p.size(); ++j)
      if (p[j] > p[static_cast<std::size_t>(arg)]) arg = static_cast<int>(j);
    report.predicted_labels[i] = arg;
    report.scores[i] = aux.k == 2 ? p[1] : p[static_cast<std::size_t>(arg)];
  }
  return report;
}

AttackReport model_completion_attack(const std::string& bottom_checkpoint,
                                     const Dataset& aux, const Dataset& unlabeled,
                                     const ModelCompletionOptions& opts) {
  Network bottom = load_network(bottom_checkpoint);
  return model_completion_attack(bottom, aux, unlabeled, opts);
}

InferKResult infer_k_attack(const GradientTap& tap, int k, int k_max,
                            RngStream& rng, const InferKOptions& opts) {
  require(!tap.gradients.empty(), ErrorKind::kArgument,
          "infer_k_attack: empty gradient tap");
  require(k_max >= 2, ErrorKind::kArgument, "infer_k_attack: k_max must be >= 2");

  TapWindow window =
      opts.window ? *opts.window : TapWindow::single(tap.max_epoch());
  SampleRows all = latest_gradients(tap, window);

  Matrix points = std::move(all.rows);
  if (points.rows > opts.max_points) {
    std::vector<std::size_t> idx(points.rows);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    RngStream sub_rng = rng.child("inferk.subsample");
    sub_rng.shuffle(idx);
    idx.resize(opts.max_points);
    std::sort(idx.begin(), idx.end());
    Matrix sub(opts.max_points, points.cols);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto src = points.row(idx[r]);
      std::copy(src.begin(), src.end(), sub.row(r).begin());
    }
    points = std::move(sub);
  }

  InferKResult result;
  int best_c = 0;
  double best_score = -1.0;
  for (int c = std::max(2, k); c <= k_max; ++c) {
    if (static_cast<std::size_t>(c) >= points.rows) break;
    RngStream km_rng = rng.child("inferk.kmeans", static_cast<std::uint64_t>(c));
    try {
      KMeansResult km = kmeans(points, static_cast<std::size_t>(c), km_rng,
                               opts.restarts, opts.kmeans_iters);
      double score = calinski_harabasz(points, km.assignment);
      result.scores[c] = score;
      if (score > best_score) {
        best_score = score;
        best_c = c;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerate) throw;
      // skip this candidate
    }
  }
  require(best_c != 0, ErrorKind::kDegenerate,
          "infer_k_attack: every candidate cluster count was degenerate");
  result.guessed_dimension = best_c;
  return result;
}

void write_report_csv(const AttackReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorKind::kIo, "write_report_csv: cannot open " + path);
  out << "sample_id,score,predicted_label\n";
  for (std::size_t i = 0; i < report.sample_ids.size(); ++i) {
    out << report.sample_ids[i] << "," << report.scores[i] << ",";
    if (i < report.predicted_labels.size()) out << report.predicted_labels[i];
    out << "\n";
  }
  require(out.good(), ErrorKind::kIo, "write_report_csv: write failed");
}

}  // namespace slsec

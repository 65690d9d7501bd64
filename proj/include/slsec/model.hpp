// SPDX-License-Identifier: Apache-2.0
//
// Feedforward networks with explicit forward/backward passes. These supply
// the bottom model (host side), the top model (guest side), and the
// per-sample cut-layer gradients the protocol exchanges.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slsec/matrix.hpp"
#include "slsec/rng.hpp"

namespace slsec {

// kSoftmaxAtLoss forwards as identity; the softmax is folded into
// cross_entropy_soft. It marks the layer that emits logits.
enum class Activation : std::uint8_t {
  kIdentity = 0,
  kRelu = 1,
  kSoftmaxAtLoss = 2,
};

struct DenseLayer {
  Matrix weights;            // out × in
  std::vector<double> bias;  // out
  Activation activation = Activation::kIdentity;

  std::size_t fan_in() const { return weights.cols; }
  std::size_t fan_out() const { return weights.rows; }
  bool operator==(const DenseLayer&) const = default;
};

struct Network {
  std::vector<DenseLayer> layers;

  std::size_t input_width() const { return layers.front().fan_in(); }
  std::size_t output_width() const { return layers.back().fan_out(); }
  bool operator==(const Network&) const = default;

  // widths = {in, h1, ..., out}; weights uniform in
  // [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))], biases zero.
  static Network make(const std::vector<std::size_t>& widths,
                      const std::vector<Activation>& activations,
                      RngStream& rng);
};

// Concatenation e then c; used by the monolithic-training oracle.
Network stack(const Network& e, const Network& c);

struct ForwardTrace {
  Matrix input;
  std::vector<Matrix> pre;   // per-layer pre-activations
  std::vector<Matrix> post;  // per-layer activations

  const Matrix& output() const { return post.back(); }
};

ForwardTrace forward(const Network& net, const Matrix& x);

struct Gradients {
  std::vector<Matrix> weight_grads;
  std::vector<std::vector<double>> bias_grads;
  Matrix input_grad;  // batch × input_width; the cut-layer g for a top model
};

Gradients backward(const Network& net, const ForwardTrace& trace,
                   const Matrix& grad_out);

struct CrossEntropyResult {
  double loss = 0.0;
  Matrix grad_logits;
};

// Mean-reduced soft-target cross entropy: loss = mean_i(-sum_j t_ij log p_ij)
// with p = softmax(logits). grad_logits row i is (s_i * p_i - t_i)/batch
// where s_i = sum_j t_ij; equal to (p - t)/batch for normalized targets and
// still the exact derivative when a caller feeds unnormalized soft targets.
CrossEntropyResult cross_entropy_soft(const Matrix& logits, const Matrix& targets);

struct OptimizerState {
  enum class Schedule { kConstant, kInverseTime };

  double learning_rate = 0.1;
  Schedule schedule = Schedule::kConstant;
  double decay = 0.01;        // inverse-time: eta_t = eta / (1 + decay * t)
  std::uint64_t step = 0;

  double current_rate() const {
    if (schedule == Schedule::kConstant) return learning_rate;
    return learning_rate / (1.0 + decay * static_cast<double>(step));
  }
};

// theta <- theta - eta_t * grad, then advances the schedule step. Raises
// kTraining on a non-finite gradient.
void sgd_step(Network& net, const Gradients& grads, OptimizerState& opt);

// Versioned binary checkpoint: magic "SLMD", u16 LE version, u32 LE layer
// count, then per layer u32 out, u32 in, u8 activation, f64 LE weights
// (row-major) and biases.
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

}  // namespace slsec

// SPDX-License-Identifier: Apache-2.0

#include "slsec/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include "slsec/error.hpp"

namespace slsec {

Network Network::make(const std::vector<std::size_t>& widths,
                      const std::vector<Activation>& activations,
                      RngStream& rng) {
  require(widths.size() >= 2, ErrorKind::kArgument,
          "Network::make: need at least input and output widths");
  require(activations.size() == widths.size() - 1, ErrorKind::kArgument,
          "Network::make: one activation per layer required");
  Network net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.activation = activations[l];
    layer.weights = Matrix(widths[l + 1], widths[l]);
    layer.bias.assign(widths[l + 1], 0.0);
    double bound = std::sqrt(6.0 / static_cast<double>(widths[l] + widths[l + 1]));
    for (double& w : layer.weights.data) w = bound * (2.0 * rng.uniform() - 1.0);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Network stack(const Network& e, const Network& c) {
  require(e.output_width() == c.input_width(), ErrorKind::kArgument,
          "stack: cut widths differ");
  Network out = e;
  out.layers.insert(out.layers.end(), c.layers.begin(), c.layers.end());
  return out;
}

ForwardTrace forward(const Network& net, const Matrix& x) {
  require(!net.layers.empty(), ErrorKind::kArgument, "forward: empty network");
  require(x.cols == net.input_width(), ErrorKind::kArgument,
          "forward: input width mismatch");
  ForwardTrace trace;
  trace.input = x;
  const Matrix* cur = &trace.input;
  for (const DenseLayer& layer : net.layers) {
    Matrix z = mul_abt(*cur, layer.weights);
    for (std::size_t i = 0; i < z.rows; ++i) {
      auto row = z.row(i);
      for (std::size_t j = 0; j < z.cols; ++j) row[j] += layer.bias[j];
    }
    Matrix a = z;
    if (layer.activation == Activation::kRelu) {
      for (double& v : a.data) v = v > 0.0 ? v : 0.0;
    }
    trace.pre.push_back(std::move(z));
    trace.post.push_back(std::move(a));
    cur = &trace.post.back();
  }
  return trace;
}

Gradients backward(const Network& net, const ForwardTrace& trace,
                   const Matrix& grad_out) {
  const std::size_t n_layers = net.layers.size();
  require(trace.post.size() == n_layers, ErrorKind::kArgument,
          "backward: trace does not match network");
  require(grad_out.same_shape(trace.output()), ErrorKind::kArgument,
          "backward: grad_out shape mismatch");

  Gradients grads;
  grads.weight_grads.resize(n_layers);
  grads.bias_grads.resize(n_layers);

  Matrix d_act = grad_out;
  for (std::size_t li = n_layers; li-- > 0;) {
    const DenseLayer& layer = net.layers[li];
    Matrix dz = std::move(d_act);
    if (layer.activation == Activation::kRelu) {
      const Matrix& z = trace.pre[li];
      for (std::size_t i = 0; i < dz.data.size(); ++i)
        if (z.data[i] <= 0.0) dz.data[i] = 0.0;
    }
    const Matrix& below = li == 0 ? trace.input : trace.post[li - 1];
    grads.weight_grads[li] = mul_atb(dz, below);  // out × in
    auto& db = grads.bias_grads[li];
    db.assign(layer.fan_out(), 0.0);
    for (std::size_t i = 0; i < dz.rows; ++i) {
      auto row = dz.row(i);
      for (std::size_t j = 0; j < dz.cols; ++j) db[j] += row[j];
    }
    d_act = mul(dz, layer.weights);  // batch × in
  }
  grads.input_grad = std::move(d_act);
  return grads;
}

CrossEntropyResult cross_entropy_soft(const Matrix& logits, const Matrix& targets) {
  require(logits.same_shape(targets), ErrorKind::kArgument,
          "cross_entropy_soft: shape mismatch");
  require(logits.rows > 0 && logits.cols > 0, ErrorKind::kArgument,
          "cross_entropy_soft: empty batch");
  for (double t : targets.data) {
    require(t >= 0.0, ErrorKind::kArgument,
            "cross_entropy_soft: negative target entry");
  }

  const double inv_batch = 1.0 / static_cast<double>(logits.rows);
  CrossEntropyResult res;
  res.grad_logits = Matrix(logits.rows, logits.cols);
  double loss = 0.0;
  std::vector<double> p(logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    auto zr = logits.row(i);
    auto tr = targets.row(i);
    double mx = *std::max_element(zr.begin(), zr.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < zr.size(); ++j) {
      p[j] = std::exp(zr[j] - mx);
      sum += p[j];
    }
    double log_sum = std::log(sum);
    double t_sum = 0.0;
    for (std::size_t j = 0; j < zr.size(); ++j) {
      p[j] /= sum;
      t_sum += tr[j];
      // log p = (z - mx) - log_sum, evaluated without going through p.
      if (tr[j] != 0.0) loss -= tr[j] * ((zr[j] - mx) - log_sum);
    }
    auto gr = res.grad_logits.row(i);
    for (std::size_t j = 0; j < zr.size(); ++j)
      gr[j] = (t_sum * p[j] - tr[j]) * inv_batch;
  }
  res.loss = loss * inv_batch;
  return res;
}

void sgd_step(Network& net, const Gradients& grads, OptimizerState& opt) {
  require(grads.weight_grads.size() == net.layers.size() &&
              grads.bias_grads.size() == net.layers.size(),
          ErrorKind::kArgument, "sgd_step: gradient count mismatch");
  require(opt.learning_rate > 0.0, ErrorKind::kArgument,
          "sgd_step: learning rate must be > 0");
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    require(grads.weight_grads[li].same_shape(net.layers[li].weights) &&
                grads.bias_grads[li].size() == net.layers[li].bias.size(),
            ErrorKind::kArgument, "sgd_step: gradient shape mismatch");
    if (!grads.weight_grads[li].all_finite()) {
      raise(ErrorKind::kTraining, "sgd_step: non-finite weight gradient in layer " +
                                      std::to_string(li));
    }
    for (double g : grads.bias_grads[li]) {
      if (!std::isfinite(g)) {
        raise(ErrorKind::kTraining, "sgd_step: non-finite bias gradient in layer " +
                                        std::to_string(li));
      }
    }
  }
  const double eta = opt.current_rate();
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    DenseLayer& layer = net.layers[li];
    const Matrix& dw = grads.weight_grads[li];
    for (std::size_t i = 0; i < layer.weights.data.size(); ++i)
      layer.weights.data[i] -= eta * dw.data[i];
    const auto& db = grads.bias_grads[li];
    for (std::size_t j = 0; j < layer.bias.size(); ++j)
      layer.bias[j] -= eta * db[j];
  }
  ++opt.step;
}

namespace {

constexpr char kMagic[4] = {'S', 'L', 'M', 'D'};
constexpr std::uint16_t kVersion = 1;

void put_bytes(std::ostream& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_bytes(std::istream& in, int n, const std::string& what) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) {
    int c = in.get();
    require(c != std::char_traits<char>::eof(), ErrorKind::kFormat,
            "load_network: truncated " + what);
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

void put_f64(std::ostream& out, double x) {
  put_bytes(out, std::bit_cast<std::uint64_t>(x), 8);
}

double get_f64(std::istream& in, const std::string& what) {
  return std::bit_cast<double>(get_bytes(in, 8, what));
}

}  // namespace

void save_network(const Network& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::kIo, "save_network: cannot open " + path);
  out.write(kMagic, 4);
  put_bytes(out, kVersion, 2);
  put_bytes(out, net.layers.size(), 4);
  for (const DenseLayer& layer : net.layers) {
    put_bytes(out, layer.fan_out(), 4);
    put_bytes(out, layer.fan_in(), 4);
    out.put(static_cast<char>(layer.activation));
    for (double w : layer.weights.data) put_f64(out, w);
    for (double b : layer.bias) put_f64(out, b);
  }
  require(out.good(), ErrorKind::kIo, "save_network: write failed for " + path);
}

Network load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kIo, "load_network: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  require(in.gcount() == 4 && std::equal(magic, magic + 4, kMagic),
          ErrorKind::kFormat, "load_network: bad magic in " + path);
  auto version = get_bytes(in, 2, "version");
  require(version == kVersion, ErrorKind::kFormat,
          "load_network: unsupported version " + std::to_string(version));
  auto n_layers = get_bytes(in, 4, "layer count");
  Network net;
  for (std::uint64_t li = 0; li < n_layers; ++li) {
    auto out_w = get_bytes(in, 4, "layer dims");
    auto in_w = get_bytes(in, 4, "layer dims");
    int act = in.get();
    require(act != std::char_traits<char>::eof() && act <= 2, ErrorKind::kFormat,
            "load_network: bad activation byte");
    DenseLayer layer;
    layer.activation = static_cast<Activation>(act);
    layer.weights = Matrix(out_w, in_w);
    for (double& w : layer.weights.data) w = get_f64(in, "weights");
    layer.bias.resize(out_w);
    for (double& b : layer.bias) b = get_f64(in, "bias");
    net.layers.push_back(std::move(layer));
  }
  require(!net.layers.empty(), ErrorKind::kFormat, "load_network: empty network");
  return net;
}

}  // namespace slsec

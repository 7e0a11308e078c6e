#include "fin/net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fin/errors.hpp"
#include "fin/kernels.hpp"
#include "fin/rng.hpp"

namespace fin::nn {

namespace {

constexpr std::size_t kEvalChunk = 512;

void softmax_rows(Matrix& z) {
  for (std::size_t r = 0; r < z.rows; ++r) {
    auto row = z.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
}

void check_targets(const Matrix& output, const Matrix& targets) {
  if (output.rows != targets.rows || output.cols != targets.cols)
    throw ShapeError("targets are " + std::to_string(targets.rows) + "x" + std::to_string(targets.cols) +
                     ", outputs are " + std::to_string(output.rows) + "x" + std::to_string(output.cols));
}

double cross_entropy(const Matrix& logits, const Matrix& targets) {
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows; ++r) {
    const auto z = logits.row(r);
    const auto t = targets.row(r);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t k = 0; k < z.size(); ++k)
      if (t[k] != 0.0) total += t[k] * (lse - z[k]);
  }
  return total / static_cast<double>(logits.rows);
}

double mean_squared_error(const Matrix& output, const Matrix& targets) {
  double total = 0.0;
  for (std::size_t i = 0; i < output.data.size(); ++i) {
    const double d = output.data[i] - targets.data[i];
    total += d * d;
  }
  return total / static_cast<double>(output.data.size());
}

}  // namespace

std::string_view activation_name(Activation a) noexcept {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Linear: return "linear";
    case Activation::Softmax: return "softmax";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  for (auto a : {Activation::Relu, Activation::Tanh, Activation::Linear, Activation::Softmax})
    if (activation_name(a) == name) return a;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

void Topology::validate() const {
  if (layer_sizes.size() < 2) throw std::invalid_argument("topology needs an input and at least one layer");
  if (activations.size() != layer_sizes.size() - 1)
    throw std::invalid_argument("topology needs one activation per non-input layer");
  for (std::size_t s : layer_sizes)
    if (s == 0) throw std::invalid_argument("layer sizes must be positive");
  for (std::size_t i = 0; i + 1 < activations.size(); ++i)
    if (activations[i] == Activation::Softmax) throw std::invalid_argument("softmax is only allowed on the final layer");
}

std::string Topology::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(layer_sizes[i]);
  }
  s += ' ';
  for (std::size_t i = 0; i < activations.size(); ++i) {
    if (i) s += ',';
    s += activation_name(activations[i]);
  }
  return s;
}

std::size_t count_params(const Topology& topology) {
  topology.validate();
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < topology.layer_sizes.size(); ++l)
    n += topology.layer_sizes[l + 1] * topology.layer_sizes[l] + topology.layer_sizes[l + 1];
  return n;
}

Topology DenseNet::topology() const {
  Topology t;
  if (layers.empty()) return t;
  t.layer_sizes.push_back(layers.front().in);
  for (const auto& l : layers) {
    t.layer_sizes.push_back(l.out);
    t.activations.push_back(l.activation);
  }
  return t;
}

void DenseNet::validate() const {
  if (layers.empty()) throw ShapeError("network has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.in == 0 || l.out == 0) throw ShapeError("layer " + std::to_string(i) + " has a zero dimension");
    if (i > 0 && l.in != layers[i - 1].out) throw ShapeError("layer " + std::to_string(i) + " input does not chain");
    if (l.weights.size() != l.in * l.out || l.biases.size() != l.out)
      throw ShapeError("layer " + std::to_string(i) + " parameter arrays have the wrong size");
    if (l.activation == Activation::Softmax && i + 1 != layers.size())
      throw ShapeError("softmax is only allowed on the final layer");
    for (double v : l.weights)
      if (!std::isfinite(v)) throw ShapeError("non-finite weight in layer " + std::to_string(i));
    for (double v : l.biases)
      if (!std::isfinite(v)) throw ShapeError("non-finite bias in layer " + std::to_string(i));
  }
}

Layer init_layer(std::size_t in, std::size_t out, Activation activation, std::uint64_t seed) {
  Layer layer;
  layer.in = in;
  layer.out = out;
  layer.activation = activation;
  layer.weights.resize(in * out);
  layer.biases.assign(out, 0.0);
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  Rng rng(seed);
  for (double& w : layer.weights) w = rng.uniform(-limit, limit);
  return layer;
}

DenseNet init_random(const Topology& topology, std::uint64_t seed) {
  topology.validate();
  DenseNet net;
  for (std::size_t l = 0; l < topology.n_layers(); ++l)
    net.layers.push_back(init_layer(topology.layer_sizes[l], topology.layer_sizes[l + 1], topology.activations[l],
                                    derive_seed(seed, "layer", l)));
  return net;
}

void activate(Activation a, Matrix& z) {
  switch (a) {
    case Activation::Relu:
      for (double& v : z.data) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::Tanh:
      for (double& v : z.data) v = std::tanh(v);
      break;
    case Activation::Linear: break;
    case Activation::Softmax: softmax_rows(z); break;
  }
}

ForwardCache forward_cached(const DenseNet& net, const Matrix& input) {
  if (net.layers.empty()) throw ShapeError("network has no layers");
  if (input.cols != net.input_dim())
    throw ShapeError("input width " + std::to_string(input.cols) + " != network input " +
                     std::to_string(net.input_dim()));
  ForwardCache cache;
  cache.input = &input;
  cache.outputs.reserve(net.layers.size());
  const std::size_t n = input.rows;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    const Matrix& prev = cache.layer_input(l);
    Matrix z(n, layer.out);
    kernels::affine_forward(prev.data, n, layer.in, layer.weights, layer.biases, layer.out, z.data);
    if (layer.activation == Activation::Softmax) cache.final_logits = z;
    activate(layer.activation, z);
    cache.outputs.push_back(std::move(z));
  }
  return cache;
}

Matrix forward_batch(const DenseNet& net, const Matrix& input) {
  auto cache = forward_cached(net, input);
  return std::move(cache.outputs.back());
}

std::vector<double> forward(const DenseNet& net, std::span<const double> input) {
  Matrix x(1, input.size());
  std::copy(input.begin(), input.end(), x.data.begin());
  return forward_batch(net, x).data;
}

Gradients zero_gradients(const DenseNet& net) {
  Gradients g(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    g[l].weights.assign(net.layers[l].weights.size(), 0.0);
    g[l].biases.assign(net.layers[l].biases.size(), 0.0);
  }
  return g;
}

double loss_value(const ForwardCache& cache, const Matrix& targets, Loss loss) {
  const Matrix& out = cache.output();
  check_targets(out, targets);
  if (loss == Loss::Mse) return mean_squared_error(out, targets);
  if (cache.final_logits.empty()) throw std::invalid_argument("softmax cross entropy requires a softmax output layer");
  return cross_entropy(cache.final_logits, targets);
}

OutputGradient output_gradient(const ForwardCache& cache, const Matrix& targets, Loss loss) {
  const Matrix& out = cache.output();
  check_targets(out, targets);
  OutputGradient g;
  g.grad = Matrix(out.rows, out.cols);
  if (loss == Loss::Mse) {
    const double scale = 2.0 / static_cast<double>(out.data.size());
    for (std::size_t i = 0; i < out.data.size(); ++i) g.grad.data[i] = scale * (out.data[i] - targets.data[i]);
    g.loss = mean_squared_error(out, targets);
    return g;
  }
  if (cache.final_logits.empty()) throw std::invalid_argument("softmax cross entropy requires a softmax output layer");
  const double scale = 1.0 / static_cast<double>(out.rows);
  for (std::size_t i = 0; i < out.data.size(); ++i) g.grad.data[i] = scale * (out.data[i] - targets.data[i]);
  g.wrt_logits = true;
  g.loss = cross_entropy(cache.final_logits, targets);
  return g;
}

void backward(const DenseNet& net, const ForwardCache& cache, const OutputGradient& dout, Gradients& grads,
              Matrix* input_grad) {
  const std::size_t n_layers = net.layers.size();
  const std::size_t n = cache.input->rows;
  grads.resize(n_layers);
  Matrix delta = dout.grad;

  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& layer = net.layers[l];
    const Matrix& y = cache.outputs[l];
    const bool fused = (l + 1 == n_layers) && dout.wrt_logits;
    if (!fused) {
      switch (layer.activation) {
        case Activation::Relu:
          for (std::size_t i = 0; i < delta.data.size(); ++i)
            if (!(y.data[i] > 0.0)) delta.data[i] = 0.0;
          break;
        case Activation::Tanh:
          for (std::size_t i = 0; i < delta.data.size(); ++i) delta.data[i] *= 1.0 - y.data[i] * y.data[i];
          break;
        case Activation::Linear: break;
        case Activation::Softmax:
          for (std::size_t r = 0; r < n; ++r) {
            const auto s = y.row(r);
            auto d = delta.row(r);
            double dot = 0.0;
            for (std::size_t k = 0; k < s.size(); ++k) dot += d[k] * s[k];
            for (std::size_t k = 0; k < s.size(); ++k) d[k] = s[k] * (d[k] - dot);
          }
          break;
      }
    }
    auto& g = grads[l];
    g.weights.resize(layer.weights.size());
    g.biases.resize(layer.biases.size());
    kernels::affine_grad_params(delta.data, cache.layer_input(l).data, n, layer.in, layer.out, g.weights, g.biases);
    if (l > 0 || input_grad) {
      Matrix prev(n, layer.in);
      kernels::affine_grad_input(delta.data, layer.weights, n, layer.in, layer.out, prev.data);
      delta = std::move(prev);
    }
  }
  if (input_grad) *input_grad = std::move(delta);
}

double backprop(const DenseNet& net, const Matrix& inputs, const Matrix& targets, Loss loss, Gradients& grads) {
  const auto cache = forward_cached(net, inputs);
  const auto dout = output_gradient(cache, targets, loss);
  backward(net, cache, dout, grads);
  return dout.loss;
}

void sgd_step(std::span<Layer* const> params, const Gradients& grads, Gradients& velocity, double lr,
              double momentum) {
  if (grads.size() != params.size()) throw ShapeError("gradient count does not match parameter layers");
  if (velocity.size() != params.size()) {
    velocity.resize(params.size());
    for (std::size_t l = 0; l < params.size(); ++l) {
      velocity[l].weights.assign(params[l]->weights.size(), 0.0);
      velocity[l].biases.assign(params[l]->biases.size(), 0.0);
    }
  }
  for (std::size_t l = 0; l < params.size(); ++l) {
    Layer& layer = *params[l];
    auto update = [&](std::vector<double>& theta, const std::vector<double>& g, std::vector<double>& v) {
      if (g.size() != theta.size() || v.size() != theta.size()) throw ShapeError("gradient shape mismatch");
      for (std::size_t i = 0; i < theta.size(); ++i) {
        v[i] = momentum * v[i] - lr * g[i];
        theta[i] += v[i];
      }
    };
    update(layer.weights, grads[l].weights, velocity[l].weights);
    update(layer.biases, grads[l].biases, velocity[l].biases);
  }
}

void sgd_step(DenseNet& net, const Gradients& grads, Gradients& velocity, double lr, double momentum) {
  const auto params = parameter_layers(net);
  sgd_step(std::span<Layer* const>(params), grads, velocity, lr, momentum);
}

double evaluate_loss(const DenseNet& net, const Matrix& inputs, const Matrix& targets, Loss loss) {
  if (inputs.rows != targets.rows) throw ShapeError("inputs and targets differ in row count");
  if (inputs.rows == 0) throw std::invalid_argument("cannot evaluate loss on an empty set");
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t first = 0; first < inputs.rows; first += kEvalChunk) {
    const std::size_t count = std::min(kEvalChunk, inputs.rows - first);
    idx.resize(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = first + i;
    const Matrix x = inputs.gather(idx);
    const Matrix t = targets.gather(idx);
    const auto cache = forward_cached(net, x);
    total += loss_value(cache, t, loss) * static_cast<double>(count);
  }
  return total / static_cast<double>(inputs.rows);
}

std::vector<int> predict_classes(const DenseNet& net, const Matrix& inputs) {
  std::vector<int> out(inputs.rows);
  std::vector<std::size_t> idx;
  for (std::size_t first = 0; first < inputs.rows; first += kEvalChunk) {
    const std::size_t count = std::min(kEvalChunk, inputs.rows - first);
    idx.resize(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = first + i;
    const Matrix y = forward_batch(net, inputs.gather(idx));
    for (std::size_t r = 0; r < count; ++r) {
      const auto row = y.row(r);
      out[first + r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
  }
  return out;
}

std::vector<Layer*> parameter_layers(DenseNet& net) {
  std::vector<Layer*> p;
  for (auto& l : net.layers) p.push_back(&l);
  return p;
}

std::vector<const Layer*> parameter_layers(const DenseNet& net) {
  std::vector<const Layer*> p;
  for (const auto& l : net.layers) p.push_back(&l);
  return p;
}

}  // namespace fin::nn

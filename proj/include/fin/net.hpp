#pragma once

// Minimal dense-network engine: forward pass, analytic backpropagation,
// momentum SGD and an early-stopping training loop.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fin/matrix.hpp"

namespace fin::nn {

enum class Activation { Relu, Tanh, Linear, Softmax };

std::string_view activation_name(Activation a) noexcept;
Activation parse_activation(std::string_view name);

struct Topology {
  std::vector<std::size_t> layer_sizes;  // input dimension first
  std::vector<Activation> activations;   // one per affine layer

  /// Throws std::invalid_argument on inconsistent lengths, zero sizes, or a
  /// softmax anywhere but the final layer.
  void validate() const;

  std::size_t input_dim() const noexcept { return layer_sizes.front(); }
  std::size_t output_dim() const noexcept { return layer_sizes.back(); }
  std::size_t n_layers() const noexcept { return activations.size(); }

  /// e.g. "1024-512-256-64-1 relu,relu,tanh,linear"
  std::string to_string() const;

  friend bool operator==(const Topology&, const Topology&) = default;
};

/// Sum over layers of out * in + out.
std::size_t count_params(const Topology& topology);

struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::Linear;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> biases;   // out

  friend bool operator==(const Layer&, const Layer&) = default;
};

struct DenseNet {
  std::vector<Layer> layers;

  Topology topology() const;
  std::size_t input_dim() const noexcept { return layers.front().in; }
  std::size_t output_dim() const noexcept { return layers.back().out; }

  /// Throws ShapeError when layer dimensions do not chain or parameters are
  /// non-finite.
  void validate() const;

  friend bool operator==(const DenseNet&, const DenseNet&) = default;
};

/// Uniform Glorot weights in +-sqrt(6 / (fan_in + fan_out)), zero bias.
/// The generator is seeded from (seed, "layer", index) only.
Layer init_layer(std::size_t in, std::size_t out, Activation activation, std::uint64_t seed);

DenseNet init_random(const Topology& topology, std::uint64_t seed);

/// Per-layer outputs (post-activation) of one batch forward pass.
struct ForwardCache {
  const Matrix* input = nullptr;
  std::vector<Matrix> outputs;
  Matrix final_logits;  // filled only when the last layer is softmax

  const Matrix& output() const { return outputs.back(); }
  const Matrix& layer_input(std::size_t layer) const { return layer == 0 ? *input : outputs[layer - 1]; }
};

/// Applies an activation in place to an n x width block of pre-activations.
void activate(Activation a, Matrix& z);

ForwardCache forward_cached(const DenseNet& net, const Matrix& input);
Matrix forward_batch(const DenseNet& net, const Matrix& input);
std::vector<double> forward(const DenseNet& net, std::span<const double> input);

enum class Loss { Mse, SoftmaxCrossEntropy };

/// Parameter gradients shaped like the network's layers.
struct LayerGrad {
  std::vector<double> weights;
  std::vector<double> biases;
};
using Gradients = std::vector<LayerGrad>;

Gradients zero_gradients(const DenseNet& net);

/// Mean batch loss and its gradient with respect to the network output.
/// MSE averages over batch rows and output columns. Softmax cross entropy
/// uses the log-sum-exp form on the cached logits and returns the gradient
/// with respect to those logits, (softmax - target) / batch.
struct OutputGradient {
  double loss = 0.0;
  Matrix grad;
  bool wrt_logits = false;
};

OutputGradient output_gradient(const ForwardCache& cache, const Matrix& targets, Loss loss);

/// Mean loss of a completed forward pass.
double loss_value(const ForwardCache& cache, const Matrix& targets, Loss loss);

/// Backpropagates an output gradient through the network. Writes parameter
/// gradients into grads (resized as needed). When input_grad is non-null it
/// receives dLoss/dInput.
void backward(const DenseNet& net, const ForwardCache& cache, const OutputGradient& dout, Gradients& grads,
              Matrix* input_grad = nullptr);

/// Exact gradients of the mean batch loss; returns the loss.
double backprop(const DenseNet& net, const Matrix& inputs, const Matrix& targets, Loss loss, Gradients& grads);

/// v <- momentum * v - lr * g;  theta <- theta + v, over every parameter.
void sgd_step(std::span<Layer* const> params, const Gradients& grads, Gradients& velocity, double lr,
              double momentum);
void sgd_step(DenseNet& net, const Gradients& grads, Gradients& velocity, double lr, double momentum);

/// Mean loss over a dataset, evaluated in chunks.
double evaluate_loss(const DenseNet& net, const Matrix& inputs, const Matrix& targets, Loss loss);

/// Row-wise argmax of the network output.
std::vector<int> predict_classes(const DenseNet& net, const Matrix& inputs);

std::vector<Layer*> parameter_layers(DenseNet& net);
std::vector<const Layer*> parameter_layers(const DenseNet& net);

}  // namespace fin::nn

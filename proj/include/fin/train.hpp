#pragma once

// Early-stopping mini-batch training, shared by plain dense networks and
// FIN ensembles. A model type participates by providing, via ADL:
//   double backprop(const M&, const Matrix& x, const Matrix& y, Loss, Gradients&)
//   double evaluate_loss(const M&, const Matrix& x, const Matrix& y, Loss)
//   std::vector<Layer*> parameter_layers(M&)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fin/errors.hpp"
#include "fin/net.hpp"
#include "fin/rng.hpp"

namespace fin::nn {

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  int max_epochs = 100;
  int patience = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (max_epochs <= 0) throw std::invalid_argument("max_epochs must be positive");
    if (patience <= 0 || patience > max_epochs) throw std::invalid_argument("patience must lie in [1, max_epochs]");
  }
};

struct EpochRecord {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double wall_seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int stopped_epoch = 0;  // number of epochs run
  int best_epoch = 0;     // 1-based; the returned parameters come from here

  double best_val_loss() const {
    return best_epoch > 0 ? epochs[static_cast<std::size_t>(best_epoch - 1)].val_loss
                          : std::numeric_limits<double>::infinity();
  }
  double mean_epoch_seconds() const {
    if (epochs.empty()) return 0.0;
    double s = 0.0;
    for (const auto& e : epochs) s += e.wall_seconds;
    return s / static_cast<double>(epochs.size());
  }
};

/// Inputs with matching regression targets or one-hot class targets.
struct Dataset {
  Matrix inputs;
  Matrix targets;

  std::size_t size() const noexcept { return inputs.rows; }
};

template <class M>
concept TrainableModel = std::copyable<M> && requires(M& m, const M& cm, const Matrix& x, Loss loss, Gradients& g) {
  { backprop(cm, x, x, loss, g) } -> std::convertible_to<double>;
  { evaluate_loss(cm, x, x, loss) } -> std::convertible_to<double>;
  { parameter_layers(m) } -> std::same_as<std::vector<Layer*>>;
};

template <class M>
struct TrainResult {
  M model;
  TrainHistory history;
};

/// Called after each epoch with the 1-based epoch number and its record.
using EpochObserver = std::function<void(int, const EpochRecord&)>;

/// Mini-batch momentum SGD with early stopping on validation loss. Each
/// epoch visits the training set in a Fisher-Yates order seeded from
/// (cfg.seed, epoch). Stops after `patience` epochs without strict
/// improvement and returns the parameters of the best epoch.
/// Throws DivergedError on a non-finite loss.
template <TrainableModel M>
TrainResult<M> train(M model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg, Loss loss,
                     const EpochObserver& observer = {}) {
  cfg.validate();
  if (train_set.size() == 0 || val_set.size() == 0) throw std::invalid_argument("train and validation sets must be non-empty");
  if (train_set.targets.rows != train_set.size() || val_set.targets.rows != val_set.size() ||
      train_set.inputs.cols != val_set.inputs.cols || train_set.targets.cols != val_set.targets.cols)
    throw ShapeError("train/validation shapes are inconsistent");

  using clock = std::chrono::steady_clock;
  TrainResult<M> result{model, {}};
  Gradients grads;
  Gradients velocity;
  std::vector<std::size_t> order(train_set.size());
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto start = clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, "epoch", static_cast<std::uint64_t>(epoch)));
    shuffle(order, rng);

    double loss_sum = 0.0;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - first);
      const std::span<const std::size_t> idx(order.data() + first, count);
      const Matrix xb = train_set.inputs.gather(idx);
      const Matrix yb = train_set.targets.gather(idx);
      const double batch_loss = backprop(std::as_const(model), xb, yb, loss, grads);
      if (!std::isfinite(batch_loss)) throw DivergedError(epoch, "non-finite training loss");
      if (velocity.empty()) {
        velocity.resize(grads.size());
        for (std::size_t l = 0; l < grads.size(); ++l) {
          velocity[l].weights.assign(grads[l].weights.size(), 0.0);
          velocity[l].biases.assign(grads[l].biases.size(), 0.0);
        }
      }
      const auto params = parameter_layers(model);
      sgd_step(std::span<Layer* const>(params), grads, velocity, cfg.learning_rate, cfg.momentum);
      loss_sum += batch_loss * static_cast<double>(count);
    }

    EpochRecord rec;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_loss = evaluate_loss(std::as_const(model), val_set.inputs, val_set.targets, loss);
    if (!std::isfinite(rec.val_loss)) throw DivergedError(epoch, "non-finite validation loss");
    rec.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    result.history.epochs.push_back(rec);
    result.history.stopped_epoch = epoch;
    if (observer) observer(epoch, rec);

    if (rec.val_loss < best) {
      best = rec.val_loss;
      result.model = model;
      result.history.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace fin::nn

#include "fin/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "fin/rng.hpp"

namespace fin::nn {

std::string GradcheckResult::worst_location() const {
  return "case " + std::to_string(worst_case) + " layer " + std::to_string(worst_layer) +
         (worst_is_bias ? " bias " : " weight ") + std::to_string(worst_index);
}

double relative_error(double analytic, double numeric) noexcept {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

void check_gradients(const DenseNet& net, const Matrix& inputs, const Matrix& targets, Loss loss, double step,
                     int case_index, GradcheckResult& result, bool inject_fault) {
  Gradients grads;
  backprop(net, inputs, targets, loss, grads);
  if (inject_fault) grads.front().weights.front() += 1e-2;

  DenseNet probe = net;
  auto loss_at = [&] { return loss_value(forward_cached(probe, inputs), targets, loss); };
  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    for (int bias = 0; bias < 2; ++bias) {
      auto& params = bias ? probe.layers[l].biases : probe.layers[l].weights;
      const auto& analytic = bias ? grads[l].biases : grads[l].weights;
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + step;
        const double up = loss_at();
        params[i] = saved - step;
        const double down = loss_at();
        params[i] = saved;
        const double err = relative_error(analytic[i], (up - down) / (2.0 * step));
        ++result.n_checked;
        if (err > result.max_rel_error) {
          result.max_rel_error = err;
          result.worst_case = case_index;
          result.worst_layer = l;
          result.worst_is_bias = bias != 0;
          result.worst_index = i;
        }
      }
    }
  }
}

GradcheckResult run_gradcheck(const GradcheckConfig& cfg) {
  GradcheckResult result;
  constexpr Activation hidden[] = {Activation::Relu, Activation::Tanh, Activation::Linear};
  for (int c = 0; c < cfg.n_cases; ++c) {
    Rng rng(derive_seed(cfg.seed, "gradcheck", static_cast<std::uint64_t>(c)));
    const bool classify = c % 2 == 1;
    const std::size_t n_layers = 2 + rng.below(3);
    Topology t;
    t.layer_sizes.push_back(2 + rng.below(7));
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
      t.layer_sizes.push_back(2 + rng.below(7));
      t.activations.push_back(hidden[rng.below(3)]);
    }
    const std::size_t out = classify ? 2 + rng.below(3) : 1 + rng.below(3);
    t.layer_sizes.push_back(out);
    t.activations.push_back(classify ? Activation::Softmax : Activation::Linear);

    DenseNet net = init_random(t, derive_seed(cfg.seed, "gradcheck-init", static_cast<std::uint64_t>(c)));
    for (auto& layer : net.layers)
      for (double& b : layer.biases) b = rng.uniform(-0.5, 0.5);
    const std::size_t batch = 1 + rng.below(6);
    Matrix x(batch, t.input_dim()), y(batch, out);
    for (double& v : x.data) v = rng.normal();
    for (std::size_t r = 0; r < batch; ++r) {
      if (classify) y(r, rng.below(out)) = 1.0;
      else
        for (std::size_t k = 0; k < out; ++k) y(r, k) = rng.normal();
    }
    check_gradients(net, x, y, classify ? Loss::SoftmaxCrossEntropy : Loss::Mse, cfg.step, c, result,
                    cfg.inject_fault);
  }
  result.passed = result.max_rel_error <= cfg.tolerance;
  return result;
}

}  // namespace fin::nn

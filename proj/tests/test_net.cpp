#include <gtest/gtest.h>

#include <cmath>

#include "fin/errors.hpp"
#include "fin/gradcheck.hpp"
#include "fin/net.hpp"
#include "fin/rng.hpp"
#include "fin/train.hpp"

using namespace fin;
using namespace fin::nn;

namespace {

Topology topo(std::vector<std::size_t> sizes, std::vector<Activation> acts) { return {std::move(sizes), std::move(acts)}; }

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Matrix m(r, c);
  for (double& v : m.data) v = rng.uniform(-scale, scale);
  return m;
}

Matrix one_hot(std::size_t rows, std::size_t classes, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, classes);
  for (std::size_t i = 0; i < rows; ++i) m(i, rng.below(classes)) = 1.0;
  return m;
}

// Independent loss evaluation used for finite differences.
double plain_loss(const DenseNet& net, const Matrix& x, const Matrix& y, Loss loss) {
  double total = 0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    std::vector<double> a(x.row(i).begin(), x.row(i).end());
    std::vector<double> z;
    for (const auto& L : net.layers) {
      z.assign(L.out, 0.0);
      for (std::size_t o = 0; o < L.out; ++o) {
        z[o] = L.biases[o];
        for (std::size_t k = 0; k < L.in; ++k) z[o] += L.weights[o * L.in + k] * a[k];
      }
      a = z;
      if (L.activation == Activation::Relu)
        for (double& v : a) v = std::max(v, 0.0);
      if (L.activation == Activation::Tanh)
        for (double& v : a) v = std::tanh(v);
    }
    if (loss == Loss::Mse) {
      for (std::size_t o = 0; o < a.size(); ++o) total += (a[o] - y(i, o)) * (a[o] - y(i, o)) / a.size();
    } else {
      double m = *std::max_element(z.begin(), z.end()), s = 0;
      for (double v : z) s += std::exp(v - m);
      for (std::size_t o = 0; o < z.size(); ++o) total -= y(i, o) * (z[o] - m - std::log(s));
    }
  }
  return total / x.rows;
}

}  // namespace

TEST(Topology, ValidateAndCount) {
  const auto t = topo({4, 3, 2}, {Activation::Relu, Activation::Softmax});
  EXPECT_NO_THROW(t.validate());
  EXPECT_EQ(count_params(t), 4u * 3 + 3 + 3 * 2 + 2);
  EXPECT_THROW(topo({4, 3, 2}, {Activation::Softmax, Activation::Linear}).validate(), std::invalid_argument);
  EXPECT_THROW(topo({4, 0, 2}, {Activation::Relu, Activation::Linear}).validate(), std::invalid_argument);
  EXPECT_THROW(topo({4, 2}, {Activation::Relu, Activation::Linear}).validate(), std::invalid_argument);
  EXPECT_EQ(count_params(topo({1024, 512, 256, 64, 1}, {Activation::Relu, Activation::Relu, Activation::Relu,
                                                        Activation::Linear})),
            1024u * 512 + 512 + 512 * 256 + 256 + 256 * 64 + 64 + 64 + 1);
  for (auto a : {Activation::Relu, Activation::Tanh, Activation::Linear, Activation::Softmax})
    EXPECT_EQ(parse_activation(activation_name(a)), a);
}

TEST(Init, GlorotBoundsZeroBiasDeterministic) {
  const auto L = init_layer(30, 20, Activation::Relu, 9);
  const double lim = std::sqrt(6.0 / 50.0);
  double sum2 = 0;
  for (double w : L.weights) {
    EXPECT_LE(std::abs(w), lim);
    sum2 += w * w;
  }
  EXPECT_NEAR(sum2 / L.weights.size(), lim * lim / 3, 0.2 * lim * lim / 3);
  for (double b : L.biases) EXPECT_EQ(b, 0.0);
  EXPECT_EQ(init_layer(30, 20, Activation::Relu, 9), L);
  const auto net = init_random(topo({5, 4, 3}, {Activation::Tanh, Activation::Linear}), 2);
  EXPECT_EQ(net, init_random(net.topology(), 2));
  EXPECT_NE(net, init_random(net.topology(), 3));
  EXPECT_EQ(net.topology().to_string(), "5-4-3 tanh,linear");
}

TEST(Forward, HandComputed) {
  DenseNet net;
  net.layers.push_back({2, 2, Activation::Relu, {1, -1, 2, 1}, {0, -10}});
  net.layers.push_back({2, 1, Activation::Linear, {3, 5}, {1}});
  // z1 = (3-1, 6+1-10) = (2, -3) -> relu (2, 0); out = 6 + 1
  EXPECT_EQ(forward(net, std::vector<double>{3, 1}), std::vector<double>{7.0});
  DenseNet sm;
  sm.layers.push_back({1, 2, Activation::Softmax, {1, -1}, {0, 0}});
  const auto p = forward(sm, std::vector<double>{1000.0});
  EXPECT_NEAR(p[0], 1.0, 1e-12);
  EXPECT_TRUE(std::isfinite(p[1]));
  const auto q = forward(sm, std::vector<double>{0.5});
  EXPECT_NEAR(q[0] + q[1], 1.0, 1e-15);
  EXPECT_NEAR(q[0] / q[1], std::exp(1.0), 1e-12);
}

TEST(Forward, BatchMatchesRowwise) {
  const auto net = init_random(topo({6, 8, 3}, {Activation::Tanh, Activation::Softmax}), 4);
  const auto x = random_matrix(10, 6, 1);
  const auto y = forward_batch(net, x);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto r = forward(net, x.row(i));
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(y(i, c), r[c], 1e-15);
  }
}

TEST(Backprop, MatchesFiniteDifferences) {
  for (Loss loss : {Loss::Mse, Loss::SoftmaxCrossEntropy}) {
    for (Activation hidden : {Activation::Tanh, Activation::Relu, Activation::Linear}) {
      const Activation last = loss == Loss::Mse ? Activation::Linear : Activation::Softmax;
      auto net = init_random(topo({4, 5, 3, 3}, {hidden, hidden, last}), 11);
      for (auto& L : net.layers)
        for (double& b : L.biases) b = 0.1;
      const auto x = random_matrix(6, 4, 2);
      const auto y = loss == Loss::Mse ? random_matrix(6, 3, 3) : one_hot(6, 3, 3);
      Gradients g;
      const double l = backprop(net, x, y, loss, g);
      EXPECT_NEAR(l, plain_loss(net, x, y, loss), 1e-12);
      const double h = 1e-6;
      for (std::size_t li = 0; li < net.layers.size(); ++li) {
        for (std::size_t k = 0; k < net.layers[li].weights.size(); ++k) {
          auto p = net, m = net;
          p.layers[li].weights[k] += h;
          m.layers[li].weights[k] -= h;
          const double fd = (plain_loss(p, x, y, loss) - plain_loss(m, x, y, loss)) / (2 * h);
          EXPECT_NEAR(g[li].weights[k], fd, 1e-6) << "layer " << li << " w" << k;
        }
        for (std::size_t k = 0; k < net.layers[li].biases.size(); ++k) {
          auto p = net, m = net;
          p.layers[li].biases[k] += h;
          m.layers[li].biases[k] -= h;
          const double fd = (plain_loss(p, x, y, loss) - plain_loss(m, x, y, loss)) / (2 * h);
          EXPECT_NEAR(g[li].biases[k], fd, 1e-6) << "layer " << li << " b" << k;
        }
      }
    }
  }
}

TEST(Backprop, InputGradient) {
  const auto net = init_random(topo({3, 4, 2}, {Activation::Tanh, Activation::Linear}), 5);
  const auto x = random_matrix(2, 3, 6);
  const auto y = random_matrix(2, 2, 7);
  const auto cache = forward_cached(net, x);
  const auto dout = output_gradient(cache, y, Loss::Mse);
  Gradients g;
  Matrix dx;
  backward(net, cache, dout, g, &dx);
  ASSERT_EQ(dx.rows, 2u);
  ASSERT_EQ(dx.cols, 3u);
  for (std::size_t k = 0; k < x.data.size(); ++k) {
    auto p = x, m = x;
    p.data[k] += 1e-6;
    m.data[k] -= 1e-6;
    const double fd = (plain_loss(net, p, y, Loss::Mse) - plain_loss(net, m, y, Loss::Mse)) / 2e-6;
    EXPECT_NEAR(dx.data[k], fd, 1e-7);
  }
}

TEST(Gradcheck, RandomSuitePassesAndFaultIsCaught) {
  GradcheckConfig cfg;
  cfg.n_cases = 20;
  const auto ok = run_gradcheck(cfg);
  EXPECT_TRUE(ok.passed);
  EXPECT_LT(ok.max_rel_error, 1e-4);
  EXPECT_GT(ok.n_checked, 0u);
  cfg.inject_fault = true;
  const auto bad = run_gradcheck(cfg);
  EXPECT_FALSE(bad.passed);
  EXPECT_GT(bad.max_rel_error, 1e-4);
  EXPECT_FALSE(bad.worst_location().empty());
}

TEST(Sgd, MomentumRecurrence) {
  DenseNet net;
  net.layers.push_back({1, 1, Activation::Linear, {1.0}, {0.0}});
  Gradients g{{{2.0}, {1.0}}};
  Gradients v;
  v.push_back({{0.0}, {0.0}});
  sgd_step(net, g, v, 0.1, 0.9);  // v = -0.2, w = 0.8
  EXPECT_NEAR(net.layers[0].weights[0], 0.8, 1e-15);
  EXPECT_NEAR(net.layers[0].biases[0], -0.1, 1e-15);
  sgd_step(net, g, v, 0.1, 0.9);  // v = -0.18 - 0.2 = -0.38, w = 0.42
  EXPECT_NEAR(v[0].weights[0], -0.38, 1e-15);
  EXPECT_NEAR(net.layers[0].weights[0], 0.42, 1e-15);
}

TEST(Train, LearnsLinearMap) {
  const auto x = random_matrix(400, 2, 1);
  Matrix y(400, 1);
  for (std::size_t i = 0; i < 400; ++i) y(i, 0) = 2 * x(i, 0) - x(i, 1) + 0.5;
  Dataset tr{x, y};
  Dataset va{random_matrix(50, 2, 2), Matrix(50, 1)};
  for (std::size_t i = 0; i < 50; ++i) va.targets(i, 0) = 2 * va.inputs(i, 0) - va.inputs(i, 1) + 0.5;
  TrainConfig cfg;
  cfg.max_epochs = 60;
  cfg.patience = 60;
  const auto res = train(init_random(topo({2, 1}, {Activation::Linear}), 0), tr, va, cfg, Loss::Mse);
  const auto& L = res.model.layers[0];
  EXPECT_NEAR(L.weights[0], 2.0, 1e-3);
  EXPECT_NEAR(L.weights[1], -1.0, 1e-3);
  EXPECT_NEAR(L.biases[0], 0.5, 1e-3);
  EXPECT_LT(res.history.best_val_loss(), 1e-6);
}

TEST(Train, XorWithSoftmax) {
  Matrix x(200, 2), y(200, 2);
  Rng r(5);
  for (std::size_t i = 0; i < 200; ++i) {
    const int a = static_cast<int>(r.below(2)), b = static_cast<int>(r.below(2));
    x(i, 0) = a + r.uniform(-0.1, 0.1);
    x(i, 1) = b + r.uniform(-0.1, 0.1);
    y(i, static_cast<std::size_t>(a ^ b)) = 1;
  }
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.max_epochs = 200;
  cfg.patience = 50;
  cfg.batch_size = 8;
  const auto res = train(init_random(topo({2, 16, 2}, {Activation::Tanh, Activation::Softmax}), 1), Dataset{x, y},
                         Dataset{x, y}, cfg, Loss::SoftmaxCrossEntropy);
  const auto pred = predict_classes(res.model, x);
  int correct = 0;
  for (std::size_t i = 0; i < 200; ++i) correct += y(i, static_cast<std::size_t>(pred[i])) == 1.0;
  EXPECT_EQ(correct, 200);
}

TEST(Train, EarlyStoppingReturnsBestEpochAndIsDeterministic) {
  const auto x = random_matrix(64, 3, 1);
  const auto y = random_matrix(64, 1, 2);  // pure noise: validation loss stops improving quickly
  const Dataset tr{x, y}, va{random_matrix(32, 3, 3), random_matrix(32, 1, 4)};
  TrainConfig cfg;
  cfg.max_epochs = 100;
  cfg.patience = 3;
  cfg.learning_rate = 0.05;
  const auto net = init_random(topo({3, 32, 1}, {Activation::Relu, Activation::Linear}), 5);
  const auto a = train(net, tr, va, cfg, Loss::Mse);
  const auto b = train(net, tr, va, cfg, Loss::Mse);
  EXPECT_EQ(a.model, b.model);
  ASSERT_EQ(a.history.epochs.size(), b.history.epochs.size());
  ASSERT_LT(a.history.stopped_epoch, cfg.max_epochs);
  EXPECT_EQ(a.history.stopped_epoch, a.history.best_epoch + cfg.patience);
  EXPECT_DOUBLE_EQ(evaluate_loss(a.model, va.inputs, va.targets, Loss::Mse), a.history.best_val_loss());
  for (std::size_t e = 0; e < a.history.epochs.size(); ++e)
    EXPECT_GE(a.history.epochs[e].val_loss, a.history.best_val_loss());
}

TEST(Train, DivergenceAndValidation) {
  const auto x = random_matrix(32, 2, 1);
  Matrix y(32, 1, 1e200);
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.patience = 5;
  cfg.learning_rate = 10;
  EXPECT_THROW(train(init_random(topo({2, 1}, {Activation::Linear}), 0), Dataset{x, y}, Dataset{x, y}, cfg, Loss::Mse),
               DivergedError);
  cfg.patience = 6;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

#include "fin/classical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fin/errors.hpp"
#include "fin/kernels.hpp"
#include "fin/rng.hpp"

namespace fin {

std::vector<int> knn_classify(const Matrix& train_x, std::span<const int> train_y, const Matrix& test_x,
                              std::size_t k) {
  if (train_x.rows != train_y.size()) throw ShapeError("training labels do not match training rows");
  if (train_x.cols != test_x.cols) throw ShapeError("train and test widths differ");
  if (k == 0 || k > train_x.rows) throw std::invalid_argument("k must lie in [1, |train|]");
  const int n_classes = *std::max_element(train_y.begin(), train_y.end()) + 1;

  std::vector<int> out(test_x.rows);
  constexpr std::size_t chunk = 256;
  std::vector<double> d;
  std::vector<std::size_t> order(train_x.rows);
  std::vector<int> votes(static_cast<std::size_t>(n_classes));
  for (std::size_t first = 0; first < test_x.rows; first += chunk) {
    const std::size_t m = std::min(chunk, test_x.rows - first);
    d.assign(m * train_x.rows, 0.0);
    kernels::squared_distances(std::span(test_x.data).subspan(first * test_x.cols, m * test_x.cols), m,
                               train_x.data, train_x.rows, train_x.cols, d);
    for (std::size_t i = 0; i < m; ++i) {
      const double* di = d.data() + i * train_x.rows;
      auto key = [di](std::size_t j) { return std::isnan(di[j]) ? std::numeric_limits<double>::infinity() : di[j]; };
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](std::size_t a, std::size_t b) { return key(a) < key(b) || (key(a) == key(b) && a < b); });
      std::fill(votes.begin(), votes.end(), 0);
      for (std::size_t r = 0; r < k; ++r) ++votes[static_cast<std::size_t>(train_y[order[r]])];
      const int best = *std::max_element(votes.begin(), votes.end());
      for (std::size_t r = 0; r < k; ++r) {
        const int y = train_y[order[r]];
        if (votes[static_cast<std::size_t>(y)] == best) {
          out[first + i] = y;
          break;
        }
      }
    }
  }
  return out;
}

std::vector<double> LinearMarginModel::scores(std::span<const double> x) const {
  std::vector<double> s(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    double acc = biases[c];
    const auto w = weights.row(c);
    for (std::size_t j = 0; j < x.size(); ++j) acc += w[j] * (x[j] - center[j]) * scale[j];
    s[c] = acc;
  }
  return s;
}

std::vector<int> LinearMarginModel::predict(const Matrix& x) const {
  if (x.cols != weights.cols) throw ShapeError("input width does not match the model");
  std::vector<int> out(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto s = scores(x.row(r));
    out[r] = static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
  }
  return out;
}

LinearMarginModel fit_linear_margin(const Matrix& train_x, std::span<const int> train_y, std::size_t n_classes,
                                    const LinearMarginConfig& cfg) {
  if (train_x.rows != train_y.size() || train_x.rows == 0) throw ShapeError("training labels do not match training rows");
  if (n_classes < 2) throw std::invalid_argument("need at least 2 classes");
  if (cfg.epochs <= 0 || !(cfg.learning_rate > 0.0) || !(cfg.reg >= 0.0))
    throw std::invalid_argument("invalid linear-margin configuration");
  const std::size_t n = train_x.rows, dim = train_x.cols;

  LinearMarginModel m;
  m.n_classes = n_classes;
  m.center.assign(dim, 0.0);
  m.scale.assign(dim, 1.0);
  for (std::size_t j = 0; j < dim; ++j) {
    double s = 0.0, ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += train_x(r, j);
    const double mu = s / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) ss += (train_x(r, j) - mu) * (train_x(r, j) - mu);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    m.center[j] = mu;
    m.scale[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
  m.weights = Matrix(n_classes, dim);
  m.biases.assign(n_classes, 0.0);

  const double shrink = 1.0 / (1.0 + cfg.learning_rate * cfg.reg);
  std::vector<std::size_t> order(n);
  std::vector<double> z(dim);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, "margin-epoch", static_cast<std::uint64_t>(epoch)));
    shuffle(order, rng);
    for (std::size_t r : order) {
      const auto x = train_x.row(r);
      for (std::size_t j = 0; j < dim; ++j) z[j] = (x[j] - m.center[j]) * m.scale[j];
      for (std::size_t c = 0; c < n_classes; ++c) {
        const double y = train_y[r] == static_cast<int>(c) ? 1.0 : -1.0;
        auto w = m.weights.row(c);
        double score = m.biases[c];
        for (std::size_t j = 0; j < dim; ++j) score += w[j] * z[j];
        if (y * score < 1.0) {
          for (std::size_t j = 0; j < dim; ++j) w[j] += cfg.learning_rate * y * z[j];
          m.biases[c] += cfg.learning_rate * y;
        }
        for (double& wj : w) wj *= shrink;
      }
    }
  }
  return m;
}

std::vector<int> linear_margin_classify(const Matrix& train_x, std::span<const int> train_y, const Matrix& test_x,
                                        std::size_t n_classes, const LinearMarginConfig& cfg) {
  return fit_linear_margin(train_x, train_y, n_classes, cfg).predict(test_x);
}

}  // namespace fin

#pragma once

// Non-neural comparators over flattened channel-TF vectors.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fin/matrix.hpp"

namespace fin {

/// Majority vote of the k nearest training rows (Euclidean). Neighbours at
/// equal distance are ordered by training index; a tied vote goes to the
/// tied class of the nearest neighbour.
std::vector<int> knn_classify(const Matrix& train_x, std::span<const int> train_y, const Matrix& test_x,
                              std::size_t k);

struct LinearMarginConfig {
  int epochs = 30;
  double learning_rate = 0.01;
  double reg = 1e-4;
  std::uint64_t seed = 0;
};

/// One-vs-rest linear scorers trained by per-sample subgradient descent on
/// the L2-regularized hinge loss. Inputs are standardized with statistics
/// of train_x. Predicts the class of the highest score.
struct LinearMarginModel {
  std::size_t n_classes = 2;
  std::vector<double> center, scale;  // per input column
  Matrix weights;                     // n_classes x dim
  std::vector<double> biases;

  std::vector<double> scores(std::span<const double> x) const;
  std::vector<int> predict(const Matrix& x) const;
};

LinearMarginModel fit_linear_margin(const Matrix& train_x, std::span<const int> train_y, std::size_t n_classes,
                                    const LinearMarginConfig& cfg);

std::vector<int> linear_margin_classify(const Matrix& train_x, std::span<const int> train_y, const Matrix& test_x,
                                        std::size_t n_classes, const LinearMarginConfig& cfg);

}  // namespace fin

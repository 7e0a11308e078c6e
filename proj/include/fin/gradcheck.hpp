#pragma once

// Finite-difference verification of the analytic gradients.

#include <cstddef>
#include <cstdint>
#include <string>

#include "fin/net.hpp"

namespace fin::nn {

struct GradcheckConfig {
  int n_cases = 20;
  std::uint64_t seed = 0;
  double step = 1e-5;
  double tolerance = 1e-4;
  bool inject_fault = false;  // corrupts one analytic entry per case
};

struct GradcheckResult {
  double max_rel_error = 0.0;
  int worst_case = -1;
  std::size_t worst_layer = 0;
  bool worst_is_bias = false;
  std::size_t worst_index = 0;
  std::size_t n_checked = 0;
  bool passed = true;

  /// "case 3 layer 1 weight 7"
  std::string worst_location() const;
};

/// |a - n| / max(|a|, |n|, 1e-6) for analytic a and numeric n.
double relative_error(double analytic, double numeric) noexcept;

/// Compares every parameter gradient of `net` on one batch with central
/// differences; accumulates into result.
void check_gradients(const DenseNet& net, const Matrix& inputs, const Matrix& targets, Loss loss, double step,
                     int case_index, GradcheckResult& result, bool inject_fault = false);

/// Random nets of 2 to 4 layers with mixed relu/tanh/linear hidden layers,
/// alternately MSE regression and softmax cross-entropy outputs.
GradcheckResult run_gradcheck(const GradcheckConfig& cfg);

}  // namespace fin::nn

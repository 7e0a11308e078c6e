#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fin {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data.data() + r * cols, cols}; }

  bool empty() const noexcept { return rows == 0; }

  /// Rows at the given indices, in order.
  Matrix gather(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (indices[i] >= rows) throw std::out_of_range("row index out of range");
      const auto src = row(indices[i]);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

}  // namespace fin

#pragma once

// Dense-layer kernels. The default versions are OpenMP-parallel over fixed
// blocks of rows (or output units); every output element is accumulated in
// the same order whatever the thread count, so results are bit-identical
// from 1 to N threads. The serial:: versions are plain triple loops kept as
// the reference for tests and benchmarks; they agree with the parallel ones
// up to floating-point reassociation.
//
// Shapes (row-major):  x: n x in,  w: out x in,  b: out,  y / dy: n x out.

#include <cstddef>
#include <span>

namespace fin::kernels {

/// y = x * w^T + b
void affine_forward(std::span<const double> x, std::size_t n, std::size_t in, std::span<const double> w,
                    std::span<const double> b, std::size_t out, std::span<double> y);

/// dw = dy^T * x,  db = column sums of dy  (overwrites dw and db)
void affine_grad_params(std::span<const double> dy, std::span<const double> x, std::size_t n, std::size_t in,
                        std::size_t out, std::span<double> dw, std::span<double> db);

/// dx = dy * w  (overwrites dx)
void affine_grad_input(std::span<const double> dy, std::span<const double> w, std::size_t n, std::size_t in,
                       std::size_t out, std::span<double> dx);

/// Pairwise squared Euclidean distances, d[i * m + j] = |a_i - b_j|^2.
void squared_distances(std::span<const double> a, std::size_t n, std::span<const double> b, std::size_t m,
                       std::size_t dim, std::span<double> d);

/// Number of OpenMP threads the kernels will use (1 without OpenMP).
int max_threads() noexcept;

/// Sets the OpenMP thread count for subsequent kernels; n <= 0 leaves it unchanged.
void set_threads(int n) noexcept;

namespace serial {

void affine_forward(std::span<const double> x, std::size_t n, std::size_t in, std::span<const double> w,
                    std::span<const double> b, std::size_t out, std::span<double> y);

void affine_grad_params(std::span<const double> dy, std::span<const double> x, std::size_t n, std::size_t in,
                        std::size_t out, std::span<double> dw, std::span<double> db);

void affine_grad_input(std::span<const double> dy, std::span<const double> w, std::size_t n, std::size_t in,
                       std::size_t out, std::span<double> dx);

void squared_distances(std::span<const double> a, std::size_t n, std::span<const double> b, std::size_t m,
                       std::size_t dim, std::span<double> d);

}  // namespace serial

}  // namespace fin::kernels

#include "fin/kernels.hpp"

#include <algorithm>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fin::kernels {

namespace {

typedef double v8d __attribute__((vector_size(64)));

inline v8d load8(const double* p) noexcept {
  v8d v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline double reduce8(v8d a) noexcept {
  return ((a[0] + a[1]) + (a[2] + a[3])) + ((a[4] + a[5]) + (a[6] + a[7]));
}

constexpr std::size_t kBlock = 4;

// 4x4 block of dot products between rows of x and rows of w. Every element
// goes through identical arithmetic, so callers may pad a partial block by
// repeating a row pointer without changing the other results.
inline void dot_block(const double* const xr[kBlock], const double* const wr[kBlock], std::size_t len,
                      double result[kBlock][kBlock]) noexcept {
  v8d acc[kBlock][kBlock] = {};
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8) {
    const v8d w0 = load8(wr[0] + i), w1 = load8(wr[1] + i), w2 = load8(wr[2] + i), w3 = load8(wr[3] + i);
    for (std::size_t r = 0; r < kBlock; ++r) {
      const v8d xv = load8(xr[r] + i);
      acc[r][0] += xv * w0;
      acc[r][1] += xv * w1;
      acc[r][2] += xv * w2;
      acc[r][3] += xv * w3;
    }
  }
  for (std::size_t r = 0; r < kBlock; ++r)
    for (std::size_t o = 0; o < kBlock; ++o) {
      double tail = 0.0;
      for (std::size_t j = i; j < len; ++j) tail += xr[r][j] * wr[o][j];
      result[r][o] = reduce8(acc[r][o]) + tail;
    }
}

inline std::size_t blocks(std::size_t n) noexcept { return (n + kBlock - 1) / kBlock; }

}  // namespace

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) noexcept {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

void affine_forward(std::span<const double> x, std::size_t n, std::size_t in, std::span<const double> w,
                    std::span<const double> b, std::size_t out, std::span<double> y) {
  const auto row_blocks = static_cast<std::ptrdiff_t>(blocks(n));
  const std::size_t out_blocks = blocks(out);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t rb = 0; rb < row_blocks; ++rb) {
    const std::size_t r0 = static_cast<std::size_t>(rb) * kBlock;
    const std::size_t rows = std::min(kBlock, n - r0);
    const double* xr[kBlock];
    for (std::size_t k = 0; k < kBlock; ++k) xr[k] = x.data() + (r0 + std::min(k, rows - 1)) * in;
    for (std::size_t ob = 0; ob < out_blocks; ++ob) {
      const std::size_t o0 = ob * kBlock;
      const std::size_t outs = std::min(kBlock, out - o0);
      const double* wr[kBlock];
      for (std::size_t k = 0; k < kBlock; ++k) wr[k] = w.data() + (o0 + std::min(k, outs - 1)) * in;
      double res[kBlock][kBlock];
      dot_block(xr, wr, in, res);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t o = 0; o < outs; ++o) y[(r0 + r) * out + o0 + o] = res[r][o] + b[o0 + o];
    }
  }
}

void affine_grad_params(std::span<const double> dy, std::span<const double> x, std::size_t n, std::size_t in,
                        std::size_t out, std::span<double> dw, std::span<double> db) {
  const auto out_blocks = static_cast<std::ptrdiff_t>(blocks(out));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ob = 0; ob < out_blocks; ++ob) {
    const std::size_t o0 = static_cast<std::size_t>(ob) * kBlock;
    const std::size_t outs = std::min(kBlock, out - o0);
    for (std::size_t o = o0; o < o0 + outs; ++o) {
      std::fill_n(dw.data() + o * in, in, 0.0);
      db[o] = 0.0;
    }
    for (std::size_t r = 0; r < n; ++r) {
      const double* xr = x.data() + r * in;
      for (std::size_t o = o0; o < o0 + outs; ++o) {
        const double c = dy[r * out + o];
        db[o] += c;
        if (c == 0.0) continue;
        double* dwr = dw.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) dwr[i] += c * xr[i];
      }
    }
  }
}

void affine_grad_input(std::span<const double> dy, std::span<const double> w, std::size_t n, std::size_t in,
                       std::size_t out, std::span<double> dx) {
  const auto row_blocks = static_cast<std::ptrdiff_t>(blocks(n));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t rb = 0; rb < row_blocks; ++rb) {
    const std::size_t r0 = static_cast<std::size_t>(rb) * kBlock;
    const std::size_t rows = std::min(kBlock, n - r0);
    std::fill_n(dx.data() + r0 * in, rows * in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = w.data() + o * in;
      for (std::size_t r = r0; r < r0 + rows; ++r) {
        const double c = dy[r * out + o];
        if (c == 0.0) continue;
        double* dxr = dx.data() + r * in;
        for (std::size_t i = 0; i < in; ++i) dxr[i] += c * wr[i];
      }
    }
  }
}

void squared_distances(std::span<const double> a, std::size_t n, std::span<const double> b, std::size_t m,
                       std::size_t dim, std::span<double> d) {
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const double* ai = a.data() + static_cast<std::size_t>(i) * dim;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.data() + j * dim;
      v8d acc = {};
      std::size_t k = 0;
      for (; k + 8 <= dim; k += 8) {
        const v8d diff = load8(ai + k) - load8(bj + k);
        acc += diff * diff;
      }
      double tail = 0.0;
      for (; k < dim; ++k) tail += (ai[k] - bj[k]) * (ai[k] - bj[k]);
      d[static_cast<std::size_t>(i) * m + j] = reduce8(acc) + tail;
    }
  }
}

namespace serial {

void affine_forward(std::span<const double> x, std::size_t n, std::size_t in, std::span<const double> w,
                    std::span<const double> b, std::size_t out, std::span<double> y) {
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < in; ++i) acc += x[r * in + i] * w[o * in + i];
      y[r * out + o] = acc;
    }
}

void affine_grad_params(std::span<const double> dy, std::span<const double> x, std::size_t n, std::size_t in,
                        std::size_t out, std::span<double> dw, std::span<double> db) {
  for (std::size_t o = 0; o < out; ++o) {
    double bias = 0.0;
    for (std::size_t r = 0; r < n; ++r) bias += dy[r * out + o];
    db[o] = bias;
    for (std::size_t i = 0; i < in; ++i) {
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) acc += dy[r * out + o] * x[r * in + i];
      dw[o * in + i] = acc;
    }
  }
}

void affine_grad_input(std::span<const double> dy, std::span<const double> w, std::size_t n, std::size_t in,
                       std::size_t out, std::span<double> dx) {
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < in; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < out; ++o) acc += dy[r * out + o] * w[o * in + i];
      dx[r * in + i] = acc;
    }
}

void squared_distances(std::span<const double> a, std::size_t n, std::span<const double> b, std::size_t m,
                       std::size_t dim, std::span<double> d) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < dim; ++k) acc += (a[i * dim + k] - b[j * dim + k]) * (a[i * dim + k] - b[j * dim + k]);
      d[i * m + j] = acc;
    }
}

}  // namespace serial

}  // namespace fin::kernels

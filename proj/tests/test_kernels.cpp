#include <gtest/gtest.h>

#include <vector>

#include "fin/kernels.hpp"
#include "fin/rng.hpp"

using namespace fin;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  Rng r(seed);
  std::vector<double> v(n);
  for (double& x : v) x = r.uniform(-1, 1);
  return v;
}

struct Shape {
  std::size_t n, in, out;
};

const Shape kShapes[] = {{1, 1, 1}, {3, 5, 2}, {37, 19, 23}, {130, 64, 70}, {257, 33, 9}};

void expect_close(const std::vector<double>& a, const std::vector<double>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12 * (1 + std::abs(b[i])));
}

}  // namespace

TEST(Kernels, AffineForwardMatchesSerial) {
  for (const auto& s : kShapes) {
    const auto x = random_vec(s.n * s.in, 1), w = random_vec(s.out * s.in, 2), b = random_vec(s.out, 3);
    std::vector<double> y(s.n * s.out), yr(s.n * s.out);
    kernels::affine_forward(x, s.n, s.in, w, b, s.out, y);
    kernels::serial::affine_forward(x, s.n, s.in, w, b, s.out, yr);
    expect_close(y, yr);
  }
}

TEST(Kernels, AffineForwardByHand) {
  const std::vector<double> x{1, 2}, w{3, 4, 5, 6}, b{0.5, -1};
  std::vector<double> y(2);
  kernels::affine_forward(x, 1, 2, w, b, 2, y);
  EXPECT_EQ(y, (std::vector<double>{11.5, 16.0}));
}

TEST(Kernels, GradientsMatchSerial) {
  for (const auto& s : kShapes) {
    const auto x = random_vec(s.n * s.in, 4), w = random_vec(s.out * s.in, 5), dy = random_vec(s.n * s.out, 6);
    std::vector<double> dw(s.out * s.in, 9), db(s.out, 9), dwr(s.out * s.in), dbr(s.out);
    kernels::affine_grad_params(dy, x, s.n, s.in, s.out, dw, db);
    kernels::serial::affine_grad_params(dy, x, s.n, s.in, s.out, dwr, dbr);
    expect_close(dw, dwr);
    expect_close(db, dbr);
    std::vector<double> dx(s.n * s.in, 9), dxr(s.n * s.in);
    kernels::affine_grad_input(dy, w, s.n, s.in, s.out, dx);
    kernels::serial::affine_grad_input(dy, w, s.n, s.in, s.out, dxr);
    expect_close(dx, dxr);
  }
}

TEST(Kernels, SquaredDistancesMatchSerial) {
  const auto a = random_vec(40 * 7, 7), b = random_vec(300 * 7, 8);
  std::vector<double> d(40 * 300), dr(40 * 300);
  kernels::squared_distances(a, 40, b, 300, 7, d);
  kernels::serial::squared_distances(a, 40, b, 300, 7, dr);
  expect_close(d, dr);
  std::vector<double> one(1);
  kernels::squared_distances(std::vector<double>{0, 0}, 1, std::vector<double>{3, 4}, 1, 2, one);
  EXPECT_EQ(one[0], 25.0);
}

TEST(Kernels, BitIdenticalAcrossThreadCounts) {
  const Shape s{301, 41, 67};
  const auto x = random_vec(s.n * s.in, 1), w = random_vec(s.out * s.in, 2), b = random_vec(s.out, 3),
             dy = random_vec(s.n * s.out, 4);
  auto run = [&] {
    std::vector<double> y(s.n * s.out), dw(s.out * s.in), db(s.out), dx(s.n * s.in), d(s.n * s.n);
    kernels::affine_forward(x, s.n, s.in, w, b, s.out, y);
    kernels::affine_grad_params(dy, x, s.n, s.in, s.out, dw, db);
    kernels::affine_grad_input(dy, w, s.n, s.in, s.out, dx);
    kernels::squared_distances(x, s.n, x, s.n, s.in, d);
    return std::vector<std::vector<double>>{y, dw, db, dx, d};
  };
  kernels::set_threads(1);
  const auto ref = run();
  for (int t : {2, 3, 4}) {
    kernels::set_threads(t);
    EXPECT_EQ(run(), ref) << t << " threads";
  }
  kernels::set_threads(1);
}

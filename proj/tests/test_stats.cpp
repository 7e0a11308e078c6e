#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fin/errors.hpp"
#include "fin/rng.hpp"
#include "fin/stats.hpp"
#include "reference.hpp"

using namespace fin;
using namespace fin::stats;

namespace {
std::vector<double> normal_sample(std::size_t n, double mu, double sigma, std::uint64_t seed) {
  Rng r(seed);
  std::vector<double> v(n);
  for (double& x : v) x = mu + sigma * r.normal();
  return v;
}
}  // namespace

TEST(Stats, MeanStd) {
  const std::vector<double> x{2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(mean(x), 5.0);
  EXPECT_NEAR(stddev(x), std::sqrt(32.0 / 7.0), 1e-15);
  EXPECT_EQ(stddev(std::vector<double>{3.0}), 0.0);
}

TEST(Stats, DistributionsClosedForms) {
  EXPECT_NEAR(f_cdf(1.0, 10, 10), 0.5, 1e-12);
  EXPECT_NEAR(t_cdf(0.0, 7), 0.5, 1e-15);
  for (double t : {-3.0, -0.4, 0.7, 5.0}) EXPECT_NEAR(t_cdf(t, 1), 0.5 + std::atan(t) / std::numbers::pi, 1e-12);
  for (double x : {0.1, 1.0, 3.0}) EXPECT_NEAR(f_cdf(x, 2, 6), 1 - std::pow(1 + 2 * x / 6, -3.0), 1e-12);
  for (double x : {0.3, 1.7, 4.2})
    for (double d1 : {1.0, 3.0, 9.0})
      for (double d2 : {4.0, 20.0, 117.0}) EXPECT_NEAR(f_cdf(x, d1, d2), ref::f_cdf(x, d1, d2), 1e-10);
  for (double t : {-2.5, -0.1, 1.3}) EXPECT_NEAR(t_cdf(t, 13.7), ref::t_cdf(t, 13.7), 1e-10);
}

TEST(Levene, MatchesReference) {
  const std::vector<std::vector<double>> g{normal_sample(30, 0, 1, 1), normal_sample(25, 3, 2, 2),
                                           normal_sample(40, -1, 0.5, 3)};
  const auto r = levene(g);
  const auto e = ref::levene(g);
  EXPECT_NEAR(r.statistic, e.stat, 1e-9);
  EXPECT_NEAR(r.p_value, e.p, 1e-9);
  EXPECT_EQ(r.df1, 2);
  EXPECT_EQ(r.df2, 92);
}

TEST(Levene, DetectsFourfoldVariance) {
  const std::vector<std::vector<double>> g{normal_sample(30, 0, 1, 10), normal_sample(30, 0, 2, 11)};
  EXPECT_LT(levene(g).p_value, 0.05);
}

TEST(Levene, Degenerate) {
  const std::vector<std::vector<double>> flat{{1, 1, 1}, {1, 1, 1}};
  EXPECT_THROW(levene(flat), DegenerateGroups);
  const std::vector<std::vector<double>> one{{1, 2}};
  EXPECT_THROW(levene(one), std::invalid_argument);
  const std::vector<std::vector<double>> tiny{{1, 2}, {3}};
  EXPECT_THROW(levene(tiny), std::invalid_argument);
}

TEST(Welch, TextbookPair) {
  const std::vector<double> a{27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19.0, 21.7, 21.4};
  const std::vector<double> b{27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 20.5, 24.4};
  const auto r = welch_t_one_tailed(a, b, Alternative::Less);
  const auto e = ref::welch_less(a, b);
  EXPECT_NEAR(r.statistic, -2.46, 0.005);
  EXPECT_NEAR(r.df1, 24.988, 0.001);
  EXPECT_NEAR(r.statistic, e.stat, 1e-12);
  EXPECT_NEAR(r.p_value, e.p, 1e-10);
  EXPECT_NEAR(r.p_value, 0.0106, 0.0005);
  const auto g = welch_t_one_tailed(b, a, Alternative::Greater);
  EXPECT_NEAR(g.p_value, r.p_value, 1e-12);
  EXPECT_NEAR(welch_t_one_tailed(a, b, Alternative::Greater).p_value, 1 - r.p_value, 1e-12);
}

TEST(Welch, RandomAgainstReference) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto a = normal_sample(5 + s, 0.1 * s, 1 + 0.1 * s, s), b = normal_sample(30 - s, 0.5, 2, 100 + s);
    const auto e = ref::welch_less(a, b);
    const auto r = welch_t_one_tailed(a, b, Alternative::Less);
    EXPECT_NEAR(r.statistic, e.stat, 1e-10);
    EXPECT_NEAR(r.p_value, e.p, 1e-9);
  }
  const std::vector<double> c{1, 1, 1};
  EXPECT_THROW(welch_t_one_tailed(c, c, Alternative::Less), DegenerateGroups);
}

TEST(Bonferroni, ScalesAndCaps) {
  const std::vector<double> p{0.01, 0.2, 0.5};
  const auto c = bonferroni(p);
  EXPECT_NEAR(c[0], 0.03, 1e-15);
  EXPECT_NEAR(c[1], 0.6, 1e-15);
  EXPECT_EQ(c[2], 1.0);
}

TEST(SignTest, BinomialTail) {
  EXPECT_NEAR(sign_test(9, 1).p_value, 11.0 / 1024, 1e-15);
  EXPECT_NEAR(sign_test(10, 0).p_value, 1.0 / 1024, 1e-15);
  EXPECT_NEAR(sign_test(0, 4).p_value, 1.0, 1e-15);
  EXPECT_NEAR(sign_test(3, 3).p_value, 42.0 / 64, 1e-15);
}

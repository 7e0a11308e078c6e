#include "fin/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fin/errors.hpp"

namespace fin::stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double f_cdf(double x, double d1, double d2) {
  if (x <= 0.0) return 0.0;
  return boost::math::cdf(boost::math::fisher_f_distribution<double>(d1, d2), x);
}

double t_cdf(double x, double df) {
  return boost::math::cdf(boost::math::students_t_distribution<double>(df), x);
}

TestResult levene(std::span<const std::vector<double>> groups) {
  const std::size_t k = groups.size();
  if (k < 2) throw std::invalid_argument("levene needs at least 2 groups");
  std::vector<std::vector<double>> z(k);
  std::vector<double> zbar(k);
  std::size_t n = 0;
  double zsum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (groups[i].size() < 2) throw std::invalid_argument("levene needs at least 2 observations per group");
    const double m = mean(groups[i]);
    for (double v : groups[i]) z[i].push_back(std::abs(v - m));
    zbar[i] = mean(z[i]);
    n += groups[i].size();
    for (double v : z[i]) zsum += v;
  }
  const double zall = zsum / static_cast<double>(n);
  double between = 0.0, within = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    between += static_cast<double>(z[i].size()) * (zbar[i] - zall) * (zbar[i] - zall);
    for (double v : z[i]) within += (v - zbar[i]) * (v - zbar[i]);
  }
  TestResult r;
  r.df1 = static_cast<double>(k - 1);
  r.df2 = static_cast<double>(n - k);
  if (within == 0.0) {
    if (between == 0.0) throw DegenerateGroups("no group has internal spread");
    r.statistic = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    return r;
  }
  r.statistic = (r.df2 / r.df1) * between / within;
  r.p_value = std::clamp(1.0 - f_cdf(r.statistic, r.df1, r.df2), 0.0, 1.0);
  return r;
}

TestResult welch_t_one_tailed(std::span<const double> a, std::span<const double> b, Alternative alt) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch test needs at least 2 observations per sample");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = stddev(a) * stddev(a) / na, vb = stddev(b) * stddev(b) / nb;
  if (va + vb == 0.0) throw DegenerateGroups("both samples are constant");
  TestResult r;
  r.statistic = (mean(a) - mean(b)) / std::sqrt(va + vb);
  r.df1 = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const double lower = t_cdf(r.statistic, r.df1);
  r.p_value = alt == Alternative::Greater ? 1.0 - lower : lower;
  r.p_value = std::clamp(r.p_value, 0.0, 1.0);
  return r;
}

std::vector<double> bonferroni(std::span<const double> p_values) {
  const auto m = static_cast<double>(p_values.size());
  std::vector<double> out;
  out.reserve(p_values.size());
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p-values must lie in [0, 1]");
    out.push_back(std::min(1.0, p * m));
  }
  return out;
}

TestResult sign_test(int wins, int losses) {
  if (wins < 0 || losses < 0) throw std::invalid_argument("sign test counts must be non-negative");
  TestResult r;
  r.statistic = wins;
  const int n = wins + losses;
  if (n == 0) return r;
  // P(X >= wins) = 1 - P(X <= wins - 1)
  r.p_value = wins == 0 ? 1.0
                        : boost::math::cdf(boost::math::complement(
                              boost::math::binomial_distribution<double>(n, 0.5), static_cast<double>(wins - 1)));
  return r;
}

}  // namespace fin::stats

#pragma once

// Hypothesis tests used to compare accuracy samples across models.

#include <span>
#include <vector>

namespace fin::stats {

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double stddev(std::span<const double> x);

/// P(F <= x) for an F(d1, d2) variable.
double f_cdf(double x, double d1, double d2);
/// P(T <= x) for a Student t variable with df degrees of freedom.
double t_cdf(double x, double df);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double df1 = 0.0;
  double df2 = 0.0;
};

/// Levene's W with absolute deviations from group means; p from F(k-1, N-k).
/// Throws std::invalid_argument for fewer than 2 groups or a group of size
/// below 2, DegenerateGroups when no group has internal spread.
TestResult levene(std::span<const std::vector<double>> groups);

enum class Alternative { Greater, Less };

/// Welch's t for mean(a) - mean(b) with Welch-Satterthwaite df; one-tailed
/// p for the given alternative. Throws DegenerateGroups when both samples
/// are constant.
TestResult welch_t_one_tailed(std::span<const double> a, std::span<const double> b, Alternative alt);

/// min(1, p * m) for each of the m values.
std::vector<double> bonferroni(std::span<const double> p_values);

/// One-sided sign test of wins against losses (ties already dropped):
/// P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
TestResult sign_test(int wins, int losses);

}  // namespace fin::stats

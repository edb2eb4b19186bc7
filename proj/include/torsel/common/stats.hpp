#pragma once

#include <span>
#include <utility>
#include <vector>

namespace torsel::stats {

double mean(std::span<const double> xs);

/// Sample standard deviation (n - 1 denominator). Zero for n < 2.
double stddev(std::span<const double> xs);

/// Linear-interpolated quantile (type 7). q in [0, 1]. Empty input throws.
double quantile(std::vector<double> xs, double q);

inline double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

/// Two-sided Student-t confidence interval for the mean. Requires n >= 2.
std::pair<double, double> t_interval(std::span<const double> xs, double level = 0.95);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

/// Average ranks (1-based), ties share the mean rank.
std::vector<double> ranks(std::span<const double> xs);

}  // namespace torsel::stats

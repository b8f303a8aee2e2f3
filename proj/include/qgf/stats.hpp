#pragma once

#include <span>
#include <vector>

namespace qgf {

/// Pairwise (cascade) summation; order-stable so reductions are reproducible.
double pairwise_sum(std::span<const double> v);

double mean(std::span<const double> v);

/// Population variance (divides by n).
double variance(std::span<const double> v);

/// Sample standard deviation (divides by n - 1); 0 for fewer than 2 values.
double sample_stddev(std::span<const double> v);

/// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> ranks(std::span<const double> v);

double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

/// Two-sided p-value for H0: rho = 0, via the Fisher z transform with the
/// 1.06 variance factor for rank correlations.
double spearman_p_value(double rho, std::size_t n);

}  // namespace qgf

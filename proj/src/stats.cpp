#include "qgf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qgf/error.hpp"

namespace qgf {

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return pairwise_sum(v) / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double m = mean(v);
  std::vector<double> sq(v.size());
  std::transform(v.begin(), v.end(), sq.begin(), [m](double x) { return (x - m) * (x - m); });
  return pairwise_sum(sq) / static_cast<double>(v.size());
}

double sample_stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double n = static_cast<double>(v.size());
  return std::sqrt(variance(v) * n / (n - 1.0));
}

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorKind::invalid_argument, "correlation needs two equal-length samples (n >= 2)");
  }
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  return pearson(rx, ry);
}

double spearman_p_value(double rho, std::size_t n) {
  if (n < 4) return 1.0;
  const double r = std::clamp(rho, -0.999999999, 0.999999999);
  const double z = std::atanh(r) * std::sqrt((static_cast<double>(n) - 3.0) / 1.06);
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

}  // namespace qgf

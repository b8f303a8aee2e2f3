#pragma once

#include <functional>
#include <string>

#include "qgf/types.hpp"

namespace qgf {

enum class FilterKind { lowpass_denoise, tikhonov, heat, custom };

/// Spectral transfer function g(lambda).
struct FilterSpec {
  FilterKind kind = FilterKind::lowpass_denoise;
  double tau = 3.0;
  int r = 1;
  double scale = 5.0;       // lowpass: tau / (tau + scale * lambda)
  double lambda_max = 0.0;  // heat: <= 0 means "use the fitting interval"
  std::function<double(double)> custom;

  static FilterSpec lowpass(double tau = 3.0, double scale = 5.0);
  static FilterSpec tikhonov(double tau, int r);
  static FilterSpec heat(double tau, double lambda_max = 0.0);
  static FilterSpec from_function(std::function<double(double)> g);

  double eval(double lambda) const;
  std::string name() const;
};

/// Monomial coefficients of the order-K polynomial approximating g on
/// [0, domain_max]. `chebyshev` keeps the series the fit came from.
struct FilterApprox {
  VectorXd alpha;
  int order = 0;
  double domain_max = 2.0;
  VectorXd chebyshev;
  double fit_error = 0.0;  // sup |p - g| on a 10^4-point grid
};

inline constexpr int max_filter_order = 30;

FilterApprox chebyshev_fit(const FilterSpec& spec, int order, double lambda_max,
                           int quadrature_points = 1000);

/// Wraps raw monomial coefficients (order = size - 1).
FilterApprox approx_from_alpha(const VectorXd& alpha, double domain_max = 2.0);

double evaluate_monomial(const VectorXd& alpha, double lambda);

/// Evaluates c_0/2 + sum_j c_j T_j(lambda / a - 1), a = domain_max / 2.
double evaluate_chebyshev(const VectorXd& c, double domain_max, double lambda);

/// Converts a shifted Chebyshev series on [0, domain_max] to monomial form.
VectorXd chebyshev_to_monomial(const VectorXd& c, double domain_max);

/// Centralized reference: sum_k alpha_k L^k f by Horner's rule.
template <typename DerivedL, typename DerivedF>
Vector<typename DerivedF::Scalar> apply_filter_exact(const FilterApprox& approx,
                                                     const Eigen::MatrixBase<DerivedL>& L,
                                                     const Eigen::MatrixBase<DerivedF>& f) {
  using Scalar = typename DerivedF::Scalar;
  const auto& a = approx.alpha;
  Vector<Scalar> y = Scalar(a(a.size() - 1)) * f;
  for (Eigen::Index k = a.size() - 2; k >= 0; --k) {
    y = (L * y).eval() + Scalar(a(k)) * f;
  }
  return y;
}

}  // namespace qgf

#include "qgf/filter.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "qgf/error.hpp"

namespace qgf {

FilterSpec FilterSpec::lowpass(double tau, double scale) {
  FilterSpec s;
  s.kind = FilterKind::lowpass_denoise;
  s.tau = tau;
  s.scale = scale;
  return s;
}

FilterSpec FilterSpec::tikhonov(double tau, int r) {
  FilterSpec s;
  s.kind = FilterKind::tikhonov;
  s.tau = tau;
  s.r = r;
  return s;
}

FilterSpec FilterSpec::heat(double tau, double lambda_max) {
  FilterSpec s;
  s.kind = FilterKind::heat;
  s.tau = tau;
  s.lambda_max = lambda_max;
  return s;
}

FilterSpec FilterSpec::from_function(std::function<double(double)> g) {
  FilterSpec s;
  s.kind = FilterKind::custom;
  s.custom = std::move(g);
  return s;
}

double FilterSpec::eval(double lambda) const {
  switch (kind) {
    case FilterKind::lowpass_denoise: return tau / (tau + scale * lambda);
    case FilterKind::tikhonov: return tau / (tau + 2.0 * std::pow(lambda, r));
    case FilterKind::heat: {
      const double lmax = lambda_max > 0.0 ? lambda_max : 2.0;
      return std::exp(-tau * lambda / lmax);
    }
    case FilterKind::custom:
      if (!custom) throw Error(ErrorKind::invalid_argument, "custom filter has no function");
      return custom(lambda);
  }
  return 0.0;
}

std::string FilterSpec::name() const {
  std::ostringstream os;
  switch (kind) {
    case FilterKind::lowpass_denoise: os << "lowpass(tau=" << tau << ",scale=" << scale << ")"; break;
    case FilterKind::tikhonov: os << "tikhonov(tau=" << tau << ",r=" << r << ")"; break;
    case FilterKind::heat: os << "heat(tau=" << tau << ")"; break;
    case FilterKind::custom: os << "custom"; break;
  }
  return os.str();
}

double evaluate_monomial(const VectorXd& alpha, double lambda) {
  double y = 0.0;
  for (Eigen::Index k = alpha.size() - 1; k >= 0; --k) y = y * lambda + alpha(k);
  return y;
}

double evaluate_chebyshev(const VectorXd& c, double domain_max, double lambda) {
  // Clenshaw
  const double a = domain_max / 2.0;
  const double x = lambda / a - 1.0;
  double b1 = 0.0, b2 = 0.0;
  for (Eigen::Index j = c.size() - 1; j >= 1; --j) {
    const double b0 = 2.0 * x * b1 - b2 + c(j);
    b2 = b1;
    b1 = b0;
  }
  return x * b1 - b2 + 0.5 * c(0);
}

VectorXd chebyshev_to_monomial(const VectorXd& c, double domain_max) {
  const Eigen::Index order = c.size() - 1;
  const double a = domain_max / 2.0;
  // u(lambda) = lambda / a - 1
  VectorXd alpha = VectorXd::Zero(order + 1);
  VectorXd t_prev = VectorXd::Zero(order + 1);
  VectorXd t_cur = VectorXd::Zero(order + 1);
  t_prev(0) = 1.0;
  alpha += 0.5 * c(0) * t_prev;
  if (order == 0) return alpha;
  t_cur(0) = -1.0;
  t_cur(1) = 1.0 / a;
  alpha += c(1) * t_cur;
  for (Eigen::Index j = 1; j < order; ++j) {
    // T_{j+1} = 2 u T_j - T_{j-1}
    VectorXd t_next = -t_prev;
    for (Eigen::Index p = 0; p <= j; ++p) {
      t_next(p) -= 2.0 * t_cur(p);
      t_next(p + 1) += 2.0 * t_cur(p) / a;
    }
    alpha += c(j + 1) * t_next;
    t_prev = std::move(t_cur);
    t_cur = std::move(t_next);
  }
  return alpha;
}

FilterApprox chebyshev_fit(const FilterSpec& spec, int order, double lambda_max,
                           int quadrature_points) {
  if (order < 0) throw Error(ErrorKind::invalid_argument, "filter order must be >= 0");
  if (order > max_filter_order) {
    throw Error(ErrorKind::invalid_argument,
                "filter order above 30: monomial conversion is ill-conditioned");
  }
  if (!(lambda_max > 0.0) || lambda_max > 2.0 + 1e-9) {
    throw Error(ErrorKind::invalid_argument, "lambda_max must lie in (0, 2]");
  }
  if (quadrature_points < order + 1) {
    throw Error(ErrorKind::invalid_argument, "need at least order + 1 quadrature points");
  }

  FilterSpec g = spec;
  if (g.kind == FilterKind::heat && !(g.lambda_max > 0.0)) g.lambda_max = lambda_max;

  const double a = lambda_max / 2.0;
  const int m = quadrature_points;
  VectorXd samples(m);
  VectorXd angles(m);
  for (int i = 0; i < m; ++i) {
    angles(i) = std::numbers::pi * (i + 0.5) / m;
    samples(i) = g.eval(a * (std::cos(angles(i)) + 1.0));
  }
  VectorXd c(order + 1);
  for (int j = 0; j <= order; ++j) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += std::cos(j * angles(i)) * samples(i);
    c(j) = 2.0 * acc / m;
  }

  FilterApprox out;
  out.order = order;
  out.domain_max = lambda_max;
  out.chebyshev = c;
  out.alpha = chebyshev_to_monomial(c, lambda_max);

  constexpr int grid = 10000;
  double err = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double lambda = lambda_max * i / (grid - 1);
    err = std::max(err, std::abs(evaluate_monomial(out.alpha, lambda) - g.eval(lambda)));
  }
  out.fit_error = err;
  return out;
}

FilterApprox approx_from_alpha(const VectorXd& alpha, double domain_max) {
  if (alpha.size() < 1) throw Error(ErrorKind::invalid_argument, "alpha must be non-empty");
  FilterApprox out;
  out.alpha = alpha;
  out.order = static_cast<int>(alpha.size()) - 1;
  out.domain_max = domain_max;
  return out;
}

}  // namespace qgf

#include "qgf/allocation.hpp"

#include <cmath>
#include <queue>
#include <sstream>
#include <tuple>

#include "qgf/error.hpp"

namespace qgf {
namespace {

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return std::round(c);
}

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

void check_inputs(const MatrixXd& F, const VectorXi& degrees, double budget, double range) {
  if (F.cols() != degrees.size()) {
    throw Error(ErrorKind::invalid_argument, "F must be K x N with N matching the degree vector");
  }
  if (degrees.size() > 0 && degrees.minCoeff() < 1) {
    throw Error(ErrorKind::invalid_argument, "every node needs degree >= 1");
  }
  if (!(budget > 0.0)) throw Error(ErrorKind::invalid_argument, "budget must be positive");
  if (!(range > 0.0)) throw Error(ErrorKind::invalid_argument, "quantizer range must be positive");
  if ((F.array() < 0.0).any() || !F.allFinite()) {
    throw Error(ErrorKind::invalid_argument, "F must be finite and nonnegative");
  }
  const double minimum = minimum_budget(degrees, static_cast<int>(F.rows()));
  if (budget < minimum) {
    std::ostringstream msg;
    msg << "infeasible budget: " << budget << " < " << minimum << " (one bit per message)";
    throw Error(ErrorKind::infeasible_budget, msg.str());
  }
}

MatrixXi rounded_bits(const MatrixXd& x) {
  MatrixXi bits(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) bits(i) = std::max(1, round_half_up(x(i)));
  return bits;
}

}  // namespace

double error_operator_coefficient(const VectorXd& alpha, int k, int j) {
  const int order = static_cast<int>(alpha.size()) - 1;
  double c = 0.0;
  for (int i = j; i <= order - k; ++i) c += alpha(k + i) * binomial(k + i, k + j);
  return c;
}

ErrorModel build_error_model(const FilterApprox& approx, const MatrixXd& L) {
  ErrorModel m;
  m.H = compute_Hk(approx, L, approx.order);
  m.F = compute_F(m.H);
  if (approx.order == 0) m.F.resize(0, L.cols());
  m.alpha = approx.alpha;
  return m;
}

double allocation_cost(const MatrixXd& bits, const VectorXi& degrees) {
  return (bits.rowwise().sum().array() * degrees.cast<double>().array()).sum();
}

double allocation_cost(const MatrixXi& bits, const VectorXi& degrees) {
  return allocation_cost(MatrixXd(bits.cast<double>()), degrees);
}

double minimum_budget(const VectorXi& degrees, int order) {
  return static_cast<double>(order) * degrees.cast<double>().sum();
}

AllocationPlan kkt_allocate(const MatrixXd& F, const VectorXi& degrees, double budget, double range) {
  check_inputs(F, degrees, budget, range);
  const auto order = F.rows();
  const auto n = F.cols();
  const double ln2 = std::log(2.0);

  double pinned_cost = 0.0;
  double active_degree_sum = 0.0;
  double weighted_log_sum = 0.0;
  for (Eigen::Index k = 0; k < order; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = degrees(i);
      if (F(k, i) > 0.0) {
        active_degree_sum += d;
        weighted_log_sum += d * std::log(3.0 * d / (2.0 * range * range * ln2 * F(k, i)));
      } else {
        pinned_cost += d;
      }
    }
  }

  AllocationPlan plan;
  plan.degrees = degrees;
  plan.budget = budget;
  MatrixXd x = MatrixXd::Ones(n, order);
  if (active_degree_sum > 0.0) {
    const double active_budget = budget - pinned_cost;
    plan.log_mu = -(active_budget * std::log(4.0) + weighted_log_sum) / active_degree_sum;
    plan.mu = std::exp(plan.log_mu);
    for (Eigen::Index k = 0; k < order; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!(F(k, i) > 0.0)) continue;
        const double d = degrees(i);
        const double c = std::log(3.0 * d / (2.0 * range * range * ln2 * F(k, i)));
        x(i, k) = -(plan.log_mu + c) / (2.0 * ln2);
      }
    }
  } else {
    plan.log_mu = -std::numeric_limits<double>::infinity();
  }
  plan.bits = rounded_bits(x);
  plan.cost = allocation_cost(plan.bits, degrees);
  plan.real_valued = std::move(x);
  return plan;
}

AllocationPlan kkt_allocate_bisection(const MatrixXd& F, const VectorXi& degrees, double budget,
                                      double range) {
  check_inputs(F, degrees, budget, range);
  const auto order = F.rows();
  const auto n = F.cols();
  const double ln2 = std::log(2.0);

  // d/dx [(R^2/3) F 2^{-2x}] + mu d = 0, solved for x in log form.
  auto solve_entry = [&](double log_mu, double f, double d) {
    auto residual = [&](double x) {
      return std::log(2.0 * range * range * ln2 * f / 3.0) - 2.0 * ln2 * x - log_mu - std::log(d);
    };
    double lo = -64.0, hi = 64.0;
    while (residual(lo) < 0.0) lo *= 2.0;
    while (residual(hi) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (residual(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  double pinned_cost = 0.0;
  for (Eigen::Index k = 0; k < order; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(F(k, i) > 0.0)) pinned_cost += degrees(i);
    }
  }
  const double active_budget = budget - pinned_cost;

  auto fill = [&](double log_mu, MatrixXd& x) {
    double spent = 0.0;
    for (Eigen::Index k = 0; k < order; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!(F(k, i) > 0.0)) {
          x(i, k) = 1.0;
          continue;
        }
        x(i, k) = solve_entry(log_mu, F(k, i), degrees(i));
        spent += x(i, k) * degrees(i);
      }
    }
    return spent;
  };

  AllocationPlan plan;
  plan.degrees = degrees;
  plan.budget = budget;
  MatrixXd x = MatrixXd::Ones(n, order);
  if (pinned_cost < minimum_budget(degrees, static_cast<int>(order))) {
    // Spending decreases with log(mu).
    double lo = -50.0, hi = 50.0;
    while (fill(lo, x) < active_budget) lo *= 2.0;
    while (fill(hi, x) > active_budget) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (fill(mid, x) > active_budget ? lo : hi) = mid;
    }
    plan.log_mu = 0.5 * (lo + hi);
    plan.mu = std::exp(plan.log_mu);
    fill(plan.log_mu, x);
  } else {
    plan.log_mu = -std::numeric_limits<double>::infinity();
  }
  plan.bits = rounded_bits(x);
  plan.cost = allocation_cost(plan.bits, degrees);
  plan.real_valued = std::move(x);
  return plan;
}

AllocationPlan integerize(const AllocationPlan& plan) {
  if (!plan.real_valued) {
    throw Error(ErrorKind::invalid_argument, "integerize needs a real-valued plan");
  }
  AllocationPlan out = plan;
  out.bits = rounded_bits(*plan.real_valued);
  out.cost = allocation_cost(out.bits, plan.degrees);
  return out;
}

AllocationPlan repair_budget(const AllocationPlan& plan, const MatrixXd& F, double range) {
  AllocationPlan out = plan;
  using Candidate = std::tuple<double, Eigen::Index, Eigen::Index>;  // increase, node, step
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap;
  // Dropping b -> b-1 raises the expected error by R^2 F 4^{-b}.
  auto push = [&](Eigen::Index i, Eigen::Index k) {
    if (out.bits(i, k) > 1) {
      heap.emplace(range * range * F(k, i) * std::exp2(-2.0 * out.bits(i, k)), i, k);
    }
  };
  for (Eigen::Index k = 0; k < out.bits.cols(); ++k) {
    for (Eigen::Index i = 0; i < out.bits.rows(); ++i) push(i, k);
  }
  while (out.cost > out.budget) {
    if (heap.empty()) {
      throw Error(ErrorKind::infeasible_budget, "budget cannot be met with one bit per message");
    }
    const auto [inc, i, k] = heap.top();
    heap.pop();
    --out.bits(i, k);
    out.cost -= out.degrees(i);
    push(i, k);
  }
  return out;
}

AllocationPlan uniform_allocate(double budget, const VectorXi& degrees, int order) {
  const double minimum = minimum_budget(degrees, order);
  if (budget < minimum || !(budget > 0.0)) {
    std::ostringstream msg;
    msg << "infeasible budget: " << budget << " < " << minimum << " (one bit per message)";
    throw Error(ErrorKind::infeasible_budget, msg.str());
  }
  const int b = std::max(1, round_half_up(budget / minimum));
  AllocationPlan plan = constant_plan(static_cast<int>(degrees.size()), order, b, degrees);
  plan.budget = budget;
  return plan;
}

AllocationPlan constant_plan(int n_nodes, int order, int bits, const VectorXi& degrees) {
  AllocationPlan plan;
  plan.degrees = degrees;
  plan.bits = MatrixXi::Constant(n_nodes, order, bits);
  plan.cost = allocation_cost(plan.bits, degrees);
  plan.budget = plan.cost;
  return plan;
}

}  // namespace qgf

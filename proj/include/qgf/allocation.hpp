#pragma once

#include <optional>
#include <vector>

#include "qgf/distsim.hpp"
#include "qgf/filter.hpp"
#include "qgf/types.hpp"

namespace qgf {

/// Output-error operators of the bounded scheme and their column energies.
/// F is K x N with F(k, n) = (H_k^T H_k)(n, n).
struct ErrorModel {
  std::vector<MatrixXd> H;
  MatrixXd F;
  VectorXd alpha;
};

/// Bits per message. `bits` is N x K; `real_valued` holds the continuous
/// KKT solution when the plan came from kkt_allocate.
struct AllocationPlan {
  MatrixXi bits;
  VectorXi degrees;
  double budget = 0.0;
  double cost = 0.0;  // sum_{n,k} bits(n,k) * degrees(n)
  double log_mu = 0.0;
  double mu = 0.0;
  std::optional<MatrixXd> real_valued;
};

/// (L - I)^j for j = 0..max_power.
template <typename Derived>
std::vector<Matrix<typename Derived::Scalar>> shifted_powers(const Eigen::MatrixBase<Derived>& L,
                                                             int max_power) {
  using Scalar = typename Derived::Scalar;
  const auto n = L.rows();
  Matrix<Scalar> shifted = L;
  shifted.diagonal().array() -= Scalar(1);
  std::vector<Matrix<Scalar>> powers;
  powers.reserve(max_power + 1);
  powers.push_back(Matrix<Scalar>::Identity(n, n));
  for (int j = 1; j <= max_power; ++j) powers.push_back(powers.back() * shifted);
  return powers;
}

/// Coefficient of (L - I)^j in H_k: sum_{i=j}^{K-k} alpha_{k+i} C(k+i, k+j).
double error_operator_coefficient(const VectorXd& alpha, int k, int j);

/// H_k = sum_{i=1}^{K-k} alpha_{k+i} sum_{j=1}^{i} C(k+i, k+j) (L - I)^j for
/// k = 0..K-1. The powers of L - I are formed once and shared.
template <typename Derived>
std::vector<Matrix<typename Derived::Scalar>> compute_Hk(const FilterApprox& approx,
                                                         const Eigen::MatrixBase<Derived>& L,
                                                         int order) {
  using Scalar = typename Derived::Scalar;
  const auto powers = shifted_powers(L, order);
  std::vector<Matrix<Scalar>> H;
  H.reserve(order);
  for (int k = 0; k < order; ++k) {
    Matrix<Scalar> h = Matrix<Scalar>::Zero(L.rows(), L.cols());
    for (int j = 1; j <= order - k; ++j) {
      h += Scalar(error_operator_coefficient(approx.alpha, k, j)) * powers[j];
    }
    H.push_back(std::move(h));
  }
  return H;
}

/// Diagonal of H_k^T H_k per step, as a K x N matrix.
template <typename Scalar>
Matrix<Scalar> compute_F(const std::vector<Matrix<Scalar>>& H) {
  if (H.empty()) return Matrix<Scalar>(0, 0);
  Matrix<Scalar> F(static_cast<Eigen::Index>(H.size()), H.front().cols());
  for (std::size_t k = 0; k < H.size(); ++k) {
    F.row(static_cast<Eigen::Index>(k)) = H[k].colwise().squaredNorm();
  }
  return F;
}

ErrorModel build_error_model(const FilterApprox& approx, const MatrixXd& L);

/// Closed-form expected total squared error (range^2 / 3) sum F 2^{-2x}.
/// `bits` is N x K.
template <typename Derived>
double expected_mse(const MatrixXd& F, const Eigen::MatrixBase<Derived>& bits, double range) {
  const MatrixXd x = bits.template cast<double>();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < F.rows(); ++k) {
    for (Eigen::Index n = 0; n < F.cols(); ++n) acc += F(k, n) * std::exp2(-2.0 * x(n, k));
  }
  return range * range / 3.0 * acc;
}

double allocation_cost(const MatrixXd& bits, const VectorXi& degrees);
double allocation_cost(const MatrixXi& bits, const VectorXi& degrees);

/// Smallest budget that gives every message one bit: K * sum(d).
double minimum_budget(const VectorXi& degrees, int order);

/// Real-valued KKT solution (log-space multiplier). Messages with F = 0 are
/// pinned to one bit and left out of the multiplier. `bits` holds
/// max(1, round(x)); call integerize for the documented rounding.
AllocationPlan kkt_allocate(const MatrixXd& F, const VectorXi& degrees, double budget, double range);

/// Numeric oracle: bisection on log(mu) over the budget equation, with each
/// x(n, k) found by bisection on its own stationarity condition.
AllocationPlan kkt_allocate_bisection(const MatrixXd& F, const VectorXi& degrees, double budget,
                                      double range);

/// bits = max(1, floor(x + 1/2)); records the resulting cost.
AllocationPlan integerize(const AllocationPlan& plan);

/// Greedy repair: while cost > budget, drop one bit from the message whose
/// expected-error increase is smallest.
AllocationPlan repair_budget(const AllocationPlan& plan, const MatrixXd& F, double range);

AllocationPlan uniform_allocate(double budget, const VectorXi& degrees, int order);

/// Every message gets `bits`.
AllocationPlan constant_plan(int n_nodes, int order, int bits, const VectorXi& degrees);

}  // namespace qgf

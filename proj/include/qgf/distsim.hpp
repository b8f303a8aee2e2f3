#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "qgf/filter.hpp"
#include "qgf/graph.hpp"
#include "qgf/types.hpp"

namespace qgf {

struct AllocationPlan;

enum class Scheme { exact, unbounded, bounded };

const char* to_string(Scheme s) noexcept;

/// Quantizer range of the bounded scheme. `l2_norm` is the a-priori bound
/// ||(L - I)^k f||_inf <= ||f||_2; `sup_norm` uses ||f||_inf and relies on
/// saturation when shifted iterates overshoot it.
enum class RangePolicy { l2_norm, sup_norm };

const char* to_string(RangePolicy p) noexcept;

double bounded_range(const VectorXd& f_in, RangePolicy policy);

/// Everything a synchronous run produced. Rows are steps, columns are nodes.
struct SimulationTrace {
  Scheme scheme = Scheme::exact;
  MatrixXd messages;   // K x N, values actually transmitted
  MatrixXd errors;     // K x N, transmitted minus true value
  MatrixXd z_history;  // (K+1) x N, recovered z_k = L^k f (plus noise)
  VectorXd output;
};

/// One row of a local operator: the node's own coefficient and those of its
/// neighbors, sorted by node index.
struct LocalRow {
  std::vector<int> index;
  std::vector<double> coeff;
};

/// Per-node view of L (or L - I). A node combines only values it received.
class LocalOperator {
 public:
  explicit LocalOperator(const MatrixXd& op);

  int size() const { return static_cast<int>(rows_.size()); }
  const LocalRow& row(int node) const { return rows_[node]; }

  /// Combines an inbox of (sender, value) pairs sorted by sender. Entries
  /// from non-neighbors are ignored.
  double apply(int node, std::span<const std::pair<int, double>> inbox) const;

 private:
  std::vector<LocalRow> rows_;
};

struct NodeState {
  int node_id = 0;
  double accumulated_output = 0.0;
  std::vector<double> zdot_history;
  std::vector<std::pair<int, double>> neighbor_inbox;
};

/// Maps (step, node, true value) to the transmitted value.
using MessageEncoder = std::function<double(int step, int node, double value)>;

/// Generic synchronous engine. With `shifted`, nodes iterate L - I and
/// recover z_k through binomial sums of their own pre-quantization history.
SimulationTrace simulate(const LaplacianPair& lp, const FilterApprox& approx, const VectorXd& f_in,
                         Scheme scheme, const MessageEncoder& encode);

SimulationTrace run_exact(const LaplacianPair& lp, const FilterApprox& approx, const VectorXd& f_in);
SimulationTrace run_exact(const Graph& g, const FilterApprox& approx, const VectorXd& f_in);

/// Quantizes step-k messages of the plain-L iteration with range
/// lambda_max^k * ||f_in||_2.
SimulationTrace run_unbounded_quantized(const LaplacianPair& lp, const FilterApprox& approx,
                                        const VectorXd& f_in, const AllocationPlan& plan);
SimulationTrace run_unbounded_quantized(const Graph& g, const FilterApprox& approx,
                                        const VectorXd& f_in, const AllocationPlan& plan);

/// Quantizes every message of the shifted iteration with one fixed range.
SimulationTrace run_bounded_quantized(const LaplacianPair& lp, const FilterApprox& approx,
                                      const VectorXd& f_in, const AllocationPlan& plan,
                                      RangePolicy policy = RangePolicy::l2_norm);
SimulationTrace run_bounded_quantized(const Graph& g, const FilterApprox& approx,
                                      const VectorXd& f_in, const AllocationPlan& plan,
                                      RangePolicy policy = RangePolicy::l2_norm);

/// Adds eps(k, n) to each message instead of quantizing. `exact` behaves
/// like `unbounded` (plain L iteration).
SimulationTrace run_with_injected_errors(const LaplacianPair& lp, const FilterApprox& approx,
                                         const VectorXd& f_in, const MatrixXd& eps, Scheme scheme);
SimulationTrace run_with_injected_errors(const Graph& g, const FilterApprox& approx,
                                         const VectorXd& f_in, const MatrixXd& eps, Scheme scheme);

/// C(k, i) for 0 <= i <= k <= max_k, row-major in k.
std::vector<std::vector<std::int64_t>> binomial_table(int max_k);

}  // namespace qgf

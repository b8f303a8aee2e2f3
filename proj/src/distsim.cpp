#include "qgf/distsim.hpp"

#include <algorithm>
#include <cmath>

#include "qgf/allocation.hpp"
#include "qgf/error.hpp"
#include "qgf/quantizer.hpp"

namespace qgf {

const char* to_string(Scheme s) noexcept {
  switch (s) {
    case Scheme::exact: return "exact";
    case Scheme::unbounded: return "unbounded";
    case Scheme::bounded: return "bounded";
  }
  return "unknown";
}

const char* to_string(RangePolicy p) noexcept {
  return p == RangePolicy::l2_norm ? "l2_norm" : "sup_norm";
}

double bounded_range(const VectorXd& f_in, RangePolicy policy) {
  return policy == RangePolicy::l2_norm ? f_in.norm() : f_in.lpNorm<Eigen::Infinity>();
}

LocalOperator::LocalOperator(const MatrixXd& op) : rows_(op.rows()) {
  for (Eigen::Index i = 0; i < op.rows(); ++i) {
    for (Eigen::Index j = 0; j < op.cols(); ++j) {
      if (op(i, j) != 0.0) {
        rows_[i].index.push_back(static_cast<int>(j));
        rows_[i].coeff.push_back(op(i, j));
      }
    }
  }
}

double LocalOperator::apply(int node, std::span<const std::pair<int, double>> inbox) const {
  const LocalRow& r = rows_[node];
  double acc = 0.0;
  std::size_t pos = 0;
  for (const auto& [sender, value] : inbox) {
    while (pos < r.index.size() && r.index[pos] < sender) ++pos;
    if (pos == r.index.size()) break;
    if (r.index[pos] == sender) acc += r.coeff[pos] * value;
  }
  return acc;
}

std::vector<std::vector<std::int64_t>> binomial_table(int max_k) {
  std::vector<std::vector<std::int64_t>> c(max_k + 1);
  for (int k = 0; k <= max_k; ++k) {
    c[k].assign(k + 1, 1);
    for (int i = 1; i < k; ++i) c[k][i] = c[k - 1][i - 1] + c[k - 1][i];
  }
  return c;
}

SimulationTrace simulate(const LaplacianPair& lp, const FilterApprox& approx, const VectorXd& f_in,
                         Scheme scheme, const MessageEncoder& encode) {
  const int n = static_cast<int>(f_in.size());
  const int order = approx.order;
  if (lp.normalized.rows() != n) {
    throw Error(ErrorKind::invalid_argument, "signal length does not match graph size");
  }
  if (approx.alpha.size() != order + 1) {
    throw Error(ErrorKind::invalid_argument, "filter coefficient count must be order + 1");
  }
  const bool shifted = scheme == Scheme::bounded;
  const LocalOperator op(shifted ? lp.shifted : lp.normalized);
  const auto binom = binomial_table(order);

  SimulationTrace trace;
  trace.scheme = scheme;
  trace.messages.resize(order, n);
  trace.errors.resize(order, n);
  trace.z_history.resize(order + 1, n);
  trace.output.resize(n);

  std::vector<NodeState> nodes(n);
  // Value each node computed this round (z_k, or zdot_k when shifted).
  VectorXd current = f_in;
  VectorXd sent(n);

  auto record = [&](int k) {
    for (int i = 0; i < n; ++i) {
      NodeState& s = nodes[i];
      double z = current(i);
      if (shifted) {
        s.zdot_history.push_back(current(i));
        z = 0.0;
        for (int j = 0; j <= k; ++j) z += static_cast<double>(binom[k][j]) * s.zdot_history[j];
      }
      trace.z_history(k, i) = z;
      s.accumulated_output += approx.alpha(k) * z;
    }
  };

  for (int i = 0; i < n; ++i) nodes[i].node_id = i;
  record(0);

  for (int k = 0; k < order; ++k) {
    for (int i = 0; i < n; ++i) {
      sent(i) = encode(k, i, current(i));
      trace.messages(k, i) = sent(i);
      trace.errors(k, i) = sent(i) - current(i);
    }
    // Exchange: every node hears itself and its neighbors.
    for (int i = 0; i < n; ++i) {
      auto& inbox = nodes[i].neighbor_inbox;
      inbox.clear();
      for (int j : op.row(i).index) inbox.emplace_back(j, sent(j));
    }
    for (int i = 0; i < n; ++i) current(i) = op.apply(i, nodes[i].neighbor_inbox);
    record(k + 1);
  }

  for (int i = 0; i < n; ++i) trace.output(i) = nodes[i].accumulated_output;
  return trace;
}

namespace {

void check_plan(const AllocationPlan& plan, int n, int order) {
  if (plan.bits.rows() != n || plan.bits.cols() != order) {
    throw Error(ErrorKind::invalid_argument, "allocation plan must be N x K");
  }
  if (order > 0 && plan.bits.minCoeff() < 1) {
    throw Error(ErrorKind::invalid_argument, "allocation plan bits must be >= 1");
  }
}

double checked_range(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw Error(ErrorKind::invalid_argument, "quantized schemes need a nonzero finite input signal");
  }
  return r;
}

}  // namespace

SimulationTrace run_exact(const LaplacianPair& lp, const FilterApprox& approx, const VectorXd& f_in) {
  return simulate(lp, approx, f_in, Scheme::exact, [](int, int, double v) { return v; });
}

SimulationTrace run_exact(const Graph& g, const FilterApprox& approx, const VectorXd& f_in) {
  return run_exact(laplacians(g), approx, f_in);
}

SimulationTrace run_unbounded_quantized(const LaplacianPair& lp, const FilterApprox& approx,
                                        const VectorXd& f_in, const AllocationPlan& plan) {
  check_plan(plan, static_cast<int>(f_in.size()), approx.order);
  std::vector<double> ranges(approx.order);
  for (int k = 0; k < approx.order; ++k) ranges[k] = checked_range(message_bound(lp, f_in, k));
  return simulate(lp, approx, f_in, Scheme::unbounded, [&](int k, int i, double v) {
    return quantize(v, QuantizerConfig{ranges[k], plan.bits(i, k)});
  });
}

SimulationTrace run_unbounded_quantized(const Graph& g, const FilterApprox& approx,
                                        const VectorXd& f_in, const AllocationPlan& plan) {
  return run_unbounded_quantized(laplacians(g), approx, f_in, plan);
}

SimulationTrace run_bounded_quantized(const LaplacianPair& lp, const FilterApprox& approx,
                                      const VectorXd& f_in, const AllocationPlan& plan,
                                      RangePolicy policy) {
  check_plan(plan, static_cast<int>(f_in.size()), approx.order);
  const double range = checked_range(bounded_range(f_in, policy));
  return simulate(lp, approx, f_in, Scheme::bounded, [&](int k, int i, double v) {
    return quantize(v, QuantizerConfig{range, plan.bits(i, k)});
  });
}

SimulationTrace run_bounded_quantized(const Graph& g, const FilterApprox& approx,
                                      const VectorXd& f_in, const AllocationPlan& plan,
                                      RangePolicy policy) {
  return run_bounded_quantized(laplacians(g), approx, f_in, plan, policy);
}

SimulationTrace run_with_injected_errors(const LaplacianPair& lp, const FilterApprox& approx,
                                         const VectorXd& f_in, const MatrixXd& eps, Scheme scheme) {
  if (eps.rows() != approx.order || eps.cols() != f_in.size()) {
    throw Error(ErrorKind::invalid_argument, "injected error matrix must be K x N");
  }
  if (!eps.allFinite()) throw Error(ErrorKind::invalid_argument, "injected errors must be finite");
  return simulate(lp, approx, f_in, scheme, [&](int k, int i, double v) { return v + eps(k, i); });
}

SimulationTrace run_with_injected_errors(const Graph& g, const FilterApprox& approx,
                                         const VectorXd& f_in, const MatrixXd& eps, Scheme scheme) {
  return run_with_injected_errors(laplacians(g), approx, f_in, eps, scheme);
}

}  // namespace qgf

#include "qgf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include "qgf/error.hpp"

namespace qgf {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::config: return "config";
    case ErrorKind::infeasible_budget: return "infeasible_budget";
    case ErrorKind::disconnected: return "disconnected";
    case ErrorKind::parse: return "parse";
    case ErrorKind::oracle_failure: return "oracle_failure";
  }
  return "unknown";
}

Graph Graph::from_weights(MatrixXd weights, std::optional<Coords> coords) {
  const auto n = weights.rows();
  if (n < 1 || weights.cols() != n) {
    throw Error(ErrorKind::invalid_argument, "weight matrix must be square and non-empty");
  }
  if (coords && coords->rows() != n) {
    throw Error(ErrorKind::invalid_argument, "coordinate count does not match node count");
  }
  Graph g;
  g.n_nodes = static_cast<int>(n);
  g.degrees = VectorXi::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weights(i, i) != 0.0) {
      throw Error(ErrorKind::invalid_argument, "weight matrix diagonal must be zero");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = weights(i, j);
      if (!std::isfinite(w) || w < 0.0) {
        throw Error(ErrorKind::invalid_argument, "weights must be finite and nonnegative");
      }
      if (w != weights(j, i)) {
        throw Error(ErrorKind::invalid_argument, "weight matrix must be symmetric");
      }
      if (w > 0.0) ++g.degrees(i);
    }
  }
  g.weights = std::move(weights);
  g.coords = std::move(coords);
  return g;
}

std::vector<int> Graph::neighbors(int node) const {
  std::vector<int> out;
  for (int j = 0; j < n_nodes; ++j) {
    if (weights(node, j) > 0.0) out.push_back(j);
  }
  return out;
}

Coords uniform_coords(int n, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Coords c(n, 2);
  for (int i = 0; i < n; ++i) {
    c(i, 0) = unit(rng);
    c(i, 1) = unit(rng);
  }
  return c;
}

Graph geometric_graph_from_coords(const Coords& coords, double theta, double kappa) {
  if (!(theta > 0.0) || !(kappa > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "theta and kappa must be positive");
  }
  const auto n = coords.rows();
  MatrixXd w = MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double l2 = (coords.row(i) - coords.row(j)).squaredNorm();
      if (std::sqrt(l2) <= kappa) {
        w(i, j) = w(j, i) = std::exp(-l2 / theta);
      }
    }
  }
  return Graph::from_weights(std::move(w), coords);
}

Graph build_geometric_graph(const GeometricParams& params, Seed seed) {
  if (params.n < 2) throw Error(ErrorKind::invalid_argument, "geometric graph needs n >= 2");
  for (int attempt = 0; attempt < params.max_retries; ++attempt) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(attempt));
    Graph g = geometric_graph_from_coords(uniform_coords(params.n, rng), params.theta, params.kappa);
    if (is_connected(g)) return g;
  }
  std::ostringstream msg;
  msg << "no connected geometric graph after " << params.max_retries
      << " attempts (n=" << params.n << ", kappa=" << params.kappa << "); parameters too sparse";
  throw Error(ErrorKind::disconnected, msg.str());
}

bool is_graphical(std::span<const int> degree_sequence) {
  std::vector<long long> d(degree_sequence.begin(), degree_sequence.end());
  const auto n = static_cast<long long>(d.size());
  long long total = 0;
  for (long long v : d) {
    if (v < 0 || v > n - 1) return false;
    total += v;
  }
  if (total % 2 != 0) return false;
  std::sort(d.begin(), d.end(), std::greater<>());
  // Erdos-Gallai
  long long lhs = 0;
  for (long long k = 1; k <= n; ++k) {
    lhs += d[k - 1];
    long long rhs = k * (k - 1);
    for (long long i = k; i < n; ++i) rhs += std::min(d[i], k);
    if (lhs > rhs) return false;
  }
  return true;
}

std::optional<Graph> realize_degree_sequence(std::span<const int> degree_sequence, Rng& rng,
                                             int max_attempts) {
  const int n = static_cast<int>(degree_sequence.size());
  std::vector<int> stubs;
  for (int i = 0; i < n; ++i) stubs.insert(stubs.end(), degree_sequence[i], i);
  if (stubs.size() % 2 != 0) return std::nullopt;

  // Stubs are paired one at a time; a partner that would create a loop or a
  // repeated edge is rejected and redrawn. A dead end restarts the matching.
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<int> open = stubs;
    MatrixXd w = MatrixXd::Zero(n, n);
    bool stuck = false;
    while (!open.empty() && !stuck) {
      std::uniform_int_distribution<std::size_t> pick_a(0, open.size() - 1);
      std::swap(open[pick_a(rng)], open.back());
      const int a = open.back();
      open.pop_back();
      std::vector<std::size_t> valid;
      for (std::size_t i = 0; i < open.size(); ++i) {
        if (open[i] != a && w(a, open[i]) == 0.0) valid.push_back(i);
      }
      if (valid.empty()) {
        stuck = true;
        break;
      }
      std::uniform_int_distribution<std::size_t> pick_b(0, valid.size() - 1);
      const std::size_t j = valid[pick_b(rng)];
      const int b = open[j];
      std::swap(open[j], open.back());
      open.pop_back();
      w(a, b) = w(b, a) = 1.0;
    }
    if (!stuck) return Graph::from_weights(std::move(w));
  }
  return std::nullopt;
}

Graph build_binomial_degree_graph(const BinomialParams& params, Seed seed) {
  if (params.n < 2) throw Error(ErrorKind::invalid_argument, "binomial graph needs n >= 2");
  if (!(params.p > 0.0 && params.p < 1.0) || params.trials < 1) {
    throw Error(ErrorKind::invalid_argument, "binomial graph needs trials >= 1 and 0 < p < 1");
  }
  for (int attempt = 0; attempt < params.max_retries; ++attempt) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(attempt));
    std::binomial_distribution<int> binom(params.trials, params.p);
    std::vector<int> seq(params.n);
    for (int& d : seq) d = binom(rng);
    if (std::accumulate(seq.begin(), seq.end(), 0) % 2 != 0) {
      std::uniform_int_distribution<int> pick(0, params.n - 1);
      ++seq[pick(rng)];
    }
    if (!is_graphical(seq)) continue;
    auto g = realize_degree_sequence(seq, rng);
    if (g && is_connected(*g)) return *std::move(g);
  }
  std::ostringstream msg;
  msg << "no connected binomial-degree graph after " << params.max_retries << " attempts (n="
      << params.n << ", trials=" << params.trials << ", p=" << params.p << ")";
  throw Error(ErrorKind::disconnected, msg.str());
}

std::vector<int> connected_component(const Graph& g, int start) {
  std::vector<char> seen(g.n_nodes, 0);
  std::vector<int> component{start};
  seen[start] = 1;
  for (std::size_t head = 0; head < component.size(); ++head) {
    const int u = component[head];
    for (int v = 0; v < g.n_nodes; ++v) {
      if (!seen[v] && g.weights(u, v) > 0.0) {
        seen[v] = 1;
        component.push_back(v);
      }
    }
  }
  std::sort(component.begin(), component.end());
  return component;
}

bool is_connected(const Graph& g) {
  return g.n_nodes > 0 && static_cast<int>(connected_component(g, 0).size()) == g.n_nodes;
}

LaplacianPair laplacians(const Graph& g) {
  const VectorXd dw = g.weighted_degrees();
  for (int i = 0; i < g.n_nodes; ++i) {
    if (!(dw(i) > 0.0)) {
      throw Error(ErrorKind::disconnected,
                  "node " + std::to_string(i) + " is isolated (zero weighted degree)");
    }
  }
  const VectorXd inv_sqrt = dw.array().rsqrt();
  LaplacianPair lp;
  lp.normalized = -(inv_sqrt.asDiagonal() * g.weights * inv_sqrt.asDiagonal());
  lp.normalized.diagonal().array() += 1.0;
  // Symmetrize away rounding asymmetry of the diagonal scaling.
  lp.normalized = 0.5 * (lp.normalized + lp.normalized.transpose()).eval();
  lp.shifted = lp.normalized - MatrixXd::Identity(g.n_nodes, g.n_nodes);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(lp.normalized, Eigen::EigenvaluesOnly);
  lp.lambda_max = eig.eigenvalues().maxCoeff();
  return lp;
}

std::vector<int> eccentricities(const Graph& g) {
  std::vector<int> ecc(g.n_nodes, 0);
  std::vector<int> dist(g.n_nodes);
  for (int s = 0; s < g.n_nodes; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::queue<int> q;
    dist[s] = 0;
    q.push(s);
    int reached = 1;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v = 0; v < g.n_nodes; ++v) {
        if (dist[v] < 0 && g.weights(u, v) > 0.0) {
          dist[v] = dist[u] + 1;
          ecc[s] = std::max(ecc[s], dist[v]);
          ++reached;
          q.push(v);
        }
      }
    }
    if (reached != g.n_nodes) {
      throw Error(ErrorKind::disconnected, "eccentricity is infinite on a disconnected graph");
    }
  }
  return ecc;
}

double message_bound(double lambda_max, const VectorXd& f, int k) {
  if (k < 0) throw Error(ErrorKind::invalid_argument, "message_bound needs k >= 0");
  return std::pow(lambda_max, k) * f.norm();
}

double message_bound(const Graph& g, const VectorXd& f, int k) {
  return message_bound(laplacians(g), f, k);
}

}  // namespace qgf

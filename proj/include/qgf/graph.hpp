#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qgf/rng.hpp"
#include "qgf/types.hpp"

namespace qgf {

/// Weighted undirected graph. `degrees` counts neighbors (the number of
/// copies of each broadcast), while the Laplacian uses weighted degrees.
struct Graph {
  int n_nodes = 0;
  std::optional<Coords> coords;
  MatrixXd weights;
  VectorXi degrees;

  /// Builds a graph from a weight matrix, validating symmetry and the zero
  /// diagonal, and filling `degrees`.
  static Graph from_weights(MatrixXd weights, std::optional<Coords> coords = std::nullopt);

  VectorXd weighted_degrees() const { return weights.rowwise().sum(); }
  int edge_count() const { return degrees.sum() / 2; }
  std::vector<int> neighbors(int node) const;
};

struct LaplacianPair {
  MatrixXd normalized;  // I - D^{-1/2} W D^{-1/2}
  MatrixXd shifted;     // normalized - I
  double lambda_max = 0.0;
};

struct GeometricParams {
  int n = 50;
  double theta = 2.0;
  double kappa = 0.2;
  int max_retries = 100;
};

struct BinomialParams {
  int n = 50;
  int trials = 20;
  double p = 0.3;
  int max_retries = 100;
};

/// Thresholded Gaussian kernel on the given positions: w = exp(-l^2/theta)
/// for l <= kappa. No connectivity requirement.
Graph geometric_graph_from_coords(const Coords& coords, double theta, double kappa);

/// Uniform random positions in the unit square. Attempt `a` draws from
/// stream `a` of `seed` until the graph is connected.
Graph build_geometric_graph(const GeometricParams& params, Seed seed);

Coords uniform_coords(int n, Rng& rng);

bool is_graphical(std::span<const int> degree_sequence);

/// Configuration-model realization with self-loop/multi-edge rejection and
/// unit weights. Returns nullopt when no simple realization was found within
/// `max_attempts` pairings.
std::optional<Graph> realize_degree_sequence(std::span<const int> degree_sequence, Rng& rng,
                                             int max_attempts = 200);

Graph build_binomial_degree_graph(const BinomialParams& params, Seed seed);

bool is_connected(const Graph& g);
std::vector<int> connected_component(const Graph& g, int start);

LaplacianPair laplacians(const Graph& g);

std::vector<int> eccentricities(const Graph& g);

double message_bound(double lambda_max, const VectorXd& f, int k);
inline double message_bound(const LaplacianPair& lp, const VectorXd& f, int k) {
  return message_bound(lp.lambda_max, f, k);
}
double message_bound(const Graph& g, const VectorXd& f, int k);

}  // namespace qgf

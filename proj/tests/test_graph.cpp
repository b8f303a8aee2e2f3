#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "qgf/error.hpp"
#include "qgf/graph.hpp"

using namespace qgf;

namespace {

Graph path3() {
  MatrixXd w = MatrixXd::Zero(3, 3);
  w(0, 1) = w(1, 0) = 1.0;
  w(1, 2) = w(2, 1) = 1.0;
  return Graph::from_weights(w);
}

Graph complete(int n) {
  MatrixXd w = MatrixXd::Ones(n, n);
  w.diagonal().setZero();
  return Graph::from_weights(w);
}

Coords two_points(double dx) {
  Coords c(2, 2);
  c << 0.0, 0.0, dx, 0.0;
  return c;
}

}  // namespace

TEST_CASE("geometric graph: single close pair gets the kernel weight") {
  const Graph g = geometric_graph_from_coords(two_points(0.1), 2.0, 0.2);
  CHECK(g.edge_count() == 1);
  CHECK(g.weights(0, 1) == doctest::Approx(std::exp(-0.005)).epsilon(1e-15));
  CHECK(g.degrees(0) == 1);
  CHECK(g.degrees(1) == 1);
}

TEST_CASE("geometric graph: distant pair has no edge and the builder gives up") {
  const Graph g = geometric_graph_from_coords(two_points(0.5), 2.0, 0.2);
  CHECK(g.edge_count() == 0);
  CHECK_FALSE(is_connected(g));

  GeometricParams p;
  p.n = 2;
  p.kappa = 1e-6;
  p.max_retries = 5;
  try {
    build_geometric_graph(p, 3);
    FAIL("expected a disconnected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::disconnected);
  }
}

TEST_CASE("geometric graph: mean degree matches an independent generator") {
  for (Seed seed : {1ull, 17ull, 12345ull}) {
    GeometricParams p;
    const Graph g = build_geometric_graph(p, seed);
    const double mine = g.degrees.cast<double>().mean();
    const double ref = oracle::geometric_mean_degree(p.n, p.theta, p.kappa, seed, p.max_retries);
    CHECK(mine == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("generated graphs satisfy the structural invariants") {
  for (Seed seed = 0; seed < 20; ++seed) {
    const Graph g = build_geometric_graph(GeometricParams{}, seed);
    CHECK((g.weights - g.weights.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.weights.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK(is_connected(g));
    for (int i = 0; i < g.n_nodes; ++i) {
      CHECK(g.degrees(i) == (g.weights.row(i).array() > 0.0).count());
    }
  }
}

TEST_CASE("graph construction rejects malformed weights") {
  MatrixXd asym = MatrixXd::Zero(2, 2);
  asym(0, 1) = 1.0;
  CHECK_THROWS_AS(Graph::from_weights(asym), Error);
  MatrixXd diag = MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(Graph::from_weights(diag), Error);
  MatrixXd neg = MatrixXd::Zero(2, 2);
  neg(0, 1) = neg(1, 0) = -1.0;
  CHECK_THROWS_AS(Graph::from_weights(neg), Error);
}

TEST_CASE("binomial degree graphs") {
  Rng rng{5};
  SUBCASE("[1,1,1,1] only realizes as a disconnected matching") {
    const std::vector<int> seq{1, 1, 1, 1};
    const auto g = realize_degree_sequence(seq, rng);
    REQUIRE(g.has_value());
    CHECK(g->edge_count() == 2);
    CHECK_FALSE(is_connected(*g));
  }
  SUBCASE("[2,2,2] is the triangle") {
    const std::vector<int> seq{2, 2, 2};
    const auto g = realize_degree_sequence(seq, rng);
    REQUIRE(g.has_value());
    CHECK(g->edge_count() == 3);
    CHECK(g->weights.sum() == 6.0);
  }
  SUBCASE("Erdos-Gallai") {
    CHECK(is_graphical(std::vector<int>{2, 2, 2}));
    CHECK(is_graphical(std::vector<int>{3, 3, 3, 3}));
    CHECK_FALSE(is_graphical(std::vector<int>{3, 3, 1, 1}));
    CHECK_FALSE(is_graphical(std::vector<int>{1, 1, 1}));
    CHECK_FALSE(is_graphical(std::vector<int>{4, 1, 1, 1}));
  }
}

TEST_CASE("binomial degree graphs: mean degree tracks trials * p") {
  BinomialParams p;
  p.n = 50;
  p.trials = 20;
  p.p = 0.3;  // mean 6, variance 4.2
  double total = 0.0;
  const int samples = 100;
  for (int s = 0; s < samples; ++s) {
    const Graph g = build_binomial_degree_graph(p, static_cast<Seed>(s));
    CHECK(is_connected(g));
    CHECK(g.weights.maxCoeff() == 1.0);
    total += g.degrees.cast<double>().mean();
  }
  const double mean = total / samples;
  CHECK(std::abs(mean - 6.0) <= 0.15 * 6.0);
}

TEST_CASE("laplacians of small graphs") {
  SUBCASE("two nodes, any weight") {
    MatrixXd w = MatrixXd::Zero(2, 2);
    w(0, 1) = w(1, 0) = 0.37;
    const auto lp = laplacians(Graph::from_weights(w));
    MatrixXd expect(2, 2);
    expect << 1, -1, -1, 1;
    CHECK((lp.normalized - expect).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(lp.lambda_max == doctest::Approx(2.0));
    MatrixXd shifted(2, 2);
    shifted << 0, -1, -1, 0;
    CHECK((lp.shifted - shifted).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("triangle") {
    const auto lp = laplacians(complete(3));
    CHECK(lp.normalized(0, 0) == doctest::Approx(1.0));
    CHECK(lp.normalized(0, 1) == doctest::Approx(-0.5));
    // Characteristic polynomial of the triangle: eigenvalues 0, 3/2, 3/2.
    CHECK(lp.lambda_max == doctest::Approx(1.5).epsilon(1e-12));
  }
  SUBCASE("isolated node") {
    MatrixXd w = MatrixXd::Zero(3, 3);
    w(0, 1) = w(1, 0) = 1.0;
    CHECK_THROWS_AS(laplacians(Graph::from_weights(w)), Error);
  }
}

TEST_CASE("spectra of L and L - I stay in their intervals; L is local") {
  for (Seed seed = 0; seed < 10; ++seed) {
    const Graph g = build_geometric_graph(GeometricParams{}, seed);
    const auto lp = laplacians(g);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(lp.normalized);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9);
    CHECK(es.eigenvalues().maxCoeff() <= 2.0 + 1e-9);
    CHECK(lp.lambda_max == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-10));
    Eigen::SelfAdjointEigenSolver<MatrixXd> ss(lp.shifted);
    CHECK(ss.eigenvalues().minCoeff() >= -1.0 - 1e-9);
    CHECK(ss.eigenvalues().maxCoeff() <= 1.0 + 1e-9);
    for (int i = 0; i < g.n_nodes; ++i) {
      for (int j = 0; j < g.n_nodes; ++j) {
        if (i != j && g.weights(i, j) == 0.0) CHECK(lp.normalized(i, j) == 0.0);
      }
    }
  }
}

TEST_CASE("eccentricities") {
  CHECK(eccentricities(path3()) == std::vector<int>{2, 1, 2});
  CHECK(eccentricities(complete(4)) == std::vector<int>{1, 1, 1, 1});

  MatrixXd w = MatrixXd::Zero(3, 3);
  w(0, 1) = w(1, 0) = 1.0;
  CHECK_THROWS_AS(eccentricities(Graph::from_weights(w)), Error);

  for (Seed seed = 0; seed < 10; ++seed) {
    GeometricParams p;
    p.n = 10 + static_cast<int>(seed);
    p.kappa = 0.5;
    const Graph g = build_geometric_graph(p, seed);
    CHECK(eccentricities(g) == oracle::floyd_warshall_eccentricity(g.weights));
  }
}

TEST_CASE("message bound") {
  VectorXd f(2);
  f << 1.0, 0.0;
  CHECK(message_bound(2.0, f, 0) == doctest::Approx(1.0));
  CHECK(message_bound(2.0, f, 3) == doctest::Approx(8.0));

  const Graph g = build_geometric_graph(GeometricParams{}, 9);
  const auto lp = laplacians(g);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 1000; ++t) {
    VectorXd x(g.n_nodes);
    for (auto& v : x) v = nd(rng);
    VectorXd lk = x;
    VectorXd sk = x;
    for (int k = 0; k <= 5; ++k) {
      CHECK(lk.lpNorm<Eigen::Infinity>() <= message_bound(lp, x, k) * (1 + 1e-12));
      CHECK(sk.lpNorm<Eigen::Infinity>() <= x.norm() * (1 + 1e-12));
      lk = lp.normalized * lk;
      sk = lp.shifted * sk;
    }
  }
}

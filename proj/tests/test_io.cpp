#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "qgf/error.hpp"
#include "qgf/io.hpp"

using namespace qgf;

TEST_CASE("graph JSON round trip is exact") {
  const Graph g = build_geometric_graph(GeometricParams{}, 4);
  const Graph back = graph_from_json(Json::parse(graph_to_json(g).dump()));
  CHECK(back.n_nodes == g.n_nodes);
  CHECK(back.weights == g.weights);
  CHECK(back.degrees == g.degrees);
  REQUIRE(back.coords);
  CHECK(*back.coords == *g.coords);
}

TEST_CASE("malformed graph JSON is a parse error") {
  try {
    graph_from_json(Json::parse(R"({"n": 2, "edges": [[0, 5, 1.0]]})"));
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK((e.kind() == ErrorKind::parse || e.kind() == ErrorKind::invalid_argument));
  }
  CHECK_THROWS_AS(graph_from_json(Json::parse(R"({"edges": []})")), Error);
}

TEST_CASE("filter approximation JSON round trip") {
  const auto a = chebyshev_fit(FilterSpec::heat(10.0), 9, 1.8);
  const auto back = approx_from_json(Json::parse(approx_to_json(a).dump()));
  CHECK(back.order == a.order);
  CHECK(back.alpha == a.alpha);
  CHECK(back.domain_max == a.domain_max);
  CHECK_THROWS_AS(approx_from_json(Json::parse(R"({"alpha": [1, 2], "order": 3, "domain_max": 2})")), Error);
}

TEST_CASE("config round trip and validation") {
  const Json j = Json::parse(R"({
    "graph": {"family": "geometric", "n": 30, "theta": 0.001, "kappa": 0.3},
    "filter": {"kind": "tikhonov", "tau": 10, "r": 3},
    "order": 17,
    "budgets": [1, 2],
    "schemes": ["unbounded", "bounded_optimized"],
    "trials": 4,
    "seed": 99,
    "bounded_range": "sup_norm"
  })");
  const ExperimentConfig cfg = config_from_json(j);
  CHECK(cfg.geometric.n == 30);
  CHECK(cfg.order == 17);
  CHECK(cfg.seed == 99);
  CHECK(cfg.bounded_range == RangePolicy::sup_norm);
  CHECK(cfg.schemes.size() == 2);
  const Json out = config_to_json(cfg);
  CHECK(config_to_json(config_from_json(out)) == out);
  CHECK(config_hash(out) == config_hash(config_to_json(config_from_json(out))));

  Json changed = out;
  changed["seed"] = 100;
  CHECK(config_hash(changed) != config_hash(out));
  CHECK(config_hash(out).size() == 16);
}

TEST_CASE("config errors are reported as config errors") {
  const char* bad[] = {
      R"({"graph": {"family": "geometric"}, "colour": 3})",
      R"({"bounded_range": "linf"})",
      R"({"trials": -1})",
      R"({"order": 31})",
      R"({"schemes": ["bogus"]})",
      R"({"filter": {"kind": "bandstop"}})",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    try {
      config_from_json(Json::parse(text)).validate();
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::config);
    }
  }
}

TEST_CASE("number formatting round-trips doubles") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02e23, -2.5, 0.0}) {
    CHECK(std::stod(format_number(v)) == v);
  }
}

TEST_CASE("csv writers") {
  AllocationPlan plan = constant_plan(2, 2, 3, (VectorXi(2) << 1, 1).finished());
  std::ostringstream os;
  write_plan_csv(os, plan);
  CHECK(os.str() == "node,step,bits\n0,0,3\n0,1,3\n1,0,3\n1,1,3\n");
}

TEST_CASE("missing files are config errors") {
  try {
    read_json_file("/nonexistent/qgf.json");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
  }
}

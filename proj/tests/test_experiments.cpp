#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iomanip>

#include "qgf/error.hpp"
#include "qgf/experiments.hpp"
#include "qgf/quantizer.hpp"
#include "qgf/stations.hpp"
#include "qgf/stats.hpp"

using namespace qgf;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("qgf_test_" + name);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("add_noise") {
  const VectorXd f = VectorXd::LinSpaced(10, 0.0, 1.0);
  CHECK(add_noise(f, 0.0, 3) == f);
  CHECK(add_noise(f, 0.1, 3) == add_noise(f, 0.1, 3));
  CHECK(add_noise(f, 0.1, 3) != add_noise(f, 0.1, 4));
  CHECK_THROWS_AS(add_noise(f, -1.0, 3), Error);

  const VectorXd zero = VectorXd::Zero(100000);
  const VectorXd n = add_noise(zero, 0.1, 99);
  std::vector<double> v(n.data(), n.data() + n.size());
  CHECK(variance(v) == doctest::Approx(0.01).epsilon(0.03));
}

TEST_CASE("statistics helpers") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(mean(x) == 3.0);
  CHECK(variance(x) == 2.0);
  CHECK(sample_stddev(x) == doctest::Approx(std::sqrt(2.5)));
  CHECK(ranks(std::vector<double>{10, 30, 20, 20}) == std::vector<double>{1, 4, 2.5, 2.5});
  CHECK(spearman(x, std::vector<double>{1, 4, 9, 16, 25}) == doctest::Approx(1.0));
  CHECK(spearman(x, std::vector<double>{5, 4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman_p_value(0.0, 100) == doctest::Approx(1.0));
  CHECK(spearman_p_value(0.3, 300) < 1e-5);
  CHECK(spearman_p_value(0.05, 30) > 0.5);
  // Pairwise summation keeps tiny terms next to a large one.
  std::vector<double> big(1 << 20, 1e-16);
  big[0] = 1.0;
  CHECK(pairwise_sum(big) == doctest::Approx(1.0 + 1e-16 * ((1 << 20) - 1)).epsilon(1e-15));
}

TEST_CASE("sweep: vanishing quantization noise at 16 bits per message") {
  ExperimentConfig cfg;
  cfg.trials = 1;
  cfg.budgets = {16};
  const auto r = run_mse_sweep(cfg);
  CHECK(r.row(AllocScheme::bounded_uniform, 16).mse_mean < 1e-6);
  CHECK(r.row(AllocScheme::bounded_optimized, 16).mse_mean < 1e-6);
}

TEST_CASE("sweep: rows, records and skip accounting") {
  ExperimentConfig cfg;
  cfg.geometric.n = 10;
  cfg.geometric.kappa = 0.5;
  cfg.order = 3;
  cfg.trials = 5;
  cfg.budgets = {1, 2, 4};
  cfg.schemes = {AllocScheme::unbounded, AllocScheme::bounded_uniform, AllocScheme::bounded_optimized};
  cfg.keep_trials = true;
  const auto r = run_mse_sweep(cfg);
  CHECK(r.rows.size() == 9);
  CHECK(r.records.size() == 45);
  for (const auto& row : r.rows) {
    CHECK(row.trials == 5);
    CHECK(row.mse_mean >= 0.0);
  }

  cfg.budget_mode = BudgetMode::total;
  cfg.budgets = {1.0};
  const auto skipped = run_mse_sweep(cfg);
  for (const auto& row : skipped.rows) {
    CHECK(row.trials == 0);
    CHECK(row.skipped == 5);
  }
}

TEST_CASE("sweep: determinism and thread independence") {
  ExperimentConfig cfg;
  cfg.trials = 12;
  cfg.budgets = {2, 5};
  cfg.keep_trials = true;
  const auto a = run_mse_sweep(cfg);
  cfg.threads = 4;
  const auto b = run_mse_sweep(cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].mse_mean == b.rows[i].mse_mean);
    CHECK(a.rows[i].mse_std == b.rows[i].mse_std);
  }
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].mse == b.records[i].mse);
}

TEST_CASE("sweep: optimized model error never exceeds uniform") {
  ExperimentConfig cfg;
  cfg.trials = 20;
  cfg.keep_trials = true;
  const auto r = run_mse_sweep(cfg);
  for (double b : cfg.budgets) {
    CHECK(r.row(AllocScheme::bounded_optimized, b).model_mean <= r.row(AllocScheme::bounded_uniform, b).model_mean);
  }
}

TEST_CASE("config validation") {
  ExperimentConfig cfg;
  cfg.trials = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = ExperimentConfig{};
  cfg.family = GraphFamily::binomial;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.signal = SignalKind::uniform_random;
  CHECK_NOTHROW(cfg.validate());
  cfg.budgets.clear();
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("error propagation study") {
  const auto pc = find_propagation_case(1);
  REQUIRE(pc.kappas.size() == 3);
  const Graph sparse = geometric_graph_from_coords(pc.coords, 2.0, pc.kappas[0]);
  const auto comp = connected_component(sparse, pc.node);
  CHECK(comp.size() == 2);
  CHECK(sparse.degrees(pc.node) == 1);

  const auto fit = chebyshev_fit(FilterSpec::lowpass(), 17, 2.0);
  const VectorXd f = coordinate_quadratic_signal(pc.coords);
  const auto r = run_error_propagation_study(sparse, pc.node, fit, f, 8);
  CHECK(r.epsilon != 0.0);
  std::vector<bool> in_comp(sparse.n_nodes, false);
  for (int v : comp) in_comp[v] = true;
  for (int v = 0; v < sparse.n_nodes; ++v) {
    if (!in_comp[v]) CHECK(r.abs_error(v) == 0.0);
  }
  CHECK(r.abs_error(pc.node) > 0.0);

  // A signal that sits on a cell center has no error to propagate.
  VectorXd g = VectorXd::Zero(sparse.n_nodes);
  g(0) = 1.0;
  g(pc.node) = quantize(0.3, QuantizerConfig{1.0, 8});
  const auto none = run_error_propagation_study(sparse, pc.node, fit, g, 8, RangePolicy::sup_norm);
  CHECK(none.epsilon == 0.0);
  CHECK(none.abs_error.maxCoeff() == 0.0);
  CHECK(none.mse == 0.0);

  const auto sweep = run_propagation_sweep(pc, 2.0, 17, 8, 0.0);
  REQUIRE(sweep.results.size() == 3);
  CHECK(sweep.results[0].mse > sweep.results[1].mse);
  CHECK(sweep.results[1].mse > sweep.results[2].mse);
}

TEST_CASE("allocation stats: complete graphs give uniform allocations") {
  MatrixXd w = MatrixXd::Ones(12, 12);
  w.diagonal().setZero();
  const auto s = prepare_trial(Graph::from_weights(w), FilterSpec::lowpass(), 9);
  const auto plan = kkt_allocate(s.model.F, s.graph.degrees, 5 * minimum_budget(s.graph.degrees, 9), 1.0);
  const VectorXd x = plan.real_valued->rowwise().mean();
  std::vector<double> v(x.data(), x.data() + x.size());
  CHECK(variance(v) < 1e-20);
}

TEST_CASE("allocation stats rows") {
  StatsFamily fam;
  const auto rows = run_allocation_stats(fam, 30, 3);
  CHECK(rows.size() == 30);
  for (const auto& r : rows) {
    CHECK(r.family_param >= fam.kappa_min);
    CHECK(r.family_param <= fam.kappa_max);
    CHECK(r.x_variance >= 0.0);
    CHECK(r.degree_mean > 0.0);
  }
  fam.family = GraphFamily::binomial;
  CHECK(run_allocation_stats(fam, 30, 3).size() == 30);
}

TEST_CASE("station ingest") {
  const auto dir = scratch_dir("stations");
  SUBCASE("two stations 10 km apart") {
    const auto path = (dir / "pair.csv").string();
    // 10 km due north: latitude difference of 10 / 6371.0088 rad.
    const double dlat = 10.0 / 6371.0088 * 180.0 / M_PI;
    std::ofstream(path) << "station_id,latitude,longitude,date,value\n"
                        << "A,0,0,2010-01-01,1.0\n"
                        << "B," << std::setprecision(17) << dlat << ",0,2010-01-01,3.0\n"
                        << "B," << dlat << ",0,2010-01-02,\n";
    StationGraphOptions opt;
    opt.distance_scale_km = 1.0;
    opt.kappa = 50.0;
    opt.theta = 40.0;
    const auto ds = ingest_station_csv(path, opt);
    REQUIRE(ds.graph.n_nodes == 2);
    CHECK(great_circle_km(0, 0, dlat, 0) == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(ds.graph.weights(0, 1) == doctest::Approx(std::exp(-100.0 / 40.0)).epsilon(1e-9));
    CHECK(ds.signal(0) == 1.0);
    CHECK(ds.signal(1) == 3.0);
  }
  SUBCASE("stations without data in the year are dropped") {
    const auto path = (dir / "drop.csv").string();
    std::ofstream(path) << "station_id,latitude,longitude,date,value\n"
                        << "A,0,0,2010-01-01,1.0\n"
                        << "B,0.01,0,2010-03-01,2.0\n"
                        << "C,0.02,0,2009-03-01,2.0\n"
                        << "D,0.015,0,2010-03-01,\n";
    const auto ds = ingest_station_csv(path, StationGraphOptions{});
    CHECK(ds.station_ids == std::vector<std::string>{"A", "B"});
  }
  SUBCASE("malformed rows report their line") {
    const auto path = (dir / "bad.csv").string();
    std::ofstream(path) << "station_id,latitude,longitude,date,value\n"
                        << "A,0,0,2010-01-01,1.0\n"
                        << "B,zero,0,2010-01-01,1.0\n";
    try {
      ingest_station_csv(path, StationGraphOptions{});
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::parse);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("disconnected station graph advises a larger kappa") {
    const auto path = (dir / "far.csv").string();
    std::ofstream(path) << "station_id,latitude,longitude,date,value\n"
                        << "A,0,0,2010-01-01,1.0\n"
                        << "B,40,0,2010-01-01,1.0\n";
    try {
      ingest_station_csv(path, StationGraphOptions{});
      FAIL("expected a disconnected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::disconnected);
      CHECK(std::string(e.what()).find("kappa") != std::string::npos);
    }
  }
}

TEST_CASE("synthetic 850-station fixture") {
  const auto path = (scratch_dir("rain") / "rain.csv").string();
  write_synthetic_station_csv(path, 851, 2010, 30, 7, 1);
  const auto ds = ingest_station_csv(path, StationGraphOptions{});
  CHECK(ds.graph.n_nodes == 850);
  CHECK(is_connected(ds.graph));

  ExperimentConfig cfg;
  cfg.signal = SignalKind::dataset;
  cfg.dataset_graph = ds.graph;
  cfg.dataset_signal = ds.signal;
  cfg.trials = 2;
  cfg.budgets = {2, 4};
  cfg.schemes = {AllocScheme::unbounded, AllocScheme::bounded_uniform, AllocScheme::bounded_optimized};
  const auto r = run_mse_sweep(cfg);
  for (double b : cfg.budgets) {
    const double u = r.row(AllocScheme::unbounded, b).mse_mean;
    const double bu = r.row(AllocScheme::bounded_uniform, b).mse_mean;
    const double bo = r.row(AllocScheme::bounded_optimized, b).mse_mean;
    CHECK(bo <= bu);
    CHECK(bu * 5.0 < u);
  }
}

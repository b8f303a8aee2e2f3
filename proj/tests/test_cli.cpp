#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "qgf/io.hpp"
#include "qgf/stats.hpp"

namespace fs = std::filesystem;
using namespace qgf;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "qgf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("qgf_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.json";
  std::ofstream(p) << text;
  return p.string();
}

std::vector<std::map<std::string, std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) header.push_back(cell);
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::map<std::string, std::string> row;
    std::size_t i = 0;
    for (std::string cell; std::getline(ls, cell, ',');) row[header.at(i++)] = cell;
    rows.push_back(row);
  }
  return rows;
}

const char* minimal = R"({
  "graph": {"family": "geometric", "n": 10, "theta": 2, "kappa": 0.6},
  "order": 3,
  "budgets": [2, 4],
  "schemes": ["unbounded", "bounded_uniform", "bounded_optimized"],
  "trials": 5,
  "seed": 11
})";

}  // namespace

TEST_CASE("sweep writes one row per scheme and budget") {
  const auto dir = scratch("minimal");
  const auto cfg = write_config(dir, minimal);
  const auto r = run({"sweep", "--config", cfg, "--out", (dir / "a").string()});
  REQUIRE(r.code == 0);
  const auto rows = read_csv(dir / "a" / "results.csv");
  CHECK(rows.size() == 6);
  for (const auto& row : rows) CHECK(row.at("trials") == "5");
  const Json manifest = read_json_file((dir / "a" / "manifest.json").string());
  CHECK(manifest.at("seed") == 11);
  CHECK(manifest.at("config_hash").get<std::string>().size() == 16);
}

TEST_CASE("repeat runs are byte-identical, across thread counts too") {
  const auto dir = scratch("repeat");
  const auto cfg = write_config(dir, minimal);
  REQUIRE(run({"sweep", "--config", cfg, "--out", (dir / "a").string()}).code == 0);
  REQUIRE(run({"sweep", "--config", cfg, "--out", (dir / "b").string()}).code == 0);
  REQUIRE(run({"sweep", "--config", cfg, "--out", (dir / "c").string(), "--threads", "3"}).code == 0);
  CHECK(slurp(dir / "a" / "results.csv") == slurp(dir / "b" / "results.csv"));
  CHECK(slurp(dir / "a" / "results.csv") == slurp(dir / "c" / "results.csv"));
  CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));

  REQUIRE(run({"sweep", "--config", cfg, "--out", (dir / "d").string(), "--seed", "12"}).code == 0);
  CHECK(slurp(dir / "a" / "results.csv") != slurp(dir / "d" / "results.csv"));
}

TEST_CASE("dump-traces writes the first trial's messages") {
  const auto dir = scratch("traces");
  const auto cfg = write_config(dir, minimal);
  REQUIRE(run({"sweep", "--config", cfg, "--out", dir.string(), "--dump-traces"}).code == 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir / "traces")) {
    ++files;
    CHECK(slurp(e.path()).rfind("kind,step,node,value\n", 0) == 0);
  }
  CHECK(files == 6);
}

TEST_CASE("two symmetric nodes get equal bits") {
  const auto dir = scratch("two");
  const auto cfg = write_config(dir, R"({
    "graph": {"family": "geometric", "n": 2, "theta": 2, "kappa": 2},
    "order": 3,
    "alloc": {"budget": 24, "budget_mode": "total"}
  })");
  const auto r = run({"alloc", "--config", cfg, "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto rows = read_csv(dir / "allocation.csv");
  REQUIRE(rows.size() == 6);
  for (int k = 0; k < 3; ++k) CHECK(rows[k].at("bits") == rows[3 + k].at("bits"));
}

TEST_CASE("infeasible budget exits with 3 and a JSON error") {
  const auto dir = scratch("infeasible");
  const auto cfg = write_config(dir, R"({"order": 9, "alloc": {"budget": 300, "budget_mode": "total"}})");
  const auto r = run({"alloc", "--config", cfg, "--out", dir.string()});
  CHECK(r.code == cli::exit_infeasible);
  const Json e = Json::parse(r.err);
  CHECK(e.at("error") == "infeasible_budget");
  CHECK(e.at("exit_code") == 3);
}

TEST_CASE("N=50 allocation: bits trend down with the step and with degree") {
  const auto dir = scratch("n50");
  const auto cfg = write_config(dir, R"({"seed": 5, "alloc": {"budget": 4, "budget_mode": "per_message"}})");
  REQUIRE(run({"alloc", "--config", cfg, "--out", dir.string()}).code == 0);
  const Json plan = read_json_file((dir / "allocation.json").string());
  std::vector<double> step_sum(9, 0.0);
  std::vector<double> node_sum(50, 0.0);
  for (const auto& m : plan.at("messages")) {
    step_sum[m.at("step").get<int>()] += m.at("real").get<double>();
    node_sum[m.at("node").get<int>()] += m.at("real").get<double>();
  }
  const std::vector<double> steps{0, 1, 2, 3, 4, 5, 6, 7, 8};
  CHECK(spearman(steps, step_sum) < 0.0);

  REQUIRE(run({"fmap", "--config", cfg, "--out", dir.string()}).code == 0);
  const auto rows = read_csv(dir / "fmap.csv");
  REQUIRE(rows.size() == 50);
  std::vector<double> degree, mean_bits;
  for (int n = 0; n < 50; ++n) {
    degree.push_back(std::stod(rows[n].at("degree")));
    mean_bits.push_back(node_sum[n] / 9.0);
    CHECK(std::stod(rows[n].at("x_mean")) == doctest::Approx(node_sum[n] / 9.0).epsilon(1e-9));
  }
  CHECK(spearman(degree, mean_bits) < 0.0);
}

TEST_CASE("fig1 preset: optimized never worse than uniform") {
  const auto dir = scratch("fig1");
  const auto r = run({"sweep", "--config", std::string(QGF_PRESET_DIR) + "/fig1.json", "--out", dir.string()});
  REQUIRE(r.code == 0);
  std::map<std::string, double> uniform;
  const auto rows = read_csv(dir / "results.csv");
  for (const auto& row : rows) {
    if (row.at("scheme") == "bounded_uniform") uniform[row.at("budget")] = std::stod(row.at("mse_mean"));
  }
  int compared = 0;
  for (const auto& row : rows) {
    if (row.at("scheme") != "bounded_optimized") continue;
    CHECK(std::stod(row.at("mse_mean")) <= uniform.at(row.at("budget")));
    ++compared;
  }
  CHECK(compared == 8);
}

TEST_CASE("every preset parses") {
  for (const auto& e : fs::directory_iterator(QGF_PRESET_DIR)) {
    CAPTURE(e.path().string());
    const Json j = read_json_file(e.path().string());
    CHECK(j.contains("name"));
    CHECK(j.contains("description"));
  }
}

TEST_CASE("validate passes; injected fault exits with 4") {
  const auto dir = scratch("validate");
  const auto ok = run({"validate", "--out", dir.string()});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("FAIL") == std::string::npos);
  const auto bad = run({"validate", "--out", dir.string(), "--inject-fault", "alpha"});
  CHECK(bad.code == cli::exit_oracle);
  CHECK(bad.out.find("FAIL") != std::string::npos);
  CHECK(Json::parse(bad.err).at("error") == "oracle_failure");
}

TEST_CASE("config problems exit with 2") {
  const auto dir = scratch("badcfg");
  const char* bad[] = {
      R"({"trials": 5, "mystery": true})",
      R"({"budgets": []})",
      R"({"graph": {"n": 1}})",
      R"({"alloc": {"budget": "lots"}})",
      R"({ not json )",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    const auto cfg = write_config(dir, text);
    const auto r = run({"alloc", "--config", cfg, "--out", dir.string()});
    CHECK(r.code == cli::exit_config);
    CHECK(Json::parse(r.err).at("exit_code") == 2);
  }
  CHECK(run({"sweep", "--config", (dir / "missing.json").string()}).code == cli::exit_config);
  CHECK(run({"sweep", "--threads", "0"}).code == cli::exit_config);
  CHECK(run({}).code == cli::exit_config);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("ingest and stats subcommands") {
  const auto dir = scratch("ingest");
  const auto r = run({"ingest", "--synthetic", "851", "--out", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(read_csv(dir / "signal.csv").size() == 850);
  const Graph g = graph_from_json(read_json_file((dir / "graph.json").string()));
  CHECK(g.n_nodes == 850);

  const auto sdir = scratch("stats");
  const auto cfg = write_config(sdir, R"({"seed": 3, "stats": {"families": ["geometric"], "samples": 40}})");
  REQUIRE(run({"stats", "--config", cfg, "--out", sdir.string()}).code == 0);
  CHECK(read_csv(sdir / "stats_geometric.csv").size() == 40);
  const Json c = read_json_file((sdir / "correlations.json").string());
  CHECK(c.at("geometric").at("graphs") == 40);
}

TEST_CASE("propagate writes one summary row per threshold") {
  const auto dir = scratch("propagate");
  const auto r = run({"propagate", "--config", std::string(QGF_PRESET_DIR) + "/appendixB.json", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto rows = read_csv(dir / "propagation.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].at("component_size") == "2");
  CHECK(std::stod(rows[0].at("mse")) > std::stod(rows[1].at("mse")));
  CHECK(std::stod(rows[1].at("mse")) > std::stod(rows[2].at("mse")));
}

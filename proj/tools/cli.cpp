#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"

#include "qgf/allocation.hpp"
#include "qgf/distsim.hpp"
#include "qgf/error.hpp"
#include "qgf/experiments.hpp"
#include "qgf/io.hpp"
#include "qgf/quantizer.hpp"
#include "qgf/stations.hpp"
#include "qgf/stats.hpp"

namespace qgf::cli {
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool budget_repair = false;
  bool dump_traces = false;
  // ingest
  std::string csv;
  int synthetic = 0;
  std::optional<int> year;
  std::optional<double> theta;
  std::optional<double> kappa;
  std::optional<double> scale_km;
  // validate
  std::string fault = "none";
};

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::config, what); }

Json load_config(const Options& opt) {
  if (opt.config.empty()) return Json::object();
  return read_json_file(opt.config);
}

template <typename T>
T section_value(const Json& s, const char* key, T fallback) {
  if (!s.contains(key)) return fallback;
  try {
    return s.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    config_error(std::string("bad value for '") + key + "'");
  }
}

void reject_unknown(const Json& s, std::initializer_list<const char*> keys, const std::string& where) {
  if (!s.is_object()) config_error(where + " must be an object");
  for (const auto& [k, v] : s.items()) {
    bool ok = false;
    for (const char* allowed : keys) ok = ok || k == allowed;
    if (!ok) config_error("unknown key '" + k + "' in " + where);
  }
}

struct Context {
  Options opt;
  Json raw;  // config file as given, with CLI overrides applied
  fs::path out;
  std::vector<std::string> outputs;

  void write(const std::string& name, const std::string& contents) {
    fs::create_directories((out / name).parent_path());
    write_text_file((out / name).string(), contents);
    outputs.push_back(name);
  }
};

Context make_context(const Options& opt, const Json& raw) {
  Context ctx;
  ctx.opt = opt;
  ctx.raw = raw;
  if (opt.seed) ctx.raw["seed"] = *opt.seed;
  if (opt.threads) ctx.raw["threads"] = *opt.threads;
  if (opt.budget_repair) ctx.raw["budget_repair"] = true;
  ctx.out = opt.out;
  std::error_code ec;
  fs::create_directories(ctx.out, ec);
  if (ec) config_error("cannot create output directory " + opt.out + ": " + ec.message());
  return ctx;
}

/// Applies an optional "dataset" section: a station CSV (or a synthetic one
/// written into the output directory) becomes the graph and clean signal.
void attach_dataset(Context& ctx, ExperimentConfig& cfg) {
  if (!ctx.raw.contains("dataset")) return;
  const Json& d = ctx.raw.at("dataset");
  reject_unknown(d, {"path", "synthetic_stations", "synthetic_days", "synthetic_seed", "year", "theta", "kappa",
                     "distance_scale_km"},
                 "dataset");
  StationGraphOptions so;
  so.year = section_value(d, "year", so.year);
  so.theta = section_value(d, "theta", so.theta);
  so.kappa = section_value(d, "kappa", so.kappa);
  so.distance_scale_km = section_value(d, "distance_scale_km", so.distance_scale_km);
  std::string path = section_value<std::string>(d, "path", "");
  if (path.empty()) {
    const int stations = section_value(d, "synthetic_stations", 0);
    if (stations < 2) config_error("dataset needs a path or synthetic_stations >= 2");
    path = (ctx.out / "stations.csv").string();
    write_synthetic_station_csv(path, stations, so.year, section_value(d, "synthetic_days", 30),
                                section_value<std::uint64_t>(d, "synthetic_seed", 7));
    ctx.outputs.push_back("stations.csv");
  }
  StationDataset ds = ingest_station_csv(path, so);
  cfg.signal = SignalKind::dataset;
  cfg.dataset_graph = std::move(ds.graph);
  cfg.dataset_signal = std::move(ds.signal);
}

ExperimentConfig experiment_config(Context& ctx, const Json& j) {
  ExperimentConfig cfg = config_from_json(j);
  attach_dataset(ctx, cfg);
  cfg.validate();
  return cfg;
}

void write_manifest(Context& ctx, const std::string& command, const Json& effective, Json extra = Json::object()) {
  Json m;
  m["command"] = command;
  m["config_hash"] = config_hash(effective);
  m["seed"] = effective.contains("seed") ? effective.at("seed") : Json(nullptr);
  m["config"] = effective;
  for (auto& [k, v] : extra.items()) m[k] = v;
  auto outputs = ctx.outputs;
  m["outputs"] = outputs;
  write_text_file((ctx.out / "manifest.json").string(), m.dump(2) + "\n");
}

/// Effective config: the parsed experiment settings plus the raw sections the
/// subcommands read themselves.
Json effective_config(const Context& ctx, const ExperimentConfig& cfg) {
  Json e = config_to_json(cfg);
  for (const char* key : {"name", "dataset", "propagation", "stats", "alloc", "variants"}) {
    if (ctx.raw.contains(key)) e[key] = ctx.raw.at(key);
  }
  return e;
}

// ---------------------------------------------------------------- sweep

Json strip_sections(Json j) {
  for (const char* key : {"dataset", "propagation", "stats", "alloc", "variants"}) j.erase(key);
  return j;
}

std::string sweep_csv(const ExperimentResult& r) {
  std::ostringstream os;
  write_sweep_csv(os, r);
  return os.str();
}

int cmd_sweep(const Options& opt, std::ostream& out) {
  Json raw = load_config(opt);
  Json variants = Json::array();
  if (raw.contains("variants")) {
    variants = raw.at("variants");
    if (!variants.is_array() || variants.empty()) config_error("variants must be a non-empty array");
  }
  Context ctx = make_context(opt, raw);
  Json base = ctx.raw;
  base.erase("variants");
  if (variants.empty()) variants.push_back(Json::object());
  Json runs = Json::array();
  for (const auto& v : variants) {
    Json j = base;
    std::string name;
    if (v.contains("name")) name = v.at("name").get<std::string>();
    Json patch = v;
    patch.erase("name");
    j.merge_patch(patch);
    ExperimentConfig cfg = experiment_config(ctx, strip_sections(j));
    cfg.keep_traces = opt.dump_traces;
    const ExperimentResult result = run_mse_sweep(cfg);
    const std::string file = name.empty() ? "results.csv" : "results_" + name + ".csv";
    ctx.write(file, sweep_csv(result));
    if (opt.dump_traces) {
      for (const auto& t : result.traces) {
        std::ostringstream os;
        write_trace_csv(os, t.trace);
        ctx.write("traces/" + (name.empty() ? "" : name + "_") + to_string(t.scheme) + "_" + format_number(t.budget) +
                      ".csv",
                  os.str());
      }
    }
    int skipped = 0;
    for (const auto& r : result.rows) skipped += r.skipped;
    Json run{{"name", name}, {"results", file}, {"config", config_to_json(cfg)}, {"skipped_trials", skipped}};
    runs.push_back(run);
    out << (name.empty() ? std::string("sweep") : name) << ": " << result.rows.size() << " rows -> "
        << (ctx.out / file).string() << "\n";
    if (skipped == static_cast<int>(result.rows.size()) * cfg.trials) {
      throw Error(ErrorKind::infeasible_budget, "every budget was infeasible for every trial");
    }
  }
  const Json effective = effective_config(ctx, config_from_json(strip_sections(base)));
  write_manifest(ctx, "sweep", effective, Json{{"runs", runs}});
  return exit_ok;
}

// ---------------------------------------------------------------- alloc / fmap

/// Graph and noisy signal of trial 0 under the sweep's seed streams.
struct Instance {
  TrialSetup setup;
  VectorXd f;
};

Instance first_instance(const ExperimentConfig& cfg) {
  Instance inst;
  Graph g;
  if (cfg.dataset_graph) {
    g = *cfg.dataset_graph;
  } else if (cfg.family == GraphFamily::binomial) {
    g = build_binomial_degree_graph(cfg.binomial, derive_seed(cfg.seed, 0));
  } else {
    g = build_geometric_graph(cfg.geometric, derive_seed(cfg.seed, 0));
  }
  inst.setup = prepare_trial(std::move(g), cfg.filter, cfg.order);
  VectorXd clean;
  switch (cfg.signal) {
    case SignalKind::coordinate_quadratic:
      if (!inst.setup.graph.coords) throw Error(ErrorKind::config, "graph has no coordinates");
      clean = coordinate_quadratic_signal(*inst.setup.graph.coords);
      break;
    case SignalKind::uniform_random: {
      Rng rng{derive_seed(cfg.seed, 1)};
      clean = uniform_random_signal(inst.setup.graph.n_nodes, rng);
      break;
    }
    case SignalKind::dataset: clean = *cfg.dataset_signal; break;
  }
  inst.f = add_noise(clean, cfg.noise_sigma, derive_seed(cfg.seed, 2));
  return inst;
}

struct AllocRequest {
  double budget_value = 0.0;
  bool per_message = true;
  AllocScheme scheme = AllocScheme::bounded_optimized;
};

/// The "alloc" section, defaulting to the first sweep budget.
AllocRequest alloc_request(const Context& ctx, const ExperimentConfig& cfg) {
  Json a = ctx.raw.value("alloc", Json::object());
  reject_unknown(a, {"budget", "budget_mode", "scheme"}, "alloc");
  AllocRequest req;
  req.budget_value = section_value(a, "budget", cfg.budgets.front());
  const std::string mode = section_value<std::string>(a, "budget_mode", to_string(cfg.budget_mode));
  if (mode != "per_message" && mode != "total") config_error("unknown alloc budget_mode '" + mode + "'");
  req.per_message = mode == "per_message";
  const std::string scheme = section_value<std::string>(a, "scheme", "bounded_optimized");
  if (scheme == "bounded_optimized") {
    req.scheme = AllocScheme::bounded_optimized;
  } else if (scheme == "bounded_uniform") {
    req.scheme = AllocScheme::bounded_uniform;
  } else {
    config_error("alloc scheme must be bounded_optimized or bounded_uniform");
  }
  return req;
}

int cmd_alloc(const Options& opt, std::ostream& out) {
  Context ctx = make_context(opt, load_config(opt));
  ExperimentConfig cfg = experiment_config(ctx, strip_sections(ctx.raw));
  const AllocRequest req = alloc_request(ctx, cfg);
  const Instance inst = first_instance(cfg);
  const VectorXi& d = inst.setup.graph.degrees;
  const double budget = req.per_message ? req.budget_value * minimum_budget(d, cfg.order) : req.budget_value;
  const double range = bounded_range(inst.f, cfg.bounded_range);
  const AllocationPlan plan = plan_for(req.scheme, inst.setup, budget, range, cfg.budget_repair);

  std::ostringstream bits_csv, f_csv;
  write_plan_csv(bits_csv, plan);
  write_f_csv(f_csv, inst.setup.model.F);
  ctx.write("allocation.csv", bits_csv.str());
  ctx.write("F.csv", f_csv.str());
  Json pj = plan_to_json(plan);
  pj["range"] = range;
  pj["expected_mse"] = expected_mse(inst.setup.model.F, plan.bits, range) / inst.setup.graph.n_nodes;
  ctx.write("allocation.json", pj.dump(2) + "\n");
  write_manifest(ctx, "alloc", effective_config(ctx, cfg),
                 Json{{"budget", budget}, {"cost", plan.cost}, {"minimum_budget", minimum_budget(d, cfg.order)}});
  out << "alloc: budget " << format_number(budget) << ", cost " << format_number(plan.cost) << " -> "
      << (ctx.out / "allocation.csv").string() << "\n";
  return exit_ok;
}

int cmd_fmap(const Options& opt, std::ostream& out) {
  Context ctx = make_context(opt, load_config(opt));
  ExperimentConfig cfg = experiment_config(ctx, strip_sections(ctx.raw));
  const Instance inst = first_instance(cfg);
  const auto& g = inst.setup.graph;
  const VectorXi& d = g.degrees;
  const double range = bounded_range(inst.f, cfg.bounded_range);
  const AllocRequest req = alloc_request(ctx, cfg);
  const double budget = req.per_message ? req.budget_value * minimum_budget(d, cfg.order) : req.budget_value;
  const AllocationPlan plan = kkt_allocate(inst.setup.model.F, d, budget, range);
  const auto ecc = eccentricities(g);

  std::ostringstream os;
  os << "node,x,y,degree,eccentricity,F0,x0,x_mean\n";
  for (int n = 0; n < g.n_nodes; ++n) {
    const double px = g.coords ? (*g.coords)(n, 0) : 0.0;
    const double py = g.coords ? (*g.coords)(n, 1) : 0.0;
    os << n << ',' << format_number(px) << ',' << format_number(py) << ',' << d(n) << ',' << ecc[n] << ','
       << format_number(inst.setup.model.F(0, n)) << ',' << format_number((*plan.real_valued)(n, 0)) << ','
       << format_number(plan.real_valued->row(n).mean()) << '\n';
  }
  ctx.write("fmap.csv", os.str());
  std::ostringstream f_csv;
  write_f_csv(f_csv, inst.setup.model.F);
  ctx.write("F.csv", f_csv.str());
  ctx.write("graph.json", graph_to_json(g).dump() + "\n");
  write_manifest(ctx, "fmap", effective_config(ctx, cfg));
  out << "fmap: " << g.n_nodes << " nodes -> " << (ctx.out / "fmap.csv").string() << "\n";
  return exit_ok;
}

// ---------------------------------------------------------------- propagate

int cmd_propagate(const Options& opt, std::ostream& out) {
  Context ctx = make_context(opt, load_config(opt));
  Json p = ctx.raw.value("propagation", Json::object());
  reject_unknown(p, {"n", "theta", "kappas", "order", "bits", "noise_sigma", "max_draws", "range"}, "propagation");
  const std::uint64_t seed = section_value<std::uint64_t>(ctx.raw, "seed", 1);
  const int n = section_value(p, "n", 50);
  const double theta = section_value(p, "theta", 2.0);
  const auto kappas = section_value(p, "kappas", std::vector<double>{0.18, 0.25, 0.3});
  const int order = section_value(p, "order", 17);
  const int bits = section_value(p, "bits", 8);
  const double sigma = section_value(p, "noise_sigma", 0.0);
  const int max_draws = section_value(p, "max_draws", 20000);
  const std::string range = section_value<std::string>(p, "range", "l2_norm");
  if (range != "l2_norm" && range != "sup_norm") config_error("propagation range must be l2_norm or sup_norm");
  if (kappas.size() < 2) config_error("propagation needs at least two kappas");

  const PropagationCase pc = find_propagation_case(seed, n, theta, kappas, max_draws);
  const PropagationSweep sw = run_propagation_sweep(pc, theta, order, bits, sigma,
                                                    range == "l2_norm" ? RangePolicy::l2_norm : RangePolicy::sup_norm);
  std::ostringstream map, summary;
  map << "kappa,node,x,y,degree,abs_error\n";
  summary << "kappa,node,epsilon,mse,component_size\n";
  for (std::size_t i = 0; i < sw.results.size(); ++i) {
    const Graph g = geometric_graph_from_coords(pc.coords, theta, kappas[i]);
    const auto& r = sw.results[i];
    for (int v = 0; v < g.n_nodes; ++v) {
      map << format_number(kappas[i]) << ',' << v << ',' << format_number(pc.coords(v, 0)) << ','
          << format_number(pc.coords(v, 1)) << ',' << g.degrees(v) << ',' << format_number(r.abs_error(v)) << '\n';
    }
    summary << format_number(kappas[i]) << ',' << r.node << ',' << format_number(r.epsilon) << ','
            << format_number(r.mse) << ',' << connected_component(g, r.node).size() << '\n';
    out << "kappa " << format_number(kappas[i]) << ": mse " << format_number(r.mse) << "\n";
  }
  ctx.write("propagation_map.csv", map.str());
  ctx.write("propagation.csv", summary.str());
  Json eff = ctx.raw;
  eff["seed"] = seed;
  write_manifest(ctx, "propagate", eff, Json{{"node", pc.node}, {"case_seed", pc.seed}});
  return exit_ok;
}

// ---------------------------------------------------------------- stats

int cmd_stats(const Options& opt, std::ostream& out) {
  Context ctx = make_context(opt, load_config(opt));
  Json s = ctx.raw.value("stats", Json::object());
  reject_unknown(s, {"families", "samples", "n", "theta", "kappa_min", "kappa_max", "mean_min", "mean_max",
                     "var_frac_min", "var_frac_max", "order"},
                 "stats");
  const std::uint64_t seed = section_value<std::uint64_t>(ctx.raw, "seed", 1);
  const int samples = section_value(s, "samples", 300);
  if (samples < 30) config_error("stats samples must be >= 30");
  const auto families = section_value(s, "families", std::vector<std::string>{"geometric", "binomial"});
  Json correlations = Json::object();
  for (const auto& name : families) {
    StatsFamily fam;
    if (name == "geometric") {
      fam.family = GraphFamily::geometric;
    } else if (name == "binomial") {
      fam.family = GraphFamily::binomial;
    } else {
      config_error("unknown stats family '" + name + "'");
    }
    fam.n = section_value(s, "n", fam.n);
    fam.theta = section_value(s, "theta", fam.theta);
    fam.kappa_min = section_value(s, "kappa_min", fam.kappa_min);
    fam.kappa_max = section_value(s, "kappa_max", fam.kappa_max);
    fam.mean_min = section_value(s, "mean_min", fam.mean_min);
    fam.mean_max = section_value(s, "mean_max", fam.mean_max);
    fam.var_frac_min = section_value(s, "var_frac_min", fam.var_frac_min);
    fam.var_frac_max = section_value(s, "var_frac_max", fam.var_frac_max);
    fam.order = section_value(s, "order", fam.order);
    if (ctx.raw.contains("filter")) fam.filter = filter_from_json(ctx.raw.at("filter"));

    const auto rows = run_allocation_stats(fam, samples, seed);
    std::ostringstream os;
    os << "degree_mean,degree_variance,eccentricity_variance,x_variance,family_param\n";
    for (const auto& r : rows) {
      os << format_number(r.degree_mean) << ',' << format_number(r.degree_variance) << ','
         << format_number(r.eccentricity_variance) << ',' << format_number(r.x_variance) << ','
         << format_number(r.family_param) << '\n';
    }
    ctx.write("stats_" + name + ".csv", os.str());
    const auto c = summarize_allocation_stats(rows);
    correlations[name] = Json{{"graphs", rows.size()},
                              {"rho_degree_mean", c.rho_degree_mean},
                              {"p_degree_mean", c.p_degree_mean},
                              {"rho_degree_variance", c.rho_degree_variance},
                              {"p_degree_variance", c.p_degree_variance},
                              {"rho_eccentricity_variance", c.rho_eccentricity_variance},
                              {"p_eccentricity_variance", c.p_eccentricity_variance}};
    out << name << ": " << rows.size() << " graphs, rho(degree mean, x var) = " << format_number(c.rho_degree_mean)
        << ", rho(ecc var, x var) = " << format_number(c.rho_eccentricity_variance) << "\n";
  }
  ctx.write("correlations.json", correlations.dump(2) + "\n");
  Json eff = ctx.raw;
  eff["seed"] = seed;
  write_manifest(ctx, "stats", eff);
  return exit_ok;
}

// ---------------------------------------------------------------- ingest

int cmd_ingest(const Options& opt, std::ostream& out) {
  Json raw = load_config(opt);
  Context ctx = make_context(opt, raw);
  Json d = ctx.raw.value("dataset", Json::object());
  StationGraphOptions so;
  so.year = opt.year.value_or(section_value(d, "year", so.year));
  so.theta = opt.theta.value_or(section_value(d, "theta", so.theta));
  so.kappa = opt.kappa.value_or(section_value(d, "kappa", so.kappa));
  so.distance_scale_km = opt.scale_km.value_or(section_value(d, "distance_scale_km", so.distance_scale_km));
  std::string path = opt.csv.empty() ? section_value<std::string>(d, "path", "") : opt.csv;
  const int synthetic = opt.synthetic > 0 ? opt.synthetic : section_value(d, "synthetic_stations", 0);
  if (path.empty()) {
    if (synthetic < 2) config_error("ingest needs --csv PATH or --synthetic N");
    path = (ctx.out / "stations.csv").string();
    write_synthetic_station_csv(path, synthetic, so.year, section_value(d, "synthetic_days", 30),
                                opt.seed.value_or(section_value<std::uint64_t>(d, "synthetic_seed", 7)));
    ctx.outputs.push_back("stations.csv");
  }
  const StationDataset ds = ingest_station_csv(path, so);
  ctx.write("graph.json", graph_to_json(ds.graph).dump() + "\n");
  std::ostringstream sig;
  sig << "node,station_id,value,degree\n";
  for (int i = 0; i < ds.graph.n_nodes; ++i) {
    sig << i << ',' << ds.station_ids[i] << ',' << format_number(ds.signal(i)) << ',' << ds.graph.degrees(i) << '\n';
  }
  ctx.write("signal.csv", sig.str());
  Json eff{{"csv", path},
           {"year", so.year},
           {"theta", so.theta},
           {"kappa", so.kappa},
           {"distance_scale_km", so.distance_scale_km}};
  if (opt.seed) eff["seed"] = *opt.seed;
  write_manifest(ctx, "ingest", eff,
                 Json{{"stations", ds.graph.n_nodes}, {"edges", ds.graph.edge_count()}});
  out << "ingest: " << ds.graph.n_nodes << " stations, " << ds.graph.edge_count() << " edges\n";
  return exit_ok;
}

// ---------------------------------------------------------------- validate

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass() const { return value <= tolerance; }
};

std::vector<Check> oracle_checks(std::uint64_t seed, const std::string& fault) {
  GeometricParams gp;
  gp.n = 20;
  gp.kappa = 0.4;
  const Graph g = build_geometric_graph(gp, seed);
  const LaplacianPair lp = laplacians(g);
  const FilterApprox approx = chebyshev_fit(FilterSpec::lowpass(), 9, std::min(lp.lambda_max, 2.0));
  FilterApprox model_approx = approx;
  if (fault == "alpha") model_approx.alpha(model_approx.order) += 1e-3;
  const ErrorModel model = build_error_model(model_approx, lp.normalized);
  const VectorXd f = add_noise(coordinate_quadratic_signal(*g.coords), 0.1, derive_seed(seed, 1));
  const VectorXd exact = run_exact(lp, approx, f).output;
  std::vector<Check> checks;

  // Error operators against injected-error simulation.
  Rng rng = make_rng(seed, 2);
  std::uniform_real_distribution<double> u(-1e-2, 1e-2);
  double worst = 0.0;
  double worst_unbounded = 0.0;
  for (int t = 0; t < 20; ++t) {
    MatrixXd eps(approx.order, g.n_nodes);
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = u(rng);
    VectorXd q = VectorXd::Zero(g.n_nodes);
    for (int k = 0; k < approx.order; ++k) q += model.H[k] * eps.row(k).transpose();
    const VectorXd sim = run_with_injected_errors(lp, approx, f, eps, Scheme::bounded).output - exact;
    worst = std::max(worst, (sim - q).norm() / sim.norm());

    VectorXd e6 = VectorXd::Zero(g.n_nodes);
    for (int k = 0; k < approx.order; ++k) {
      VectorXd term = eps.row(k).transpose();
      for (int j = 1; k + j <= approx.order; ++j) {
        term = lp.normalized * term;
        e6 += model_approx.alpha(k + j) * term;
      }
    }
    const VectorXd usim = run_with_injected_errors(lp, approx, f, eps, Scheme::unbounded).output - exact;
    worst_unbounded = std::max(worst_unbounded, (usim - e6).norm() / usim.norm());
  }
  checks.push_back({"error_operator_vs_simulation", worst, 1e-7});
  checks.push_back({"eq6_vs_unbounded_simulation", worst_unbounded, 1e-7});

  const MatrixXd zero = MatrixXd::Zero(approx.order, g.n_nodes);
  checks.push_back({"noiseless_bounded_equals_exact",
                    (run_with_injected_errors(lp, approx, f, zero, Scheme::bounded).output - exact).cwiseAbs().maxCoeff(),
                    1e-8});

  const double budget = 4.0 * minimum_budget(g.degrees, approx.order);
  const AllocationPlan kkt = kkt_allocate(model.F, g.degrees, budget, 1.0);
  const AllocationPlan bis = kkt_allocate_bisection(model.F, g.degrees, budget, 1.0);
  checks.push_back({"kkt_vs_bisection", (*kkt.real_valued - *bis.real_valued).cwiseAbs().maxCoeff(), 1e-6});
  checks.push_back(
      {"kkt_budget_equality", std::abs(allocation_cost(*kkt.real_valued, g.degrees) - budget) / budget, 1e-6});

  Rng qrng = make_rng(seed, 3);
  std::uniform_real_distribution<double> uq(-1.0, 1.0);
  const QuantizerConfig qc{1.0, 8};
  double acc = 0.0;
  const int samples = 1'000'000;
  for (int i = 0; i < samples; ++i) {
    const double v = uq(qrng);
    const double e = quantize(v, qc) - v;
    acc += e * e;
  }
  checks.push_back({"white_noise_variance", std::abs(acc / samples / expected_sq_error(qc) - 1.0), 0.01});
  return checks;
}

int cmd_validate(const Options& opt, std::ostream& out) {
  if (opt.fault != "none" && opt.fault != "alpha") config_error("unknown fault '" + opt.fault + "'");
  const std::uint64_t seed = opt.seed.value_or(1);
  const auto checks = oracle_checks(seed, opt.fault);
  bool ok = true;
  out << std::left << std::setw(34) << "check" << std::setw(14) << "value" << std::setw(12) << "tolerance"
      << "result\n";
  for (const auto& c : checks) {
    ok = ok && c.pass();
    std::ostringstream value, tol;
    value << std::scientific << std::setprecision(3) << c.value;
    tol << std::scientific << std::setprecision(0) << c.tolerance;
    out << std::setw(34) << c.name << std::setw(14) << value.str() << std::setw(12) << tol.str()
        << (c.pass() ? "PASS" : "FAIL") << "\n";
  }
  if (!ok) throw Error(ErrorKind::oracle_failure, "one or more oracle checks failed");
  return exit_ok;
}

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::infeasible_budget: return exit_infeasible;
    case ErrorKind::oracle_failure: return exit_oracle;
    case ErrorKind::config:
    case ErrorKind::parse:
    case ErrorKind::invalid_argument:
    case ErrorKind::disconnected: return exit_config;
  }
  return exit_failure;
}

void report(std::ostream& err, const std::string& kind, const std::string& message, int code) {
  err << Json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distributed graph filtering under message quantization"};
  app.require_subcommand(1);
  Options opt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "Experiment config (JSON)");
    sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "Root seed override");
    sub->add_option("--threads", opt.threads, "Worker threads for trials")->check(CLI::PositiveNumber);
    sub->add_flag("--budget-repair", opt.budget_repair, "Greedy repair of rounded plans down to the budget");
    sub->add_flag("--dump-traces", opt.dump_traces, "Write per-message traces of the first trial");
  };

  std::vector<std::pair<CLI::App*, int (*)(const Options&, std::ostream&)>> commands;
  auto add = [&](const char* name, const char* help, int (*fn)(const Options&, std::ostream&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    common(sub);
    commands.emplace_back(sub, fn);
    return sub;
  };
  add("sweep", "Monte Carlo MSE sweep over budgets and schemes", cmd_sweep);
  add("alloc", "Bit allocation for the first trial's graph", cmd_alloc);
  add("fmap", "Per-node F_k and allocation map", cmd_fmap);
  add("propagate", "Single-node error propagation across thresholds", cmd_propagate);
  add("stats", "Allocation variance against topology statistics", cmd_stats);
  CLI::App* ingest = add("ingest", "Build a station graph from a rain-gauge CSV", cmd_ingest);
  ingest->add_option("--csv", opt.csv, "station_id,latitude,longitude,date,value file");
  ingest->add_option("--synthetic", opt.synthetic, "Write and ingest a synthetic fixture with N stations");
  ingest->add_option("--year", opt.year, "Year to average");
  ingest->add_option("--theta", opt.theta, "Kernel scale (scaled distance units)");
  ingest->add_option("--kappa", opt.kappa, "Distance threshold (scaled distance units)");
  ingest->add_option("--scale-km", opt.scale_km, "Kilometres per distance unit");
  CLI::App* validate = add("validate", "Run the oracle self-checks", cmd_validate);
  validate->add_option("--inject-fault", opt.fault, "Negative control: 'alpha' perturbs the model's coefficients")
      ->check(CLI::IsMember({"none", "alpha"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    report(err, "usage", e.what(), exit_config);
    return exit_config;
  }

  try {
    for (auto& [sub, fn] : commands) {
      if (sub->parsed()) return fn(opt, out);
    }
    report(err, "usage", "no subcommand", exit_config);
    return exit_config;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    report(err, to_string(e.kind()), e.what(), code);
    return code;
  } catch (const nlohmann::json::exception& e) {
    report(err, "config", e.what(), exit_config);
    return exit_config;
  } catch (const std::exception& e) {
    report(err, "internal", e.what(), exit_failure);
    return exit_failure;
  }
}

}  // namespace qgf::cli

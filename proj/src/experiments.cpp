#include "qgf/experiments.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "qgf/distsim.hpp"
#include "qgf/error.hpp"
#include "qgf/quantizer.hpp"
#include "qgf/stats.hpp"

namespace qgf {

const char* to_string(GraphFamily f) noexcept {
  return f == GraphFamily::geometric ? "geometric" : "binomial";
}

const char* to_string(SignalKind s) noexcept {
  switch (s) {
    case SignalKind::coordinate_quadratic: return "coordinate_quadratic";
    case SignalKind::uniform_random: return "uniform_random";
    case SignalKind::dataset: return "dataset";
  }
  return "unknown";
}

const char* to_string(AllocScheme s) noexcept {
  switch (s) {
    case AllocScheme::unbounded: return "unbounded";
    case AllocScheme::bounded_uniform: return "bounded_uniform";
    case AllocScheme::bounded_optimized: return "bounded_optimized";
  }
  return "unknown";
}

const char* to_string(BudgetMode m) noexcept {
  return m == BudgetMode::per_message ? "per_message" : "total";
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::config, what); };
  if (trials < 1) fail("trials must be >= 1");
  if (order < 0 || order > max_filter_order) fail("order must be in [0, 30]");
  if (noise_sigma < 0.0) fail("noise sigma must be >= 0");
  if (budgets.empty()) fail("at least one budget is required");
  if (schemes.empty()) fail("at least one scheme is required");
  if (threads < 1) fail("threads must be >= 1");
  for (double b : budgets) {
    if (!(b > 0.0)) fail("budgets must be positive");
  }
  if (signal == SignalKind::dataset && (!dataset_graph || !dataset_signal)) {
    fail("dataset signal requires a graph and a signal");
  }
  if (dataset_graph && dataset_signal && dataset_signal->size() != dataset_graph->n_nodes) {
    fail("dataset signal length does not match graph size");
  }
  if (signal == SignalKind::coordinate_quadratic && family == GraphFamily::binomial) {
    fail("coordinate signal needs node coordinates; binomial graphs have none");
  }
}

const SweepRow& ExperimentResult::row(AllocScheme scheme, double budget) const {
  for (const auto& r : rows) {
    if (r.scheme == scheme && r.budget == budget) return r;
  }
  throw Error(ErrorKind::invalid_argument, "no sweep row for the requested scheme and budget");
}

VectorXd coordinate_quadratic_signal(const Coords& coords) {
  return (coords.col(0).array().square() + coords.col(1).array().square() - 1.0).matrix();
}

VectorXd uniform_random_signal(int n, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  VectorXd f(n);
  for (int i = 0; i < n; ++i) f(i) = unit(rng);
  return f;
}

VectorXd add_noise(const VectorXd& f, double sigma, Seed seed) {
  if (sigma < 0.0) throw Error(ErrorKind::invalid_argument, "noise sigma must be >= 0");
  if (sigma == 0.0) return f;
  Rng rng{seed};
  std::normal_distribution<double> normal(0.0, sigma);
  VectorXd out = f;
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += normal(rng);
  return out;
}

TrialSetup prepare_trial(Graph g, const FilterSpec& filter, int order) {
  TrialSetup s;
  s.lp = laplacians(g);
  s.approx = chebyshev_fit(filter, order, std::min(s.lp.lambda_max, 2.0));
  s.model = build_error_model(s.approx, s.lp.normalized);
  s.graph = std::move(g);
  return s;
}

AllocationPlan plan_for(AllocScheme scheme, const TrialSetup& setup, double budget, double range,
                        bool budget_repair) {
  const int order = setup.approx.order;
  switch (scheme) {
    case AllocScheme::unbounded:
    case AllocScheme::bounded_uniform:
      return uniform_allocate(budget, setup.graph.degrees, order);
    case AllocScheme::bounded_optimized: {
      AllocationPlan plan = integerize(kkt_allocate(setup.model.F, setup.graph.degrees, budget, range));
      if (budget_repair) plan = repair_budget(plan, setup.model.F, range);
      return plan;
    }
  }
  throw Error(ErrorKind::invalid_argument, "unknown allocation scheme");
}

namespace {

struct Cell {
  bool skipped = false;
  TrialRecord record;
  std::optional<SimulationTrace> trace;
};

template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Graph draw_graph(const ExperimentConfig& cfg, Seed seed) {
  if (cfg.family == GraphFamily::binomial) return build_binomial_degree_graph(cfg.binomial, seed);
  return build_geometric_graph(cfg.geometric, seed);
}

}  // namespace

ExperimentResult run_mse_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const int n_budgets = static_cast<int>(cfg.budgets.size());
  const int n_schemes = static_cast<int>(cfg.schemes.size());
  const int cells_per_trial = n_budgets * n_schemes;

  std::optional<TrialSetup> shared;
  if (cfg.dataset_graph) {
    shared = prepare_trial(*cfg.dataset_graph, cfg.filter, cfg.order);
  } else if (cfg.fixed_graph) {
    shared = prepare_trial(draw_graph(cfg, derive_seed(cfg.seed, 0)), cfg.filter, cfg.order);
  }

  std::vector<Cell> cells(static_cast<std::size_t>(cfg.trials) * cells_per_trial);
  parallel_for(cfg.trials, cfg.threads, [&](int t) {
    const auto stream = static_cast<std::uint64_t>(t) * 3;
    std::optional<TrialSetup> local;
    if (!shared) local = prepare_trial(draw_graph(cfg, derive_seed(cfg.seed, stream)), cfg.filter, cfg.order);
    const TrialSetup& setup = shared ? *shared : *local;
    const int n = setup.graph.n_nodes;

    VectorXd clean;
    switch (cfg.signal) {
      case SignalKind::coordinate_quadratic:
        if (!setup.graph.coords) throw Error(ErrorKind::config, "graph has no coordinates");
        clean = coordinate_quadratic_signal(*setup.graph.coords);
        break;
      case SignalKind::uniform_random: {
        Rng rng{derive_seed(cfg.seed, stream + 1)};
        clean = uniform_random_signal(n, rng);
        break;
      }
      case SignalKind::dataset:
        clean = *cfg.dataset_signal;
        break;
    }
    const VectorXd f = add_noise(clean, cfg.noise_sigma, derive_seed(cfg.seed, stream + 2));
    const double range = bounded_range(f, cfg.bounded_range);
    const VectorXd exact = run_exact(setup.lp, setup.approx, f).output;
    const double min_budget = minimum_budget(setup.graph.degrees, cfg.order);

    for (int b = 0; b < n_budgets; ++b) {
      const double budget =
          cfg.budget_mode == BudgetMode::per_message ? cfg.budgets[b] * min_budget : cfg.budgets[b];
      for (int s = 0; s < n_schemes; ++s) {
        Cell& cell = cells[static_cast<std::size_t>(t) * cells_per_trial + b * n_schemes + s];
        const AllocScheme scheme = cfg.schemes[s];
        TrialRecord& rec = cell.record;
        rec.trial = t;
        rec.scheme = scheme;
        rec.budget = cfg.budgets[b];
        AllocationPlan plan;
        try {
          plan = plan_for(scheme, setup, budget, range, cfg.budget_repair);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::infeasible_budget) throw;
          cell.skipped = true;
          continue;
        }
        const SimulationTrace trace = scheme == AllocScheme::unbounded
                                          ? run_unbounded_quantized(setup.lp, setup.approx, f, plan)
                                          : run_bounded_quantized(setup.lp, setup.approx, f, plan, cfg.bounded_range);
        rec.total_sq_error = (trace.output - exact).squaredNorm();
        rec.mse = rec.total_sq_error / n;
        rec.model_error = scheme == AllocScheme::unbounded
                              ? std::numeric_limits<double>::quiet_NaN()
                              : expected_mse(setup.model.F, plan.bits, range);
        rec.cost = plan.cost;
        rec.bits_per_msg = min_budget > 0.0 ? plan.cost / min_budget : 0.0;
        if (cfg.keep_traces && t == 0) cell.trace = trace;
      }
    }
  });

  ExperimentResult result;
  for (int b = 0; b < n_budgets; ++b) {
    for (int s = 0; s < n_schemes; ++s) {
      SweepRow row;
      row.scheme = cfg.schemes[s];
      row.budget = cfg.budgets[b];
      std::vector<double> mse, bits, model;
      for (int t = 0; t < cfg.trials; ++t) {
        const Cell& cell = cells[static_cast<std::size_t>(t) * cells_per_trial + b * n_schemes + s];
        if (cell.skipped) {
          ++row.skipped;
          continue;
        }
        mse.push_back(cell.record.mse);
        bits.push_back(cell.record.bits_per_msg);
        model.push_back(cell.record.model_error);
        if (cfg.keep_trials) result.records.push_back(cell.record);
        if (cell.trace) result.traces.push_back({row.scheme, row.budget, *cell.trace});
      }
      row.trials = static_cast<int>(mse.size());
      row.mse_mean = mean(mse);
      row.mse_std = sample_stddev(mse);
      row.bits_per_msg = mean(bits);
      row.model_mean = mean(model);
      result.rows.push_back(row);
    }
  }
  return result;
}

PropagationResult run_error_propagation_study(const Graph& g, int node, const FilterApprox& approx,
                                              const VectorXd& f_in, int delta_bits,
                                              RangePolicy policy) {
  if (node < 0 || node >= g.n_nodes) throw Error(ErrorKind::invalid_argument, "node out of range");
  const LaplacianPair lp = laplacians(g);
  PropagationResult out;
  out.node = node;
  const double range = bounded_range(f_in, policy);
  out.epsilon = quantize(f_in(node), QuantizerConfig{range, delta_bits}) - f_in(node);
  MatrixXd eps = MatrixXd::Zero(approx.order, g.n_nodes);
  if (approx.order > 0) eps(0, node) = out.epsilon;
  // Reference is the same run without the error, so round-off cancels exactly.
  const VectorXd exact =
      run_with_injected_errors(lp, approx, f_in, MatrixXd::Zero(approx.order, g.n_nodes), Scheme::bounded).output;
  const VectorXd noisy = run_with_injected_errors(lp, approx, f_in, eps, Scheme::bounded).output;
  const VectorXd diff = noisy - exact;
  out.abs_error = diff.cwiseAbs();
  out.mse = diff.squaredNorm() / g.n_nodes;
  return out;
}

PropagationCase find_propagation_case(Seed seed, int n, double theta, std::vector<double> kappas,
                                      int max_draws) {
  if (kappas.empty()) throw Error(ErrorKind::invalid_argument, "need at least one threshold");
  for (int draw = 0; draw < max_draws; ++draw) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(draw));
    const Coords coords = uniform_coords(n, rng);
    const Graph sparse = geometric_graph_from_coords(coords, theta, kappas.front());
    if (sparse.degrees.minCoeff() == 0) continue;
    int node = -1;
    for (int i = 0; i < n && node < 0; ++i) {
      if (sparse.degrees(i) == 1 && connected_component(sparse, i).size() == 2) node = i;
    }
    if (node < 0) continue;
    bool ok = true;
    for (std::size_t j = 1; j < kappas.size() && ok; ++j) {
      ok = is_connected(geometric_graph_from_coords(coords, theta, kappas[j]));
    }
    if (!ok) continue;
    return PropagationCase{coords, node, std::move(kappas), derive_seed(seed, draw)};
  }
  throw Error(ErrorKind::disconnected, "no suitable propagation case found");
}

PropagationSweep run_propagation_sweep(const PropagationCase& c, double theta, int order,
                                       int delta_bits, double noise_sigma, RangePolicy policy) {
  PropagationSweep sweep;
  sweep.setup = c;
  const VectorXd f = add_noise(coordinate_quadratic_signal(c.coords), noise_sigma, c.seed);
  for (double kappa : c.kappas) {
    const Graph g = geometric_graph_from_coords(c.coords, theta, kappa);
    const LaplacianPair lp = laplacians(g);
    const FilterApprox approx = chebyshev_fit(FilterSpec::lowpass(), order, std::min(lp.lambda_max, 2.0));
    sweep.results.push_back(run_error_propagation_study(g, c.node, approx, f, delta_bits, policy));
  }
  return sweep;
}

std::vector<AllocationStatsRow> run_allocation_stats(const StatsFamily& family, int samples, Seed seed) {
  if (samples < 1) throw Error(ErrorKind::invalid_argument, "samples must be >= 1");
  std::vector<AllocationStatsRow> rows;
  const int max_attempts = samples * 10;
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(rows.size()) < samples; ++attempt) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(attempt));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Seed graph_seed = derive_seed(seed ^ 0x5bd1e995ULL, static_cast<std::uint64_t>(attempt));
    AllocationStatsRow row;
    std::optional<Graph> g;
    try {
      if (family.family == GraphFamily::geometric) {
        GeometricParams p;
        p.n = family.n;
        p.theta = family.theta;
        p.kappa = family.kappa_min + (family.kappa_max - family.kappa_min) * unit(rng);
        row.family_param = p.kappa;
        g = build_geometric_graph(p, graph_seed);
      } else {
        const double m = family.mean_min + (family.mean_max - family.mean_min) * unit(rng);
        const double frac = family.var_frac_min + (family.var_frac_max - family.var_frac_min) * unit(rng);
        BinomialParams p;
        p.n = family.n;
        p.p = 1.0 - frac;  // variance m (1 - p) = frac * m
        p.trials = std::max(1, static_cast<int>(std::lround(m / p.p)));
        row.family_param = m;
        g = build_binomial_degree_graph(p, graph_seed);
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::disconnected) throw;
      continue;
    }
    const TrialSetup setup = prepare_trial(*std::move(g), family.filter, family.order);
    const VectorXi& d = setup.graph.degrees;
    // x variance over nodes does not depend on budget or range.
    const AllocationPlan plan =
        kkt_allocate(setup.model.F, d, 8.0 * minimum_budget(d, family.order), 1.0);
    const VectorXd x_node = plan.real_valued->rowwise().mean();
    std::vector<double> deg_d(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) deg_d[i] = d(i);
    const auto ecc = eccentricities(setup.graph);
    std::vector<double> ecc_d(ecc.begin(), ecc.end());
    std::vector<double> x(x_node.data(), x_node.data() + x_node.size());
    row.degree_mean = mean(deg_d);
    row.degree_variance = variance(deg_d);
    row.eccentricity_variance = variance(ecc_d);
    row.x_variance = variance(x);
    rows.push_back(row);
  }
  return rows;
}

CorrelationSummary summarize_allocation_stats(const std::vector<AllocationStatsRow>& rows) {
  std::vector<double> dm, dv, ev, xv;
  for (const auto& r : rows) {
    dm.push_back(r.degree_mean);
    dv.push_back(r.degree_variance);
    ev.push_back(r.eccentricity_variance);
    xv.push_back(r.x_variance);
  }
  CorrelationSummary s;
  s.rho_degree_mean = spearman(dm, xv);
  s.p_degree_mean = spearman_p_value(s.rho_degree_mean, rows.size());
  s.rho_degree_variance = spearman(dv, xv);
  s.p_degree_variance = spearman_p_value(s.rho_degree_variance, rows.size());
  s.rho_eccentricity_variance = spearman(ev, xv);
  s.p_eccentricity_variance = spearman_p_value(s.rho_eccentricity_variance, rows.size());
  return s;
}

}  // namespace qgf

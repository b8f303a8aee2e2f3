#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qgf/allocation.hpp"
#include "qgf/filter.hpp"
#include "qgf/graph.hpp"
#include "qgf/rng.hpp"
#include "qgf/types.hpp"

namespace qgf {

enum class GraphFamily { geometric, binomial };
enum class SignalKind { coordinate_quadratic, uniform_random, dataset };
enum class AllocScheme { unbounded, bounded_uniform, bounded_optimized };
/// How budget values are read: bits per message (B = b K sum d, per graph)
/// or absolute totals.
enum class BudgetMode { per_message, total };

const char* to_string(GraphFamily f) noexcept;
const char* to_string(SignalKind s) noexcept;
const char* to_string(AllocScheme s) noexcept;
const char* to_string(BudgetMode m) noexcept;

struct ExperimentConfig {
  GraphFamily family = GraphFamily::geometric;
  GeometricParams geometric;
  BinomialParams binomial;
  SignalKind signal = SignalKind::coordinate_quadratic;
  double noise_sigma = 0.1;
  FilterSpec filter = FilterSpec::lowpass();
  int order = 9;
  std::vector<double> budgets{1, 2, 3, 4, 5, 6, 7, 8};
  BudgetMode budget_mode = BudgetMode::per_message;
  std::vector<AllocScheme> schemes{AllocScheme::bounded_uniform, AllocScheme::bounded_optimized};
  int trials = 200;
  Seed seed = 1;
  int threads = 1;
  bool budget_repair = false;
  RangePolicy bounded_range = RangePolicy::l2_norm;
  // Draw the graph once and vary only signal and noise across trials.
  bool fixed_graph = false;
  // Dataset runs: graph and clean signal supplied by the caller.
  std::optional<Graph> dataset_graph;
  std::optional<VectorXd> dataset_signal;
  bool keep_trials = false;
  // Keep the full simulation traces of trial 0.
  bool keep_traces = false;

  void validate() const;
};

struct TrialRecord {
  int trial = 0;
  AllocScheme scheme = AllocScheme::bounded_uniform;
  double budget = 0.0;
  double mse = 0.0;            // (1/N) ||out_q - out_exact||^2
  double total_sq_error = 0.0;  // ||out_q - out_exact||^2
  double model_error = 0.0;     // expected ||Q||^2 (bounded schemes), else NaN
  double bits_per_msg = 0.0;
  double cost = 0.0;
};

struct SweepRow {
  AllocScheme scheme = AllocScheme::bounded_uniform;
  double budget = 0.0;
  double bits_per_msg = 0.0;
  double mse_mean = 0.0;
  double mse_std = 0.0;
  double model_mean = 0.0;
  int trials = 0;
  int skipped = 0;
};

struct TraceRecord {
  AllocScheme scheme = AllocScheme::bounded_uniform;
  double budget = 0.0;
  SimulationTrace trace;
};

struct ExperimentResult {
  std::vector<SweepRow> rows;
  std::vector<TrialRecord> records;
  std::vector<TraceRecord> traces;

  const SweepRow& row(AllocScheme scheme, double budget) const;
};

/// a^2 + b^2 - 1 from node coordinates.
VectorXd coordinate_quadratic_signal(const Coords& coords);
VectorXd uniform_random_signal(int n, Rng& rng);

/// f + N(0, sigma^2) i.i.d., deterministic per seed.
VectorXd add_noise(const VectorXd& f, double sigma, Seed seed);

/// Per-graph quantities every scheme needs.
struct TrialSetup {
  Graph graph;
  LaplacianPair lp;
  FilterApprox approx;
  ErrorModel model;
};

TrialSetup prepare_trial(Graph g, const FilterSpec& filter, int order);

/// Bits for one scheme at one total budget.
AllocationPlan plan_for(AllocScheme scheme, const TrialSetup& setup, double budget, double range,
                        bool budget_repair);

ExperimentResult run_mse_sweep(const ExperimentConfig& cfg);

struct PropagationResult {
  int node = 0;
  double epsilon = 0.0;
  VectorXd abs_error;  // |output difference| per node
  double mse = 0.0;    // (1/N) ||output difference||^2
};

/// Only `node` quantizes, and only its step-0 message; everything else is
/// sent exactly. Uses the bounded scheme.
PropagationResult run_error_propagation_study(const Graph& g, int node, const FilterApprox& approx,
                                              const VectorXd& f_in, int delta_bits,
                                              RangePolicy policy = RangePolicy::l2_norm);

/// Shared node set swept over several thresholds. `node` sits in a two-node
/// component at the smallest threshold and every larger threshold gives a
/// connected graph.
struct PropagationCase {
  Coords coords;
  int node = 0;
  std::vector<double> kappas;
  Seed seed = 0;
};

PropagationCase find_propagation_case(Seed seed, int n = 50, double theta = 2.0,
                                      std::vector<double> kappas = {0.18, 0.25, 0.3},
                                      int max_draws = 20000);

struct PropagationSweep {
  PropagationCase setup;
  std::vector<PropagationResult> results;  // one per kappa
};

PropagationSweep run_propagation_sweep(const PropagationCase& c, double theta, int order,
                                       int delta_bits, double noise_sigma,
                                       RangePolicy policy = RangePolicy::l2_norm);

struct StatsFamily {
  GraphFamily family = GraphFamily::geometric;
  int n = 50;
  double theta = 2.0;
  double kappa_min = 0.15;
  double kappa_max = 0.4;
  // Binomial family: degree mean drawn from [mean_min, mean_max], variance
  // as a fraction of the mean from [var_frac_min, var_frac_max].
  double mean_min = 3.0;
  double mean_max = 12.0;
  double var_frac_min = 0.1;
  double var_frac_max = 0.9;
  int order = 9;
  FilterSpec filter = FilterSpec::lowpass();
};

struct AllocationStatsRow {
  double degree_mean = 0.0;
  double degree_variance = 0.0;
  double eccentricity_variance = 0.0;
  double x_variance = 0.0;
  double family_param = 0.0;  // kappa, or the binomial degree mean
};

std::vector<AllocationStatsRow> run_allocation_stats(const StatsFamily& family, int samples, Seed seed);

struct CorrelationSummary {
  double rho_degree_mean = 0.0;
  double p_degree_mean = 1.0;
  double rho_degree_variance = 0.0;
  double p_degree_variance = 1.0;
  double rho_eccentricity_variance = 0.0;
  double p_eccentricity_variance = 1.0;
};

CorrelationSummary summarize_allocation_stats(const std::vector<AllocationStatsRow>& rows);

}  // namespace qgf

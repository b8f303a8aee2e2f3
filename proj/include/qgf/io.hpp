#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "qgf/allocation.hpp"
#include "qgf/distsim.hpp"
#include "qgf/experiments.hpp"
#include "qgf/filter.hpp"
#include "qgf/graph.hpp"

namespace qgf {

using Json = nlohmann::ordered_json;

// {"n": int, "coords": [[x, y], ...] | null, "edges": [[i, j, w], ...]}, i < j.
Json graph_to_json(const Graph& g);
Graph graph_from_json(const Json& j);

// {"alpha": [...], "order": K, "domain_max": x}
Json approx_to_json(const FilterApprox& a);
FilterApprox approx_from_json(const Json& j);

Json plan_to_json(const AllocationPlan& plan);
void write_plan_csv(std::ostream& os, const AllocationPlan& plan);
/// node,step,F
void write_f_csv(std::ostream& os, const MatrixXd& F);

Json trace_to_json(const SimulationTrace& trace);
/// kind,step,node,value rows for messages, errors and z_history.
void write_trace_csv(std::ostream& os, const SimulationTrace& trace);

/// scheme,budget,bits_per_msg,mse_mean,mse_std,trials
void write_sweep_csv(std::ostream& os, const ExperimentResult& result);

FilterSpec filter_from_json(const Json& j);
Json filter_to_json(const FilterSpec& f);

/// Experiment config. Unknown keys are rejected; missing keys keep defaults.
ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& cfg);

/// FNV-1a over the compact dump, as 16 hex digits.
std::string config_hash(const Json& j);

/// Shortest round-trip decimal form, for byte-stable CSV output.
std::string format_number(double v);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace qgf

#include "qgf/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "qgf/error.hpp"

namespace qgf {
namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::config, what); }

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    config_error(std::string("bad value for '") + key + "': " + e.what());
  }
}

Json vector_to_json(const VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json matrix_to_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_to_json(m.row(r).transpose()));
  return rows;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

Json graph_to_json(const Graph& g) {
  Json j;
  j["n"] = g.n_nodes;
  if (g.coords) {
    Json c = Json::array();
    for (Eigen::Index i = 0; i < g.coords->rows(); ++i) c.push_back({(*g.coords)(i, 0), (*g.coords)(i, 1)});
    j["coords"] = c;
  } else {
    j["coords"] = nullptr;
  }
  Json edges = Json::array();
  for (int i = 0; i < g.n_nodes; ++i) {
    for (int k = i + 1; k < g.n_nodes; ++k) {
      if (g.weights(i, k) > 0.0) edges.push_back({i, k, g.weights(i, k)});
    }
  }
  j["edges"] = edges;
  return j;
}

Graph graph_from_json(const Json& j) {
  try {
    const int n = j.at("n").get<int>();
    if (n < 1) throw Error(ErrorKind::parse, "graph n must be >= 1");
    MatrixXd w = MatrixXd::Zero(n, n);
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 3) throw Error(ErrorKind::parse, "edge must be [i, j, w]");
      const int a = e[0].get<int>();
      const int b = e[1].get<int>();
      const double weight = e[2].get<double>();
      if (a < 0 || b >= n || a >= b) throw Error(ErrorKind::parse, "edge indices must satisfy 0 <= i < j < n");
      if (!(weight > 0.0)) throw Error(ErrorKind::parse, "edge weights must be positive");
      if (w(a, b) != 0.0) throw Error(ErrorKind::parse, "duplicate edge");
      w(a, b) = w(b, a) = weight;
    }
    std::optional<Coords> coords;
    if (j.contains("coords") && !j.at("coords").is_null()) {
      const auto& c = j.at("coords");
      if (static_cast<int>(c.size()) != n) throw Error(ErrorKind::parse, "coords length must equal n");
      coords = Coords(n, 2);
      for (int i = 0; i < n; ++i) {
        (*coords)(i, 0) = c[i].at(0).get<double>();
        (*coords)(i, 1) = c[i].at(1).get<double>();
      }
    }
    return Graph::from_weights(std::move(w), std::move(coords));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed graph json: ") + e.what());
  }
}

Json approx_to_json(const FilterApprox& a) {
  Json j;
  j["alpha"] = vector_to_json(a.alpha);
  j["order"] = a.order;
  j["domain_max"] = a.domain_max;
  return j;
}

FilterApprox approx_from_json(const Json& j) {
  try {
    const auto alpha = j.at("alpha").get<std::vector<double>>();
    const int order = j.at("order").get<int>();
    if (static_cast<int>(alpha.size()) != order + 1) {
      throw Error(ErrorKind::parse, "alpha length must be order + 1");
    }
    return approx_from_alpha(Eigen::Map<const VectorXd>(alpha.data(), alpha.size()),
                             j.at("domain_max").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed filter json: ") + e.what());
  }
}

Json plan_to_json(const AllocationPlan& plan) {
  Json j;
  j["budget"] = plan.budget;
  j["cost"] = plan.cost;
  j["log_mu"] = plan.log_mu;
  Json rows = Json::array();
  for (Eigen::Index n = 0; n < plan.bits.rows(); ++n) {
    for (Eigen::Index k = 0; k < plan.bits.cols(); ++k) {
      Json r{{"node", n}, {"step", k}, {"bits", plan.bits(n, k)}};
      if (plan.real_valued) r["real"] = (*plan.real_valued)(n, k);
      rows.push_back(r);
    }
  }
  j["messages"] = rows;
  return j;
}

void write_plan_csv(std::ostream& os, const AllocationPlan& plan) {
  os << "node,step,bits\n";
  for (Eigen::Index n = 0; n < plan.bits.rows(); ++n) {
    for (Eigen::Index k = 0; k < plan.bits.cols(); ++k) os << n << ',' << k << ',' << plan.bits(n, k) << '\n';
  }
}

void write_f_csv(std::ostream& os, const MatrixXd& F) {
  os << "node,step,F\n";
  for (Eigen::Index n = 0; n < F.cols(); ++n) {
    for (Eigen::Index k = 0; k < F.rows(); ++k) os << n << ',' << k << ',' << format_number(F(k, n)) << '\n';
  }
}

Json trace_to_json(const SimulationTrace& trace) {
  Json j;
  j["scheme"] = to_string(trace.scheme);
  j["messages"] = matrix_to_json(trace.messages);
  j["errors"] = matrix_to_json(trace.errors);
  j["z_history"] = matrix_to_json(trace.z_history);
  j["output"] = vector_to_json(trace.output);
  return j;
}

void write_trace_csv(std::ostream& os, const SimulationTrace& trace) {
  os << "kind,step,node,value\n";
  auto dump = [&](const char* kind, const MatrixXd& m) {
    for (Eigen::Index k = 0; k < m.rows(); ++k) {
      for (Eigen::Index n = 0; n < m.cols(); ++n) {
        os << kind << ',' << k << ',' << n << ',' << format_number(m(k, n)) << '\n';
      }
    }
  };
  dump("message", trace.messages);
  dump("error", trace.errors);
  dump("z", trace.z_history);
  for (Eigen::Index n = 0; n < trace.output.size(); ++n) {
    os << "output," << trace.z_history.rows() - 1 << ',' << n << ',' << format_number(trace.output(n)) << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const ExperimentResult& result) {
  os << "scheme,budget,bits_per_msg,mse_mean,mse_std,trials\n";
  for (const auto& r : result.rows) {
    os << to_string(r.scheme) << ',' << format_number(r.budget) << ',' << format_number(r.bits_per_msg)
       << ',' << format_number(r.mse_mean) << ',' << format_number(r.mse_std) << ',' << r.trials << '\n';
  }
}

FilterSpec filter_from_json(const Json& j) {
  if (!j.is_object()) config_error("filter must be an object");
  reject_unknown(j, {"kind", "tau", "r", "scale", "lambda_max"}, "filter");
  std::string kind = "lowpass";
  read_opt(j, "kind", kind);
  FilterSpec f;
  if (kind == "lowpass" || kind == "lowpass_denoise") {
    f = FilterSpec::lowpass();
  } else if (kind == "tikhonov") {
    f = FilterSpec::tikhonov(10.0, 1);
  } else if (kind == "heat") {
    f = FilterSpec::heat(1.0);
  } else {
    config_error("unknown filter kind '" + kind + "'");
  }
  read_opt(j, "tau", f.tau);
  read_opt(j, "r", f.r);
  read_opt(j, "scale", f.scale);
  read_opt(j, "lambda_max", f.lambda_max);
  if (!(f.tau > 0.0)) config_error("filter tau must be positive");
  if (f.kind == FilterKind::tikhonov && f.r < 1) config_error("tikhonov r must be >= 1");
  return f;
}

Json filter_to_json(const FilterSpec& f) {
  Json j;
  switch (f.kind) {
    case FilterKind::lowpass_denoise: j["kind"] = "lowpass"; j["tau"] = f.tau; j["scale"] = f.scale; break;
    case FilterKind::tikhonov: j["kind"] = "tikhonov"; j["tau"] = f.tau; j["r"] = f.r; break;
    case FilterKind::heat: j["kind"] = "heat"; j["tau"] = f.tau; j["lambda_max"] = f.lambda_max; break;
    case FilterKind::custom: j["kind"] = "custom"; break;
  }
  return j;
}

ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) config_error("config must be a JSON object");
  reject_unknown(j,
                 {"name", "description", "graph", "signal", "noise_sigma", "filter", "order", "budgets",
                  "budget_mode", "schemes", "trials", "seed", "threads", "budget_repair", "bounded_range", "dataset",
                  "propagation", "stats", "alloc"},
                 "config");
  ExperimentConfig cfg;
  if (j.contains("graph")) {
    const Json& g = j.at("graph");
    reject_unknown(g, {"family", "n", "theta", "kappa", "max_retries", "trials", "p", "fixed"}, "graph");
    std::string family = "geometric";
    read_opt(g, "family", family);
    if (family == "geometric") {
      cfg.family = GraphFamily::geometric;
    } else if (family == "binomial") {
      cfg.family = GraphFamily::binomial;
    } else {
      config_error("unknown graph family '" + family + "'");
    }
    read_opt(g, "n", cfg.geometric.n);
    cfg.binomial.n = cfg.geometric.n;
    read_opt(g, "theta", cfg.geometric.theta);
    read_opt(g, "kappa", cfg.geometric.kappa);
    read_opt(g, "max_retries", cfg.geometric.max_retries);
    cfg.binomial.max_retries = cfg.geometric.max_retries;
    read_opt(g, "trials", cfg.binomial.trials);
    read_opt(g, "p", cfg.binomial.p);
    read_opt(g, "fixed", cfg.fixed_graph);
    if (cfg.geometric.n < 2) config_error("graph n must be >= 2");
    if (!(cfg.geometric.theta > 0.0) || !(cfg.geometric.kappa > 0.0)) {
      config_error("graph theta and kappa must be positive");
    }
  }
  if (j.contains("signal")) {
    const std::string s = j.at("signal").get<std::string>();
    if (s == "coordinate_quadratic") {
      cfg.signal = SignalKind::coordinate_quadratic;
    } else if (s == "uniform_random") {
      cfg.signal = SignalKind::uniform_random;
    } else if (s == "dataset") {
      cfg.signal = SignalKind::dataset;
    } else {
      config_error("unknown signal '" + s + "'");
    }
  }
  read_opt(j, "noise_sigma", cfg.noise_sigma);
  if (j.contains("filter")) cfg.filter = filter_from_json(j.at("filter"));
  read_opt(j, "order", cfg.order);
  read_opt(j, "budgets", cfg.budgets);
  if (j.contains("budget_mode")) {
    const std::string m = j.at("budget_mode").get<std::string>();
    if (m == "per_message") {
      cfg.budget_mode = BudgetMode::per_message;
    } else if (m == "total") {
      cfg.budget_mode = BudgetMode::total;
    } else {
      config_error("unknown budget_mode '" + m + "'");
    }
  }
  if (j.contains("schemes")) {
    cfg.schemes.clear();
    for (const auto& s : j.at("schemes")) {
      const std::string name = s.get<std::string>();
      if (name == "unbounded") {
        cfg.schemes.push_back(AllocScheme::unbounded);
      } else if (name == "bounded_uniform" || name == "bounded-uniform") {
        cfg.schemes.push_back(AllocScheme::bounded_uniform);
      } else if (name == "bounded_optimized" || name == "bounded-optimized") {
        cfg.schemes.push_back(AllocScheme::bounded_optimized);
      } else {
        config_error("unknown scheme '" + name + "'");
      }
    }
  }
  read_opt(j, "trials", cfg.trials);
  read_opt(j, "seed", cfg.seed);
  read_opt(j, "threads", cfg.threads);
  read_opt(j, "budget_repair", cfg.budget_repair);
  if (j.contains("bounded_range")) {
    const std::string r = j.at("bounded_range").get<std::string>();
    if (r == "l2_norm") {
      cfg.bounded_range = RangePolicy::l2_norm;
    } else if (r == "sup_norm") {
      cfg.bounded_range = RangePolicy::sup_norm;
    } else {
      config_error("unknown bounded_range '" + r + "'");
    }
  }
  return cfg;
}

Json config_to_json(const ExperimentConfig& cfg) {
  Json j;
  Json g;
  g["family"] = to_string(cfg.family);
  g["n"] = cfg.geometric.n;
  if (cfg.family == GraphFamily::geometric) {
    g["theta"] = cfg.geometric.theta;
    g["kappa"] = cfg.geometric.kappa;
  } else {
    g["trials"] = cfg.binomial.trials;
    g["p"] = cfg.binomial.p;
  }
  g["max_retries"] = cfg.geometric.max_retries;
  g["fixed"] = cfg.fixed_graph;
  j["graph"] = g;
  j["signal"] = to_string(cfg.signal);
  j["noise_sigma"] = cfg.noise_sigma;
  j["filter"] = filter_to_json(cfg.filter);
  j["order"] = cfg.order;
  j["budgets"] = cfg.budgets;
  j["budget_mode"] = to_string(cfg.budget_mode);
  Json schemes = Json::array();
  for (auto s : cfg.schemes) schemes.push_back(to_string(s));
  j["schemes"] = schemes;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["budget_repair"] = cfg.budget_repair;
  j["bounded_range"] = to_string(cfg.bounded_range);
  return j;
}

std::string config_hash(const Json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, "invalid JSON in " + path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::config, "cannot write " + path);
  out << contents;
}

}  // namespace qgf

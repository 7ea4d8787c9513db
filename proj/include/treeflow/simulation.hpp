#pragma once

// Batch risk simulations driven by a flat `key = value` config file.
//
//   # comments and blank lines are ignored; lists are comma-separated
//   tree        = kite            # kite | file
//   n_list      = 1000, 1500, 2000
//   alpha       = 0.4, 0.5        # one curve per alpha (kite only)
//   tree_file   = tree.json       # tree = file
//   flow        = worst_case      # worst_case | zero | file
//   flow_file   = flow.csv        # flow = file
//   estimators  = lse, natural    # lse natural oracle_simplex net_lse zero identity
//   V           = 1               # oracle_simplex / net_lse budget
//   net_m       = 2               # net_lse granularity
//   method      = tree_dp         # tree_dp | dykstra
//   max_sweeps  = 10000
//   primal_tol  = 1e-9
//   change_tol  = 1e-10
//   sigma       = 1
//   trials      = 100
//   seed        = 1
//   output_dir  = out

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "treeflow/io.hpp"
#include "treeflow/svg.hpp"

namespace treeflow {

struct ExperimentConfig {
  enum class TreeSource { kite, file };
  enum class FlowSource { worst_case, zero, file };

  TreeSource tree_source = TreeSource::kite;
  std::vector<Index> n_list;
  std::vector<double> alphas;
  std::filesystem::path tree_file;
  FlowSource flow_source = FlowSource::worst_case;
  std::filesystem::path flow_file;
  std::vector<EstimatorSpec> estimators;
  double sigma = 1.0;
  Index trials = 100;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = ".";

  void validate() const {
    if (trials < 2) throw Error("config: trials must be at least 2");
    if (!(sigma >= 0.0)) throw Error("config: sigma must be nonnegative");
    if (estimators.empty()) throw Error("config: no estimators given");
    for (const auto& e : estimators) e.validate();
    if (tree_source == TreeSource::kite) {
      if (n_list.empty()) throw Error("config: n_list is required for kite trees");
      if (alphas.empty()) throw Error("config: alpha is required for kite trees");
      for (std::size_t i = 1; i < n_list.size(); ++i)
        if (n_list[i] <= n_list[i - 1]) throw Error("config: n_list must be strictly increasing");
      if (flow_source == FlowSource::file) throw Error("config: flow = file needs tree = file");
    } else {
      if (tree_file.empty()) throw Error("config: tree_file is required for tree = file");
      if (flow_source == FlowSource::worst_case) throw Error("config: flow = worst_case needs tree = kite");
      if (flow_source == FlowSource::file && flow_file.empty()) throw Error("config: flow_file is required");
    }
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace detail

//! Parses the config text. Relative paths are resolved against `base_dir`.
inline ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
  std::map<std::string, std::string, std::less<>> kv;
  std::size_t line_no = 0;
  for (auto line : io::split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    if (kv.contains(key)) throw Error("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    kv[key] = std::string(detail::trim(line.substr(eq + 1)));
  }

  auto take = [&](std::string_view key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto list = [](const std::string& v) {
    std::vector<std::string_view> out;
    for (auto item : io::split(v, ',')) out.push_back(detail::trim(item));
    return out;
  };
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };

  ExperimentConfig cfg;
  if (auto v = take("tree")) {
    if (*v == "kite") cfg.tree_source = ExperimentConfig::TreeSource::kite;
    else if (*v == "file") cfg.tree_source = ExperimentConfig::TreeSource::file;
    else throw Error("config: tree must be 'kite' or 'file'");
  }
  if (auto v = take("n_list"))
    for (auto item : list(*v)) {
      const long long n = io::parse_integer(item, "n_list");
      if (n < 2) throw Error("config: n_list entries must be at least 2");
      cfg.n_list.push_back(static_cast<Index>(n));
    }
  if (auto v = take("alpha"))
    for (auto item : list(*v)) cfg.alphas.push_back(io::parse_double(item, "alpha"));
  if (auto v = take("tree_file")) cfg.tree_file = resolve(*v);
  if (auto v = take("flow")) {
    if (*v == "worst_case") cfg.flow_source = ExperimentConfig::FlowSource::worst_case;
    else if (*v == "zero") cfg.flow_source = ExperimentConfig::FlowSource::zero;
    else if (*v == "file") cfg.flow_source = ExperimentConfig::FlowSource::file;
    else throw Error("config: flow must be 'worst_case', 'zero' or 'file'");
  }
  if (auto v = take("flow_file")) cfg.flow_file = resolve(*v);

  EstimatorSpec shared;
  if (auto v = take("V")) shared.budget = io::parse_double(*v, "V");
  if (auto v = take("net_m")) {
    const long long m = io::parse_integer(*v, "net_m");
    if (m < 1) throw Error("config: net_m must be at least 1");
    shared.granularity = static_cast<Index>(m);
  }
  if (auto v = take("method")) {
    if (*v == "tree_dp") shared.method = ProjectionMethod::tree_dp;
    else if (*v == "dykstra") shared.method = ProjectionMethod::dykstra;
    else throw Error("config: method must be 'tree_dp' or 'dykstra'");
  }
  if (auto v = take("max_sweeps")) shared.projection.max_sweeps = static_cast<int>(io::parse_integer(*v, "max_sweeps"));
  if (auto v = take("primal_tol")) shared.projection.primal_tol = io::parse_double(*v, "primal_tol");
  if (auto v = take("change_tol")) shared.projection.change_tol = io::parse_double(*v, "change_tol");
  const std::string names = take("estimators").value_or("lse");
  for (auto name : list(names)) {
    EstimatorSpec spec = shared;
    spec.kind = parse_estimator_kind(name);
    cfg.estimators.push_back(spec);
  }

  if (auto v = take("sigma")) cfg.sigma = io::parse_double(*v, "sigma");
  if (auto v = take("trials")) {
    const long long t = io::parse_integer(*v, "trials");
    if (t < 2) throw Error("config: trials must be at least 2");
    cfg.trials = static_cast<Index>(t);
  }
  if (auto v = take("seed")) cfg.seed = static_cast<std::uint64_t>(io::parse_integer(*v, "seed"));
  if (auto v = take("output_dir")) cfg.output_dir = resolve(*v);

  if (!kv.empty()) throw Error("config: unknown key '" + kv.begin()->first + "'");
  cfg.validate();
  return cfg;
}

inline ExperimentConfig read_config(const std::filesystem::path& path) {
  return parse_config(io::read_file(path), path.parent_path());
}

struct ExperimentResult {
  std::vector<io::ResultRow> rows;
  std::vector<RiskCurve> curves;  // one per (alpha, estimator), points ordered by n
};

namespace detail {

inline std::uint64_t point_seed(std::uint64_t master, std::uint64_t curve, std::uint64_t n) {
  return splitmix64(splitmix64(master ^ splitmix64(curve)) ^ n);
}

}  // namespace detail

//! Runs every (alpha, n, estimator) cell. All estimators at one (alpha, n)
//! see the same noise draws; different cells use independent streams.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned workers = 1) {
  cfg.validate();
  ExperimentResult out;

  auto run_cell = [&](const RootedTree& tree, std::optional<KiteSpec> kite, const Vector& mu, double alpha,
                      std::uint64_t seed, std::size_t curve_offset) {
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
      const Estimator estimator(cfg.estimators[e], tree, kite);
      const RiskEstimate r = simulate_risk(mu, estimator, NoiseModel{cfg.sigma, seed}, cfg.trials, workers);
      const std::string name(to_string(cfg.estimators[e].kind));
      out.rows.push_back({tree.size(), alpha, name, cfg.sigma, r.trials, r.mean_sse, r.stderr_sse});
      out.curves[curve_offset + e].points.push_back({tree.size(), r.mean_sse, r.stderr_sse, r.trials});
    }
  };
  auto open_curves = [&](double alpha) {
    const std::size_t offset = out.curves.size();
    for (const auto& spec : cfg.estimators) out.curves.push_back({alpha, std::string(to_string(spec.kind)), {}, {}});
    return offset;
  };

  if (cfg.tree_source == ExperimentConfig::TreeSource::kite) {
    for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
      const double alpha = cfg.alphas[a];
      const std::size_t offset = open_curves(alpha);
      for (Index n : cfg.n_list) {
        const KiteTree kite = build_kite(n, alpha);
        const Vector mu = cfg.flow_source == ExperimentConfig::FlowSource::zero
                              ? Vector(kite.tree.size(), 0.0)
                              : worst_case_flow(kite.spec);
        run_cell(kite.tree, kite.spec, mu, alpha, detail::point_seed(cfg.seed, a, n), offset);
      }
    }
  } else {
    const RootedTree tree = io::read_tree(cfg.tree_file);
    Vector mu(tree.size(), 0.0);
    if (cfg.flow_source == ExperimentConfig::FlowSource::file) {
      mu = io::read_flow(cfg.flow_file);
      if (mu.size() != tree.size()) throw Error("flow file does not match the tree size");
      if (!is_feasible(mu, tree)) throw Error("flow file is not a feasible flow");
    }
    const double alpha = cfg.alphas.empty() ? 0.0 : cfg.alphas.front();
    run_cell(tree, kite_layout(tree), mu, alpha, detail::point_seed(cfg.seed, 0, tree.size()), open_curves(alpha));
  }

  for (auto& c : out.curves) {
    bool fittable = c.points.size() >= 3;
    for (const auto& p : c.points) fittable = fittable && p.mean_sse > 0.0;
    if (fittable) c.fit = fit_exponent(c.points);
  }
  return out;
}

//! Curves with at least 3 points, all with positive risk.
inline std::vector<RiskCurve> fitted_curves(const ExperimentResult& r) {
  std::vector<RiskCurve> out;
  for (const auto& c : r.curves) {
    bool ok = c.points.size() >= 3;
    for (const auto& p : c.points) ok = ok && p.mean_sse > 0.0;
    if (ok) out.push_back(c);
  }
  return out;
}

}  // namespace treeflow

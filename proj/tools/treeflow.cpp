// treeflow: command-line front end for flow denoising on rooted trees.
//
//   treeflow gen-tree --n 9 --alpha 0.5 --out tree.json
//   treeflow project  --tree tree.json --in y.csv --out mu.csv [--method dp|dykstra|exact]
//   treeflow simulate --config experiment.conf
//   treeflow statdim  (--tree tree.json | --monotone d) --trials 20000 --seed 1
//   treeflow net      --tree tree.json --V 1 (--m 4 | --eps 0.5) [--out net.csv] [--check-radius 200]

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "treeflow/treeflow.hpp"

namespace fs = std::filesystem;
using namespace treeflow;

namespace {

int cmd_gen_tree(Index n, double alpha, const fs::path& out) {
  const KiteTree kite = build_kite(n, alpha);
  io::write_file_atomic(out, io::tree_to_json(kite.tree));
  std::cerr << "kite: " << kite.spec.paths << " paths of length " << kite.spec.path_length << ", "
            << kite.tree.size() << " nodes\n";
  return 0;
}

int cmd_project(const fs::path& tree_path, const fs::path& in, const fs::path& out, const std::string& method,
                const std::optional<fs::path>& diagnostics, const ProjectionConfig& cfg) {
  const RootedTree tree = io::read_tree(tree_path);
  const Vector y = io::read_flow(in);
  if (y.size() != tree.size()) throw Error("input has " + std::to_string(y.size()) + " values, tree has " +
                                           std::to_string(tree.size()) + " nodes");
  ProjectionReport report;
  if (method == "exact") {
    report.point = qp_project_exact(y, tree);
    report.sweeps_used = 0;
    report.max_violation = max_violation(report.point, tree);
    report.converged = true;
  } else {
    report = project_flow(y, tree, method == "dykstra" ? ProjectionMethod::dykstra : ProjectionMethod::tree_dp, cfg);
  }
  if (diagnostics) io::write_file_atomic(*diagnostics, io::diagnostics_csv(report));
  if (!report.converged)
    throw Error("projection did not converge within " + std::to_string(report.sweeps_used) + " sweeps");
  io::write_file_atomic(out, io::flow_to_csv(report.point));
  return 0;
}

int cmd_simulate(const fs::path& config_path) {
  const ExperimentConfig cfg = read_config(config_path);
  const unsigned workers = worker_count_from_env();
  const ExperimentResult result = run_experiment(cfg, workers);
  fs::create_directories(cfg.output_dir);
  io::write_file_atomic(cfg.output_dir / "results.csv", io::results_csv(result.rows));
  const auto curves = fitted_curves(result);
  io::write_file_atomic(cfg.output_dir / "exponents.csv", io::exponents_csv(curves));
  if (curves.empty()) {
    std::cerr << "no curve has 3 or more positive points; skipping risk.svg\n";
  } else {
    io::write_file_atomic(cfg.output_dir / "risk.svg", render_svg(curves));
  }
  for (const auto& c : curves)
    std::cout << "alpha=" << c.alpha << " " << c.estimator << " slope=" << c.fit.slope << " +- "
              << c.fit.slope_stderr << "\n";
  return 0;
}

int cmd_statdim(const std::optional<fs::path>& tree_path, std::optional<Index> monotone, Index trials,
                std::uint64_t seed, const std::optional<fs::path>& out) {
  const unsigned workers = worker_count_from_env();
  MeanEstimate est;
  if (monotone) {
    if (*monotone < 1) throw Error("--monotone needs a dimension of at least 1");
    est = statdim_monotone(*monotone, trials, seed, workers);
  } else {
    est = statdim_flow_cone(io::read_tree(*tree_path), trials, seed, workers);
  }
  const std::string csv = io::statdim_csv(est);
  if (out) io::write_file_atomic(*out, csv);
  else std::cout << csv;
  return 0;
}

int cmd_net(const fs::path& tree_path, double budget, std::optional<Index> m, std::optional<double> eps,
            const std::optional<fs::path>& out, std::optional<Index> check_samples, std::uint64_t seed) {
  const RootedTree tree = io::read_tree(tree_path);
  Index granularity = 0;
  if (m) {
    granularity = *m;
  } else {
    // Radius eps needs m = ceil(V^2 h / eps^2), h counted in levels.
    if (!(*eps > 0.0)) throw Error("--eps must be positive");
    const double levels = static_cast<double>(tree.height() + 1);
    granularity = std::max<Index>(1, static_cast<Index>(std::ceil(budget * budget * levels / (*eps * *eps))));
  }
  const MaureyNet net = build_maurey_net(tree, budget, granularity);
  std::cerr << "net: " << net.size() << " elements (m=" << granularity << ")\n";
  if (out) io::write_file_atomic(*out, io::net_to_csv(net));
  if (check_samples) {
    const CoverRadiusReport r = cover_radius_check(net, *check_samples, seed);
    std::cout << "samples,max_squared_distance,bound,within_bound\n"
              << r.samples << "," << io::format_full(r.max_squared_distance) << "," << io::format_full(r.bound)
              << "," << (r.within_bound() ? "true" : "false") << "\n";
    if (!r.within_bound()) throw Error("observed cover radius exceeds the bound");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Denoising flows on rooted trees"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-tree", "Write a kite tree as parent-array JSON");
  Index gen_n = 0;
  double gen_alpha = 0.0;
  fs::path gen_out;
  gen->add_option("--n", gen_n, "Node budget")->required();
  gen->add_option("--alpha", gen_alpha, "Shape parameter in [0, 1]")->required();
  gen->add_option("--out", gen_out, "Output JSON path")->required();

  auto* proj = app.add_subcommand("project", "Project observations onto the flow cone");
  fs::path proj_tree, proj_in, proj_out;
  std::string proj_method = "dp";
  std::optional<fs::path> proj_diag;
  ProjectionConfig proj_cfg;
  proj->add_option("--tree", proj_tree)->required();
  proj->add_option("--in", proj_in, "Observation CSV (node,value)")->required();
  proj->add_option("--out", proj_out, "Projected flow CSV")->required();
  proj->add_option("--method", proj_method, "dp (exact, default), dykstra, or exact (n <= 20)")
      ->check(CLI::IsMember({"dp", "dykstra", "exact"}));
  proj->add_option("--diagnostics", proj_diag, "Write sweeps,max_violation,converged CSV");
  proj->add_option("--max-sweeps", proj_cfg.max_sweeps);
  proj->add_option("--primal-tol", proj_cfg.primal_tol);
  proj->add_option("--change-tol", proj_cfg.change_tol);

  auto* sim = app.add_subcommand("simulate", "Run a risk simulation from a config file");
  fs::path sim_config;
  sim->add_option("--config", sim_config)->required();

  auto* sd = app.add_subcommand("statdim", "Monte-Carlo statistical dimension");
  std::optional<fs::path> sd_tree;
  std::optional<Index> sd_monotone;
  Index sd_trials = 10000;
  std::uint64_t sd_seed = 1;
  std::optional<fs::path> sd_out;
  auto* sd_tree_opt = sd->add_option("--tree", sd_tree, "Flow cone of this tree");
  auto* sd_mono_opt = sd->add_option("--monotone", sd_monotone, "Monotone cone in R^d");
  sd_tree_opt->excludes(sd_mono_opt);
  sd->add_option("--trials", sd_trials);
  sd->add_option("--seed", sd_seed);
  sd->add_option("--out", sd_out);

  auto* nt = app.add_subcommand("net", "Build the quantized-leak covering net");
  fs::path net_tree;
  double net_budget = 1.0;
  std::optional<Index> net_m;
  std::optional<double> net_eps;
  std::optional<fs::path> net_out;
  std::optional<Index> net_check;
  std::uint64_t net_seed = 1;
  nt->add_option("--tree", net_tree)->required();
  nt->add_option("--V", net_budget, "Root budget");
  auto* m_opt = nt->add_option("--m", net_m, "Granularity");
  auto* eps_opt = nt->add_option("--eps", net_eps, "Target radius; m = ceil(V^2 h / eps^2)");
  m_opt->excludes(eps_opt);
  nt->add_option("--out", net_out, "Net CSV (element_index,node,value)");
  nt->add_option("--check-radius", net_check, "Number of random flows for the radius check");
  nt->add_option("--seed", net_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_tree(gen_n, gen_alpha, gen_out);
    if (*proj) return cmd_project(proj_tree, proj_in, proj_out, proj_method, proj_diag, proj_cfg);
    if (*sim) return cmd_simulate(sim_config);
    if (*sd) {
      if (!sd_tree && !sd_monotone) throw Error("statdim needs --tree or --monotone");
      return cmd_statdim(sd_tree, sd_monotone, sd_trials, sd_seed, sd_out);
    }
    if (*nt) {
      if (!net_m && !net_eps) throw Error("net needs --m or --eps");
      return cmd_net(net_tree, net_budget, net_m, net_eps, net_out, net_check, net_seed);
    }
  } catch (const std::exception& e) {
    std::cerr << "treeflow: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

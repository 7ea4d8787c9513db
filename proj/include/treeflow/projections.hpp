#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "treeflow/flow.hpp"

namespace treeflow {

struct ProjectionConfig {
  int max_sweeps = 10000;
  double primal_tol = 1e-9;   // max constraint violation
  double change_tol = 1e-10;  // sup-norm change per sweep, relative to 1 + |y|_inf

  void validate() const {
    if (max_sweeps <= 0) throw Error("projection config: max_sweeps must be positive");
    if (!(primal_tol > 0.0) || !(change_tol > 0.0))
      throw Error("projection config: tolerances must be positive");
  }
};

struct ProjectionReport {
  Vector point;
  int sweeps_used = 0;
  double max_violation = 0.0;
  bool converged = false;
};

// ---------------------------------------------------------------------------
// Sequence projections

//! Pool-adjacent-violators: projection onto {x_1 >= x_2 >= ... >= x_d}.
inline Vector pava_nonincreasing(std::span<const double> y) {
  if (y.empty()) throw Error("pava_nonincreasing: empty input");
  struct Block {
    double sum;
    std::size_t count;
    double mean() const { return sum / static_cast<double>(count); }
  };
  std::vector<Block> blocks;
  blocks.reserve(y.size());
  for (double v : y) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() < blocks.back().mean()) {
      const Block top = blocks.back();
      blocks.pop_back();
      blocks.back().sum += top.sum;
      blocks.back().count += top.count;
    }
  }
  Vector out;
  out.reserve(y.size());
  for (const Block& b : blocks) out.insert(out.end(), b.count, b.mean());
  return out;
}

//! Projection onto {x_1 >= ... >= x_d >= 0}: PAVA followed by clamping.
inline Vector project_monotone_nonneg(std::span<const double> y) {
  if (y.empty()) throw Error("project_monotone_nonneg: empty input");
  Vector x = pava_nonincreasing(y);
  for (double& v : x) v = std::max(v, 0.0);
  return x;
}

//! Projection onto the capped simplex {x >= 0, sum(x) <= cap}.
inline Vector project_simplex_cap(std::span<const double> y, double cap) {
  if (!(cap >= 0.0)) throw Error("project_simplex_cap: cap must be nonnegative");
  Vector x(y.begin(), y.end());
  double total = 0.0;
  for (double& v : x) {
    v = std::max(v, 0.0);
    total += v;
  }
  if (total <= cap) return x;
  if (cap == 0.0) return Vector(x.size(), 0.0);

  // Threshold tau so that sum(max(y - tau, 0)) == cap.
  Vector sorted = x;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double prefix = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    prefix += sorted[k];
    const double candidate = (prefix - cap) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) tau = candidate;
    else break;
  }
  for (double& v : x) v = std::max(v - tau, 0.0);
  return x;
}

// ---------------------------------------------------------------------------
// Flow cone projections

//! Projection onto the single halfspace {x_i >= sum of children of i}.
inline Vector project_halfspace_node(std::span<const double> x, const RootedTree& tree, Index i) {
  detail::require_size(x, tree, "project_halfspace_node");
  if (i >= tree.size()) throw Error("project_halfspace_node: node index out of range");
  Vector out(x.begin(), x.end());
  const double slack = node_slack(x, tree, i);
  if (slack >= 0.0) return out;
  const double step = -slack / static_cast<double>(1 + tree.children(i).size());
  out[i] += step;
  for (Index c : tree.children(i)) out[c] -= step;
  return out;
}

//! Dykstra's alternating projections over the n node halfspaces, swept in node
//! index order. Halfspace corrections are multiples of the constraint normals,
//! so one multiplier per node is the whole Dykstra state (Hildreth's scheme).
inline ProjectionReport dykstra_project_flow(std::span<const double> y, const RootedTree& tree,
                                             const ProjectionConfig& cfg = {}) {
  detail::require_size(y, tree, "dykstra_project_flow");
  cfg.validate();
  const Index n = tree.size();
  ProjectionReport report;
  report.point.assign(y.begin(), y.end());
  Vector& x = report.point;
  Vector multiplier(n, 0.0);
  Vector previous(n);
  const double change_bound = cfg.change_tol * (1.0 + sup_norm(y));

  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    previous = x;
    for (Index i = 0; i < n; ++i) {
      const auto kids = tree.children(i);
      double slack = x[i];
      for (Index c : kids) slack -= x[c];
      const double step = std::max(-multiplier[i], -slack / static_cast<double>(1 + kids.size()));
      if (step == 0.0) continue;
      multiplier[i] += step;
      x[i] += step;
      for (Index c : kids) x[c] -= step;
    }
    report.sweeps_used = sweep;
    report.max_violation = max_violation(x, tree);
    if (report.max_violation <= cfg.primal_tol && sup_distance(x, previous) <= change_bound) {
      report.converged = true;
      break;
    }
  }
  return report;
}

inline constexpr Index kExactProjectionMaxNodes = 20;

//! Exact projection by active-set enumeration. For every subset S of node
//! constraints, project y onto {a_i . x = 0, i in S} and keep the point that
//! satisfies the KKT conditions (primal feasibility and nonnegative
//! multipliers). Exponential in n; meant as a reference for small trees.
inline Vector qp_project_exact(std::span<const double> y, const RootedTree& tree) {
  detail::require_size(y, tree, "qp_project_exact");
  const Index n = tree.size();
  if (n > kExactProjectionMaxNodes)
    throw Error("qp_project_exact: tree has " + std::to_string(n) + " nodes, limit is " +
                std::to_string(kExactProjectionMaxNodes));

  // Row i is the normal of node i's constraint: e_i - sum_{c in children(i)} e_c.
  Eigen::MatrixXd normals = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Index i = 0; i < n; ++i) {
    normals(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    for (Index c : tree.children(i))
      normals(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = -1.0;
  }
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));
  const double scale = 1.0 + sup_norm(y);
  const double accept = 1e-11 * scale;

  Eigen::VectorXd best = yv;
  double best_residual = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Index> rows;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    rows.clear();
    for (Index i = 0; i < n; ++i)
      if (mask >> i & 1U) rows.push_back(static_cast<Eigen::Index>(i));

    Eigen::VectorXd x = yv;
    double dual_residual = 0.0;
    if (!rows.empty()) {
      const Eigen::MatrixXd active = normals(rows, Eigen::all);
      const Eigen::LLT<Eigen::MatrixXd> gram(active * active.transpose());
      if (gram.info() != Eigen::Success) continue;  // dependent rows
      const Eigen::VectorXd mult = gram.solve(-(active * yv));
      x += active.transpose() * mult;
      dual_residual = std::max(0.0, -mult.minCoeff());
    }
    const Eigen::VectorXd slack = normals * x;
    double primal_residual = 0.0;
    for (Index i = 0; i < n; ++i)
      if (!(mask >> i & 1U)) primal_residual = std::max(primal_residual, -slack(static_cast<Eigen::Index>(i)));
    const double residual = std::max(primal_residual, dual_residual);
    if (residual < best_residual) {
      best_residual = residual;
      best = x;
      if (residual <= accept) break;
    }
  }
  if (best_residual > 1e-6 * scale)
    throw Error("qp_project_exact: no subset satisfied the KKT conditions");
  return Vector(best.data(), best.data() + best.size());
}

}  // namespace treeflow

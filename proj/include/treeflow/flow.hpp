#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "treeflow/tree.hpp"

namespace treeflow {

// Flows and observations are plain vectors indexed by node.
using Vector = std::vector<double>;

//! Per-node leaks: flow minus the children's total. For a leaf the leak is
//! its flow. A flow is feasible exactly when all its leaks are nonnegative.
struct LeakVector {
  Vector values;

  bool operator==(const LeakVector&) const = default;
};

inline constexpr double kFeasibilityTol = 1e-9;

namespace detail {

inline void require_size(std::span<const double> x, const RootedTree& tree, const char* what) {
  if (x.size() != tree.size())
    throw Error(std::string(what) + ": length " + std::to_string(x.size()) +
                " does not match tree size " + std::to_string(tree.size()));
}

}  // namespace detail

//! Signed slack of the flow constraint at node i: x_i - sum of children.
inline double node_slack(std::span<const double> x, const RootedTree& tree, Index i) {
  double s = x[i];
  for (Index c : tree.children(i)) s -= x[c];
  return s;
}

//! Largest constraint violation max(0, -slack) over all nodes.
inline double max_violation(std::span<const double> x, const RootedTree& tree) {
  double worst = 0.0;
  for (Index i = 0; i < tree.size(); ++i) worst = std::max(worst, -node_slack(x, tree, i));
  return worst;
}

inline bool is_feasible(std::span<const double> flow, const RootedTree& tree,
                        double tol = kFeasibilityTol) {
  detail::require_size(flow, tree, "is_feasible");
  return max_violation(flow, tree) <= tol;
}

inline LeakVector flow_to_leaks(std::span<const double> flow, const RootedTree& tree,
                                double tol = kFeasibilityTol) {
  detail::require_size(flow, tree, "flow_to_leaks");
  LeakVector leaks{Vector(tree.size())};
  for (Index i = 0; i < tree.size(); ++i) {
    const double l = node_slack(flow, tree, i);
    if (l < -tol) throw Error("flow_to_leaks: flow is infeasible at node " + std::to_string(i));
    leaks.values[i] = std::max(l, 0.0);  // roundoff within tol
  }
  return leaks;
}

//! Inverse of flow_to_leaks: each node's flow is the total leak of its subtree.
inline Vector leaks_to_flow(const LeakVector& leaks, const RootedTree& tree) {
  detail::require_size(leaks.values, tree, "leaks_to_flow");
  for (Index i = 0; i < tree.size(); ++i)
    if (leaks.values[i] < 0.0) throw Error("leaks_to_flow: negative leak at node " + std::to_string(i));
  Vector flow = leaks.values;
  const auto order = tree.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    for (Index c : tree.children(*it)) flow[*it] += flow[c];
  return flow;
}

//! Test signal for risk simulations on a kite: root 1, each path starting at
//! 1/n^alpha and decreasing linearly to 0 at its last node.
inline Vector worst_case_flow(const KiteSpec& kite) {
  const Index m = kite.paths;
  const Index l = kite.path_length;
  double top = 1.0 / std::pow(static_cast<double>(kite.n), kite.alpha);
  if (static_cast<double>(m) * top > 1.0) top = 1.0 / static_cast<double>(m);
  Vector flow(kite.node_count(), 0.0);
  flow[0] = 1.0;
  for (Index j = 0; j < m; ++j) {
    for (Index pos = 1; pos <= l; ++pos) {
      const double frac =
          l == 1 ? 1.0 : static_cast<double>(l - pos) / static_cast<double>(l - 1);
      flow[kite.node(j, pos)] = top * frac;
    }
  }
  return flow;
}

// ---------------------------------------------------------------------------
// Small vector helpers shared across modules.

//! Pairwise (cascade) summation; error grows like O(log n) rather than O(n).
inline double pairwise_sum(std::span<const double> x) {
  constexpr std::size_t kBlock = 32;
  if (x.size() <= kBlock) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

inline double squared_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double sup_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

inline double sup_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s = std::max(s, std::abs(v));
  return s;
}

}  // namespace treeflow

#pragma once

// Exact Euclidean projection onto the flow cone by dynamic programming over
// subtrees.
//
// For a node v let F_v(t) be the least squared error achievable on the subtree
// of v when the flow at v is pinned to t >= 0. Then
//
//   F_v(t) = (t - y_v)^2 / 2 + min { sum_c F_c(s_c) : s_c >= 0, sum_c s_c <= t }.
//
// Every F_v is convex with a continuous, piecewise-linear derivative of slope
// >= 1. The inner minimum has derivative min(0, lambda_v(t)) where lambda_v
// inverts sum_c phi_c and phi_c(lambda) = max{s >= 0 : F_c'(s) <= lambda}.
// Only the part where derivatives are <= 0 ever matters, so each F_v' is kept
// on [0, z_v] with z_v = argmin F_v. The solution is read off top-down: the
// root takes z_root, a single child takes min(parent, z_c), and siblings share
// the common multiplier lambda = min(0, lambda_v(parent)).
//
// Cost is O(sum of knot counts), at most O(n * height).

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include "treeflow/flow.hpp"

namespace treeflow {

namespace detail {

struct Knot {
  double t;  // abscissa (flow value or accumulated flow)
  double g;  // ordinate (derivative or multiplier)
};

// Merges knots that roundoff has left without a strict increase in t or g.
// Such a segment is at most a few ulps long; keeping it would make the
// slope dt/dg infinite.
inline void merge_degenerate(std::vector<Knot>& knots) {
  if (knots.size() < 2) return;
  std::size_t out = 0;
  for (std::size_t k = 1; k < knots.size(); ++k) {
    if (knots[k].t > knots[out].t && knots[k].g > knots[out].g) {
      knots[++out] = knots[k];
    } else {
      knots[out].t = std::max(knots[out].t, knots[k].t);
      knots[out].g = std::max(knots[out].g, knots[k].g);
    }
  }
  knots.resize(out + 1);
}

// Cuts a nondecreasing piecewise-linear derivative at its zero crossing.
// Beyond the last knot the derivative continues as t - tail_offset.
inline double truncate_at_zero(std::vector<Knot>& knots, double tail_offset) {
  merge_degenerate(knots);
  std::size_t k = 0;
  while (k < knots.size() && knots[k].g < 0.0) ++k;
  if (k == 0) {
    knots.clear();
    return 0.0;
  }
  double z;
  if (k < knots.size()) {
    const Knot& a = knots[k - 1];
    const Knot& b = knots[k];
    z = a.t + (-a.g) * (b.t - a.t) / (b.g - a.g);
  } else {
    z = tail_offset;
  }
  knots.resize(k);
  if (z > knots.back().t) knots.push_back({z, 0.0});
  else knots.back() = {knots.back().t, 0.0};
  return z;
}

// Value at `x` of the piecewise-linear map through `knots` (abscissa t,
// ordinate g), flat before the first knot and after the last.
inline double interpolate_g(std::span<const Knot> knots, double x) {
  if (x <= knots.front().t) return knots.front().g;
  if (x >= knots.back().t) return knots.back().g;
  const auto it = std::upper_bound(knots.begin(), knots.end(), x,
                                   [](double v, const Knot& k) { return v < k.t; });
  const Knot& b = *it;
  const Knot& a = *(it - 1);
  return a.g + (x - a.t) * (b.g - a.g) / (b.t - a.t);
}

// phi(lambda): inverse of the stored derivative knots, 0 below the first knot.
inline double inverse_derivative(std::span<const Knot> knots, double lambda) {
  if (knots.empty() || lambda <= knots.front().g) return 0.0;
  if (lambda >= knots.back().g) return knots.back().t;
  const auto it = std::upper_bound(knots.begin(), knots.end(), lambda,
                                   [](double v, const Knot& k) { return v < k.g; });
  const Knot& b = *it;
  const Knot& a = *(it - 1);
  return a.t + (lambda - a.g) * (b.t - a.t) / (b.g - a.g);
}

}  // namespace detail

inline Vector project_flow_dp(std::span<const double> y, const RootedTree& tree) {
  using detail::Knot;
  detail::require_size(y, tree, "project_flow_dp");
  const Index n = tree.size();

  // Truncated derivative knots. Kept only for children of branching nodes;
  // along chains they are moved into the parent.
  std::vector<std::vector<Knot>> deriv(n);
  // For branching nodes: knots (sum_c phi_c(lambda), lambda), i.e. lambda_v.
  std::vector<std::vector<Knot>> pooled(n);
  Vector argmin(n, 0.0);

  std::vector<std::pair<double, double>> events;  // (lambda, slope change)
  const auto order = tree.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Index v = *it;
    const auto kids = tree.children(v);
    std::vector<Knot> knots;

    if (kids.size() == 1 && !deriv[kids[0]].empty()) {
      // G'(t) = min(0, F_c'(t)); add t - y_v.
      knots = std::move(deriv[kids[0]]);
      deriv[kids[0]].clear();
      for (Knot& k : knots) k.g += k.t - y[v];
    } else if (kids.size() > 1) {
      events.clear();
      for (Index c : kids) {
        const auto& kc = deriv[c];
        double prev_slope = 0.0;
        for (std::size_t k = 0; k + 1 < kc.size(); ++k) {
          const double slope = (kc[k + 1].t - kc[k].t) / (kc[k + 1].g - kc[k].g);
          events.emplace_back(kc[k].g, slope - prev_slope);
          prev_slope = slope;
        }
      }
      if (!events.empty()) {
        std::sort(events.begin(), events.end());
        auto& pool = pooled[v];
        double total = 0.0;
        double slope = 0.0;
        double at = events.front().first;
        for (const auto& [lambda, delta] : events) {
          if (lambda != at) {
            total += slope * (lambda - at);
            at = lambda;
          }
          if (pool.empty() || pool.back().g != lambda) {
            if (!pool.empty() && total <= pool.back().t) pool.back().g = lambda;
            else pool.push_back({total, lambda});
          }
          slope += delta;
        }
        total += slope * (0.0 - at);
        if (total > pool.back().t) pool.push_back({total, 0.0});
        else pool.back().g = 0.0;
        knots.reserve(pool.size());
        for (const Knot& p : pool) knots.push_back({p.t, p.t - y[v] + p.g});
      }
    }
    if (knots.empty()) knots.push_back({0.0, -y[v]});
    argmin[v] = detail::truncate_at_zero(knots, y[v]);
    deriv[v] = std::move(knots);
  }

  Vector x(n, 0.0);
  x[0] = argmin[0];
  for (Index v : order) {
    const auto kids = tree.children(v);
    if (kids.size() == 1) {
      x[kids[0]] = std::min(x[v], argmin[kids[0]]);
    } else if (kids.size() > 1) {
      const auto& pool = pooled[v];
      const double lambda = pool.empty() ? 0.0 : std::min(0.0, detail::interpolate_g(pool, x[v]));
      for (Index c : kids) {
        const double s = lambda >= 0.0 ? argmin[c] : detail::inverse_derivative(deriv[c], lambda);
        x[c] = std::max(0.0, std::min(s, argmin[c]));
      }
    }
  }
  return x;
}

}  // namespace treeflow

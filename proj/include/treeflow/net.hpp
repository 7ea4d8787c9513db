#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "treeflow/flow.hpp"
#include "treeflow/random.hpp"

namespace treeflow {

inline constexpr std::uint64_t kNetElementCap = 2'000'000;

//! Number of integer patterns (i_1..i_n) >= 0 with sum <= m, i.e. C(n+m, m).
//! Returns nullopt once the count exceeds `cap`.
inline std::optional<std::uint64_t> net_cardinality(Index n, Index m,
                                                    std::uint64_t cap = kNetElementCap) {
  std::uint64_t c = 1;  // C(n+k, k) for k = 0
  for (Index k = 1; k <= m; ++k) {
    // C(n+k, k) = C(n+k-1, k-1) * (n+k) / k, exact at every step.
    const auto num = static_cast<unsigned __int128>(c) * (n + k);
    c = static_cast<std::uint64_t>(num / k);
    if (c > cap) return std::nullopt;
  }
  return c;
}

//! Flows whose leaks are all multiples of V/m with at most m quanta in total.
//! Elements are stored row-major in colexicographic order of their leak
//! patterns (the first node's count varies fastest).
class MaureyNet {
 public:
  MaureyNet(RootedTree tree, double budget, Index granularity, std::vector<double> values)
      : tree_(std::move(tree)), budget_(budget), granularity_(granularity), values_(std::move(values)) {}

  const RootedTree& tree() const { return tree_; }
  double budget() const { return budget_; }
  Index granularity() const { return granularity_; }
  Index dimension() const { return tree_.size(); }
  Index size() const { return values_.size() / tree_.size(); }

  std::span<const double> element(Index k) const {
    return {values_.data() + k * dimension(), dimension()};
  }

  //! Index of the element closest to y in Euclidean norm; lowest index wins ties.
  Index nearest(std::span<const double> y) const {
    Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < size(); ++k) {
      const double d = squared_distance(y, element(k));
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  }

  double min_squared_distance(std::span<const double> y) const {
    return squared_distance(y, element(nearest(y)));
  }

  //! The guaranteed covering radius V^2 h / m, with h counted in levels.
  double radius_bound() const {
    return budget_ * budget_ * static_cast<double>(tree_.height() + 1) / static_cast<double>(granularity_);
  }

 private:
  RootedTree tree_;
  double budget_;
  Index granularity_;
  std::vector<double> values_;
};

inline MaureyNet build_maurey_net(const RootedTree& tree, double budget, Index granularity,
                                  std::uint64_t cap = kNetElementCap) {
  if (!(budget >= 0.0)) throw Error("maurey net: V must be nonnegative");
  if (granularity < 1) throw Error("maurey net: m must be at least 1");
  const Index n = tree.size();
  const auto count = net_cardinality(n, granularity, cap);
  if (!count)
    throw Error("maurey net: C(n+m, m) exceeds the enumeration cap of " + std::to_string(cap));

  const double quantum = budget / static_cast<double>(granularity);
  std::vector<double> values;
  values.reserve(*count * n);
  std::vector<Index> pattern(n, 0);
  LeakVector leaks{Vector(n, 0.0)};
  Index used = 0;
  while (true) {
    for (Index i = 0; i < n; ++i) leaks.values[i] = quantum * static_cast<double>(pattern[i]);
    const Vector flow = leaks_to_flow(leaks, tree);
    values.insert(values.end(), flow.begin(), flow.end());

    // Odometer step, first coordinate fastest, keeping the total <= m.
    Index k = 0;
    for (; k < n; ++k) {
      if (used < granularity) {
        ++pattern[k];
        ++used;
        break;
      }
      used -= pattern[k];
      pattern[k] = 0;
    }
    if (k == n) break;
  }
  return MaureyNet(tree, budget, granularity, std::move(values));
}

//! Random member of {flows with root <= V}: i.i.d. uniform leaks rescaled to a
//! uniform total in [0, V]. Every such flow has positive density.
inline Vector sample_budget_flow(const RootedTree& tree, double budget, Engine& engine) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  LeakVector leaks{Vector(tree.size())};
  double total = 0.0;
  for (double& l : leaks.values) {
    l = unit(engine);
    total += l;
  }
  const double scale = total > 0.0 ? budget * unit(engine) / total : 0.0;
  for (double& l : leaks.values) l *= scale;
  return leaks_to_flow(leaks, tree);
}

struct CoverRadiusReport {
  double max_squared_distance = 0.0;
  double bound = 0.0;
  Index samples = 0;

  bool within_bound() const { return max_squared_distance <= bound; }
};

inline CoverRadiusReport cover_radius_check(const MaureyNet& net, Index samples, std::uint64_t seed) {
  CoverRadiusReport r;
  r.bound = net.radius_bound();
  r.samples = samples;
  Engine engine = stream_engine(seed, 0);
  for (Index s = 0; s < samples; ++s) {
    const Vector flow = sample_budget_flow(net.tree(), net.budget(), engine);
    r.max_squared_distance = std::max(r.max_squared_distance, net.min_squared_distance(flow));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Piecewise-constant approximation of a nonincreasing sequence.

//! Each block starts at an anchor index and keeps the anchor's value until the
//! sequence has dropped by more than eps below it. The result is nonincreasing,
//! within eps of theta entrywise, starts at theta_1, and has at most
//! (theta_1 - theta_n) / eps + 1 distinct values.
inline Vector piecewise_approx(std::span<const double> theta, double eps) {
  if (!(eps > 0.0)) throw Error("piecewise_approx: eps must be positive");
  if (theta.empty()) throw Error("piecewise_approx: empty input");
  for (std::size_t j = 1; j < theta.size(); ++j)
    if (theta[j] > theta[j - 1]) throw Error("piecewise_approx: input is not nonincreasing");
  Vector out(theta.size());
  std::size_t anchor = 0;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    if (theta[anchor] - theta[j] > eps) anchor = j;
    out[j] = theta[anchor];
  }
  return out;
}

inline Index distinct_values(std::span<const double> x) {
  if (x.empty()) return 0;
  Index count = 1;
  for (std::size_t j = 1; j < x.size(); ++j)
    if (x[j] != x[j - 1]) ++count;
  return count;
}

}  // namespace treeflow

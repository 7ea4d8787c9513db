#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace treeflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Index = std::size_t;

// Root sentinel used in parent arrays and the tree JSON format.
inline constexpr std::int64_t kNoParent = -1;

//! Immutable rooted tree built from a parent array. Node 0 is the root.
//!
//! Children are stored in CSR form, in increasing node order. `order()` is a
//! breadth-first order starting at the root, so iterating it in reverse visits
//! every child before its parent.
class RootedTree {
 public:
  static RootedTree from_parents(std::span<const std::int64_t> parent);

  Index size() const { return parent_.size(); }
  std::int64_t parent(Index i) const { return parent_[i]; }
  std::span<const std::int64_t> parents() const { return parent_; }

  std::span<const Index> children(Index i) const {
    return {child_index_.data() + child_offset_[i], child_offset_[i + 1] - child_offset_[i]};
  }
  bool is_leaf(Index i) const { return child_offset_[i] == child_offset_[i + 1]; }

  Index depth(Index i) const { return depth_[i]; }
  Index height() const { return level_offset_.size() - 2; }

  //! Nodes at depth `d` (0 is the root alone), in breadth-first order.
  std::span<const Index> level(Index d) const {
    return {order_.data() + level_offset_[d], level_offset_[d + 1] - level_offset_[d]};
  }
  std::span<const Index> order() const { return order_; }

  bool operator==(const RootedTree& other) const { return parent_ == other.parent_; }

 private:
  std::vector<std::int64_t> parent_;
  std::vector<Index> child_offset_;
  std::vector<Index> child_index_;
  std::vector<Index> depth_;
  std::vector<Index> order_;
  std::vector<Index> level_offset_;
};

inline RootedTree RootedTree::from_parents(std::span<const std::int64_t> parent) {
  const Index n = parent.size();
  if (n == 0) throw Error("tree: parent array is empty");
  if (parent[0] != kNoParent) throw Error("tree: entry 0 must be the root sentinel -1");
  for (Index i = 1; i < n; ++i) {
    if (parent[i] == kNoParent)
      throw Error("tree: multiple roots (node " + std::to_string(i) + " has no parent)");
    if (parent[i] < 0 || static_cast<std::uint64_t>(parent[i]) >= n)
      throw Error("tree: parent index out of range at node " + std::to_string(i));
    if (static_cast<Index>(parent[i]) == i)
      throw Error("tree: cycle detected (node " + std::to_string(i) + " is its own parent)");
  }

  RootedTree t;
  t.parent_.assign(parent.begin(), parent.end());
  t.child_offset_.assign(n + 1, 0);
  for (Index i = 1; i < n; ++i) ++t.child_offset_[static_cast<Index>(parent[i]) + 1];
  for (Index i = 0; i < n; ++i) t.child_offset_[i + 1] += t.child_offset_[i];
  t.child_index_.resize(n - 1);
  std::vector<Index> fill(t.child_offset_.begin(), t.child_offset_.end() - 1);
  for (Index i = 1; i < n; ++i) t.child_index_[fill[static_cast<Index>(parent[i])]++] = i;

  // BFS from the root; anything not reached sits on a cycle.
  t.depth_.assign(n, 0);
  t.order_.reserve(n);
  t.order_.push_back(0);
  for (Index head = 0; head < t.order_.size(); ++head) {
    const Index v = t.order_[head];
    for (Index c : t.children(v)) {
      t.depth_[c] = t.depth_[v] + 1;
      t.order_.push_back(c);
    }
  }
  if (t.order_.size() != n) {
    std::vector<bool> seen(n, false);
    for (Index v : t.order_) seen[v] = true;
    const auto it = std::find(seen.begin(), seen.end(), false);
    throw Error("tree: cycle detected (node " + std::to_string(it - seen.begin()) +
                " is unreachable from the root)");
  }
  const Index h = t.depth_[t.order_.back()];
  t.level_offset_.assign(h + 2, n);
  for (Index k = n; k-- > 0;) t.level_offset_[t.depth_[t.order_[k]]] = k;
  return t;
}

inline RootedTree build_tree(std::span<const std::int64_t> parent) {
  return RootedTree::from_parents(parent);
}

inline RootedTree build_tree(std::initializer_list<std::int64_t> parent) {
  return RootedTree::from_parents(std::span<const std::int64_t>(parent.begin(), parent.size()));
}

// ---------------------------------------------------------------------------
// Kite trees: a root with `paths` children, each heading a path of
// `path_length` nodes.

struct KiteSpec {
  Index n = 0;          // requested node budget
  double alpha = 0.0;
  Index paths = 0;      // ceil(n^alpha)
  Index path_length = 0;  // ceil(n^(1-alpha))

  Index node_count() const { return paths * path_length + 1; }

  //! Node index of position `pos` (1-based) on path `path` (0-based).
  Index node(Index path, Index pos) const { return 1 + path * path_length + (pos - 1); }
};

namespace detail {

// ceil(x) that does not round 3.0000000000000004 up to 4.
inline Index robust_ceil(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<Index>(r);
  return static_cast<Index>(std::ceil(x));
}

}  // namespace detail

inline KiteSpec make_kite_spec(Index n, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("kite: alpha must lie in [0, 1]");
  if (n < 2) throw Error("kite: n must be at least 2");
  KiteSpec k;
  k.n = n;
  k.alpha = alpha;
  const double nd = static_cast<double>(n);
  k.paths = std::max<Index>(1, detail::robust_ceil(std::pow(nd, alpha)));
  k.path_length = std::max<Index>(1, detail::robust_ceil(std::pow(nd, 1.0 - alpha)));
  return k;
}

struct KiteTree {
  RootedTree tree;
  KiteSpec spec;
};

inline RootedTree kite_topology(Index paths, Index path_length) {
  std::vector<std::int64_t> parent(paths * path_length + 1);
  parent[0] = kNoParent;
  for (Index j = 0; j < paths; ++j) {
    for (Index pos = 1; pos <= path_length; ++pos) {
      const Index v = 1 + j * path_length + (pos - 1);
      parent[v] = pos == 1 ? 0 : static_cast<std::int64_t>(v - 1);
    }
  }
  return RootedTree::from_parents(parent);
}

inline KiteTree build_kite(Index n, double alpha) {
  KiteSpec spec = make_kite_spec(n, alpha);
  return {kite_topology(spec.paths, spec.path_length), spec};
}

//! Recognizes a tree laid out exactly like `kite_topology` output and returns
//! its (paths, path_length) shape. The returned spec has n = node_count - 1 and
//! alpha left at 0, since neither can be recovered from the topology alone.
inline std::optional<KiteSpec> kite_layout(const RootedTree& tree) {
  const Index n = tree.size();
  if (n < 2) return std::nullopt;
  const Index paths = tree.children(0).size();
  if (paths == 0 || (n - 1) % paths != 0) return std::nullopt;
  const Index len = (n - 1) / paths;
  std::vector<std::int64_t> expected(n);
  expected[0] = kNoParent;
  for (Index j = 0; j < paths; ++j)
    for (Index pos = 1; pos <= len; ++pos) {
      const Index v = 1 + j * len + (pos - 1);
      expected[v] = pos == 1 ? 0 : static_cast<std::int64_t>(v - 1);
    }
  if (!std::equal(expected.begin(), expected.end(), tree.parents().begin())) return std::nullopt;
  KiteSpec k;
  k.n = n - 1;
  k.paths = paths;
  k.path_length = len;
  return k;
}

}  // namespace treeflow

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "treeflow/flow_dp.hpp"
#include "treeflow/net.hpp"
#include "treeflow/projections.hpp"

namespace treeflow {

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// How estimators project onto the flow cone. `tree_dp` is exact and runs in
// O(n * height); `dykstra` is the iterative halfspace scheme.
enum class ProjectionMethod { tree_dp, dykstra };

inline ProjectionReport project_flow(std::span<const double> y, const RootedTree& tree,
                                     ProjectionMethod method, const ProjectionConfig& cfg = {}) {
  if (method == ProjectionMethod::dykstra) return dykstra_project_flow(y, tree, cfg);
  ProjectionReport report;
  report.point = project_flow_dp(y, tree);
  report.sweeps_used = 1;
  report.max_violation = max_violation(report.point, tree);
  report.converged = report.max_violation <= cfg.primal_tol;
  return report;
}

enum class EstimatorKind { lse, natural, oracle_simplex, net_lse, zero, identity };

inline std::string_view to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::lse: return "lse";
    case EstimatorKind::natural: return "natural";
    case EstimatorKind::oracle_simplex: return "oracle_simplex";
    case EstimatorKind::net_lse: return "net_lse";
    case EstimatorKind::zero: return "zero";
    case EstimatorKind::identity: return "identity";
  }
  return "?";
}

inline EstimatorKind parse_estimator_kind(std::string_view s) {
  for (auto k : {EstimatorKind::lse, EstimatorKind::natural, EstimatorKind::oracle_simplex,
                 EstimatorKind::net_lse, EstimatorKind::zero, EstimatorKind::identity})
    if (to_string(k) == s) return k;
  throw Error("unknown estimator '" + std::string(s) + "'");
}

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::lse;
  double budget = 1.0;       // root bound V (oracle_simplex, net_lse)
  Index granularity = 1;     // net granularity m (net_lse)
  ProjectionConfig projection;
  ProjectionMethod method = ProjectionMethod::tree_dp;

  void validate() const {
    projection.validate();
    if ((kind == EstimatorKind::oracle_simplex || kind == EstimatorKind::net_lse) && !(budget >= 0.0))
      throw Error("estimator: V must be nonnegative");
    if (kind == EstimatorKind::net_lse && granularity < 1)
      throw Error("estimator: net granularity must be at least 1");
  }
};

namespace detail {

inline Vector converged_point(ProjectionReport report, const char* who) {
  if (!report.converged)
    throw ConvergenceError(std::string(who) + ": projection did not converge after " +
                           std::to_string(report.sweeps_used) + " sweeps (violation " +
                           std::to_string(report.max_violation) + ")");
  return std::move(report.point);
}

inline const KiteSpec& require_kite(const RootedTree& tree, const KiteSpec& kite, const char* who) {
  const auto layout = kite_layout(tree);
  if (!layout || layout->paths != kite.paths || layout->path_length != kite.path_length)
    throw Error(std::string(who) + ": tree is not the given kite");
  return kite;
}

}  // namespace detail

//! Least squares estimator: the projection of y onto the flow cone.
inline Vector estimate_lse(std::span<const double> y, const RootedTree& tree,
                           const ProjectionConfig& cfg = {},
                           ProjectionMethod method = ProjectionMethod::tree_dp) {
  detail::require_size(y, tree, "estimate_lse");
  return detail::converged_point(project_flow(y, tree, method, cfg), "estimate_lse");
}

//! Separate isotonic fits along each kite path, root copied from y, followed
//! by a projection of the assembled vector onto the flow cone.
inline Vector estimate_natural(std::span<const double> y, const RootedTree& tree, const KiteSpec& kite,
                               const ProjectionConfig& cfg = {},
                               ProjectionMethod method = ProjectionMethod::tree_dp) {
  detail::require_size(y, tree, "estimate_natural");
  detail::require_kite(tree, kite, "estimate_natural");
  Vector assembled(y.begin(), y.end());
  for (Index j = 0; j < kite.paths; ++j) {
    const Vector fit = project_monotone_nonneg(y.subspan(kite.node(j, 1), kite.path_length));
    std::copy(fit.begin(), fit.end(), assembled.begin() + static_cast<std::ptrdiff_t>(kite.node(j, 1)));
  }
  return detail::converged_point(project_flow(assembled, tree, method, cfg), "estimate_natural");
}

//! Capped-simplex fit of every level given the root flow V, root set to V,
//! then a projection onto the flow cone.
inline Vector estimate_oracle_simplex(std::span<const double> y, const RootedTree& tree,
                                      const KiteSpec& kite, double budget,
                                      const ProjectionConfig& cfg = {},
                                      ProjectionMethod method = ProjectionMethod::tree_dp) {
  detail::require_size(y, tree, "estimate_oracle_simplex");
  detail::require_kite(tree, kite, "estimate_oracle_simplex");
  if (!(budget >= 0.0)) throw Error("estimate_oracle_simplex: V must be nonnegative");
  Vector assembled(y.size());
  assembled[0] = budget;
  Vector level(kite.paths);
  for (Index pos = 1; pos <= kite.path_length; ++pos) {
    for (Index j = 0; j < kite.paths; ++j) level[j] = y[kite.node(j, pos)];
    const Vector fit = project_simplex_cap(level, budget);
    for (Index j = 0; j < kite.paths; ++j) assembled[kite.node(j, pos)] = fit[j];
  }
  return detail::converged_point(project_flow(assembled, tree, method, cfg), "estimate_oracle_simplex");
}

//! Least squares over a finite net. Ties go to the lowest element index.
inline Vector estimate_net_lse(std::span<const double> y, const MaureyNet& net) {
  if (net.size() == 0) throw Error("estimate_net_lse: empty net");
  if (y.size() != net.dimension()) throw Error("estimate_net_lse: length mismatch");
  const auto e = net.element(net.nearest(y));
  return Vector(e.begin(), e.end());
}

inline Vector estimate_zero(std::span<const double> y, const RootedTree& tree) {
  detail::require_size(y, tree, "estimate_zero");
  return Vector(y.size(), 0.0);
}

inline Vector estimate_identity(std::span<const double> y, const RootedTree& tree) {
  detail::require_size(y, tree, "estimate_identity");
  return Vector(y.begin(), y.end());
}

//! An estimator bound to one tree. Builds whatever it needs up front (the net
//! for net_lse, the kite layout for natural and oracle_simplex) so that calls
//! are cheap, const, and safe to make from several threads.
class Estimator {
 public:
  Estimator(EstimatorSpec spec, const RootedTree& tree, std::optional<KiteSpec> kite = std::nullopt)
      : spec_(spec), tree_(&tree), kite_(kite) {
    spec_.validate();
    const bool needs_kite = spec_.kind == EstimatorKind::natural || spec_.kind == EstimatorKind::oracle_simplex;
    if (needs_kite && !kite_) kite_ = kite_layout(tree);
    if (needs_kite && !kite_)
      throw Error(std::string(to_string(spec_.kind)) + " estimator requires a kite tree");
    if (spec_.kind == EstimatorKind::net_lse)
      net_ = std::make_shared<const MaureyNet>(build_maurey_net(tree, spec_.budget, spec_.granularity));
  }

  const EstimatorSpec& spec() const { return spec_; }

  Vector operator()(std::span<const double> y) const {
    switch (spec_.kind) {
      case EstimatorKind::lse: return estimate_lse(y, *tree_, spec_.projection, spec_.method);
      case EstimatorKind::natural:
        return estimate_natural(y, *tree_, *kite_, spec_.projection, spec_.method);
      case EstimatorKind::oracle_simplex:
        return estimate_oracle_simplex(y, *tree_, *kite_, spec_.budget, spec_.projection, spec_.method);
      case EstimatorKind::net_lse: return estimate_net_lse(y, *net_);
      case EstimatorKind::zero: return estimate_zero(y, *tree_);
      case EstimatorKind::identity: return estimate_identity(y, *tree_);
    }
    throw Error("unreachable estimator kind");
  }

 private:
  EstimatorSpec spec_;
  const RootedTree* tree_;
  std::optional<KiteSpec> kite_;
  std::shared_ptr<const MaureyNet> net_;
};

}  // namespace treeflow

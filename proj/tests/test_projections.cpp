#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "treeflow/treeflow.hpp"

using namespace treeflow;

namespace {

double max_abs_diff(const Vector& a, const Vector& b) { return sup_distance(a, b); }

void expect_near_vec(const Vector& got, const Vector& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
}

}  // namespace

TEST(Pava, Examples) {
  EXPECT_EQ(pava_nonincreasing(Vector{3, 2, 1}), (Vector{3, 2, 1}));
  EXPECT_EQ(pava_nonincreasing(Vector{1, 3}), (Vector{2, 2}));
  expect_near_vec(pava_nonincreasing(Vector{1, 2, 3}), {2, 2, 2}, 1e-15);
  expect_near_vec(pava_nonincreasing(Vector{4, 1, 2, 0}), {4, 1.5, 1.5, 0}, 1e-15);
  expect_near_vec(pava_nonincreasing(Vector{0, 5, 1}), {2.5, 2.5, 1}, 1e-15);
  EXPECT_THROW(pava_nonincreasing(Vector{}), Error);
  EXPECT_THROW(project_monotone_nonneg(Vector{}), Error);
}

TEST(MonotoneNonneg, Examples) {
  EXPECT_EQ(project_monotone_nonneg(Vector{-1, -2}), (Vector{0, 0}));
  expect_near_vec(project_monotone_nonneg(Vector{1, -3}), {1, 0}, 1e-15);
  expect_near_vec(project_monotone_nonneg(Vector{-1, 3}), {1, 1}, 1e-15);
}

TEST(MonotoneNonneg, MatchesOracle) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 300; ++rep) {
    const Vector y = oracle::gaussian_vector(1 + rng() % 9, rng);
    expect_near_vec(pava_nonincreasing(y), oracle::brute_force_monotone(y, false), 1e-9);
    expect_near_vec(project_monotone_nonneg(y), oracle::brute_force_monotone(y, true), 1e-9);
  }
}

TEST(SimplexCap, Examples) {
  expect_near_vec(project_simplex_cap(Vector{0.2, 0.3}, 1.0), {0.2, 0.3}, 0);
  expect_near_vec(project_simplex_cap(Vector{2, 0}, 1.0), {1, 0}, 1e-15);
  expect_near_vec(project_simplex_cap(Vector{1, 1}, 1.0), {0.5, 0.5}, 1e-15);
  expect_near_vec(project_simplex_cap(Vector{-1, 0.5}, 1.0), {0, 0.5}, 0);
  EXPECT_EQ(project_simplex_cap(Vector{3, 4}, 0.0), (Vector{0, 0}));
  EXPECT_THROW(project_simplex_cap(Vector{1}, -1.0), Error);
}

TEST(SimplexCap, MatchesOracle) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> cap(0.0, 3.0);
  for (int rep = 0; rep < 300; ++rep) {
    const Vector y = oracle::gaussian_vector(1 + rng() % 8, rng, 1.5);
    const double c = cap(rng);
    const Vector got = project_simplex_cap(y, c);
    expect_near_vec(got, oracle::brute_force_simplex_cap(y, c), 1e-9);
    double total = 0.0;
    for (double v : got) {
      EXPECT_GE(v, 0.0);
      total += v;
    }
    EXPECT_LE(total, c + 1e-12);
  }
}

TEST(Halfspace, SingleNode) {
  const RootedTree t = build_tree({-1, 0, 0});
  // slack = 0 - (1 + 1) = -2, degree 2: step 2/3 on the parent, -2/3 on children.
  expect_near_vec(project_halfspace_node(Vector{0, 1, 1}, t, 0), {2.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-15);
  EXPECT_EQ(project_halfspace_node(Vector{3, 1, 1}, t, 0), (Vector{3, 1, 1}));
  // Leaf constraint x >= 0.
  expect_near_vec(project_halfspace_node(Vector{3, -1, 1}, t, 1), {3, 0, 1}, 0);
}

TEST(Dykstra, Examples) {
  const RootedTree star = build_tree({-1, 0, 0});
  const ProjectionReport r = dykstra_project_flow(Vector{0, 1, 1}, star);
  EXPECT_TRUE(r.converged);
  expect_near_vec(r.point, {2.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-8);

  const Vector feasible = {6, 3, 2, 1, 2, 2, 0, 0.5, 1.0 / 3.0};
  const RootedTree fig = build_tree({-1, 0, 0, 1, 1, 2, 2, 3, 3});
  const ProjectionReport same = dykstra_project_flow(feasible, fig);
  EXPECT_TRUE(same.converged);
  expect_near_vec(same.point, feasible, 1e-12);

  const ProjectionReport neg = dykstra_project_flow(Vector{-1, -1, -1}, star);
  expect_near_vec(neg.point, {0, 0, 0}, 1e-8);
}

TEST(Dykstra, ReportsNonConvergence) {
  std::mt19937_64 rng(8);
  const KiteTree k = build_kite(400, 0.5);
  const Vector y = oracle::gaussian_vector(k.tree.size(), rng);
  ProjectionConfig cfg;
  cfg.max_sweeps = 2;
  const ProjectionReport r = dykstra_project_flow(y, k.tree, cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.sweeps_used, 2);

  cfg.max_sweeps = 0;
  EXPECT_THROW(dykstra_project_flow(y, k.tree, cfg), Error);
}

TEST(ExactProjection, Examples) {
  const RootedTree star = build_tree({-1, 0, 0});
  expect_near_vec(qp_project_exact(Vector{0, 1, 1}, star), {2.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-12);
  const RootedTree single = build_tree({-1});
  EXPECT_EQ(qp_project_exact(Vector{-2}, single), (Vector{0}));
  EXPECT_EQ(qp_project_exact(Vector{2}, single), (Vector{2}));
  EXPECT_THROW(qp_project_exact(Vector(21, 0.0), build_kite(20, 1.0).tree), Error);
}

TEST(ExactProjection, MatchesGenericOracle) {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 200; ++rep) {
    const RootedTree t = oracle::random_tree(1 + rng() % 8, rng);
    const Vector y = oracle::gaussian_vector(t.size(), rng);
    expect_near_vec(qp_project_exact(y, t), oracle::brute_force_flow_projection(t, y), 1e-9);
  }
}

TEST(TreeDp, Examples) {
  expect_near_vec(project_flow_dp(Vector{0, 1, 1}, build_tree({-1, 0, 0})), {2.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-14);
  // Path 0-1: violation x1 > x0 averages the pair.
  expect_near_vec(project_flow_dp(Vector{0, 2}, build_tree({-1, 0})), {1, 1}, 1e-14);
  expect_near_vec(project_flow_dp(Vector{-3, -1, 2}, build_tree({-1, 0, 1})), {0, 0, 0}, 1e-14);
  EXPECT_EQ(project_flow_dp(Vector{5}, build_tree({-1})), (Vector{5}));
}

TEST(TreeDp, MatchesExactOnRandomTrees) {
  std::mt19937_64 rng(10);
  for (int rep = 0; rep < 1000; ++rep) {
    const RootedTree t = oracle::random_tree(1 + rng() % 12, rng);
    Vector y = oracle::gaussian_vector(t.size(), rng);
    if (rep % 3 == 0)
      for (double& v : y) v += 1.0;
    const double diff = max_abs_diff(project_flow_dp(y, t), qp_project_exact(y, t));
    EXPECT_LE(diff, 1e-10) << "rep " << rep;
  }
}

TEST(TreeDp, RepeatedValuesAlongPaths) {
  // Path-wise isotonic fits produce long runs of equal values; roundoff there
  // used to leave zero-width knots behind.
  const Vector y = {-0.4370086280358636, 2.7537729193388385, 0.45284970700684396, 0.45284970700684396,
                    0.45284970700684396, 0.45284970700684396, 0.45284970700684396, 0,
                    1.513489817846821,   0.71313866099582335, 0.10302152351389834, 0.10302152351389834,
                    0.10302152351389834, 0.10302152351389834, 0.10302152351389834};
  const RootedTree t = kite_topology(2, 7);
  EXPECT_LE(max_abs_diff(project_flow_dp(y, t), qp_project_exact(y, t)), 1e-10);

  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 300; ++rep) {
    const KiteTree k = build_kite(2 + rng() % 17, static_cast<double>(rng() % 5) / 4.0);
    if (k.tree.size() > 14) continue;
    const Vector z = oracle::gaussian_vector(k.tree.size(), rng);
    Vector w = z;
    for (Index j = 0; j < k.spec.paths; ++j) {
      const Vector fit = project_monotone_nonneg(std::span<const double>(z).subspan(k.spec.node(j, 1), k.spec.path_length));
      std::copy(fit.begin(), fit.end(), w.begin() + static_cast<std::ptrdiff_t>(k.spec.node(j, 1)));
    }
    EXPECT_LE(max_abs_diff(project_flow_dp(w, k.tree), qp_project_exact(w, k.tree)), 1e-10) << "rep " << rep;
  }
  for (int rep = 0; rep < 2000; ++rep) {
    const RootedTree r = oracle::random_tree(1 + rng() % 10, rng);
    Vector v(r.size());
    for (double& x : v) x = 0.25 * static_cast<double>(static_cast<int>(rng() % 6) - 1);
    EXPECT_LE(max_abs_diff(project_flow_dp(v, r), qp_project_exact(v, r)), 1e-10) << "rep " << rep;
  }
}

TEST(TreeDp, MatchesDykstraOnLargerTrees) {
  std::mt19937_64 rng(12);
  ProjectionConfig cfg;
  cfg.max_sweeps = 200000;
  cfg.primal_tol = 1e-12;
  cfg.change_tol = 1e-14;
  for (int rep = 0; rep < 10; ++rep) {
    const RootedTree t = oracle::random_tree(60 + rng() % 60, rng);
    const Vector y = oracle::gaussian_vector(t.size(), rng);
    const ProjectionReport d = dykstra_project_flow(y, t, cfg);
    ASSERT_TRUE(d.converged);
    EXPECT_LE(max_abs_diff(project_flow_dp(y, t), d.point), 1e-7);
  }
}

TEST(FlowProjection, ConeProperties) {
  // Independent characterisations of the projection onto a closed convex
  // cone: feasibility, <y - p, p> = 0, <y - p, x> <= 0 for every feasible x,
  // |p|^2 + |y - p|^2 = |y|^2, positive homogeneity and nonexpansiveness.
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 300; ++rep) {
    const RootedTree t = oracle::random_tree(1 + rng() % 50, rng);
    const Vector y = oracle::gaussian_vector(t.size(), rng);
    const Vector p = project_flow_dp(y, t);
    ASSERT_TRUE(is_feasible(p, t, 1e-10));

    Vector r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] - p[i];
    const double scale = 1.0 + squared_norm(y);
    EXPECT_NEAR(dot(r, p), 0.0, 1e-10 * scale);
    EXPECT_NEAR(squared_norm(p) + squared_norm(r), squared_norm(y), 1e-10 * scale);
    for (int k = 0; k < 5; ++k) EXPECT_LE(dot(r, oracle::random_feasible_flow(t, rng)), 1e-9 * scale);

    Vector y3 = y;
    for (double& v : y3) v *= 3.0;
    EXPECT_LE(max_abs_diff(project_flow_dp(y3, t), [&] {
                Vector q = p;
                for (double& v : q) v *= 3.0;
                return q;
              }()),
              1e-10 * (1.0 + sup_norm(y3)));

    const Vector y2 = oracle::gaussian_vector(t.size(), rng);
    const Vector p2 = project_flow_dp(y2, t);
    EXPECT_LE(squared_distance(p, p2), squared_distance(y, y2) * (1 + 1e-10) + 1e-12);
  }
}

TEST(FlowProjection, FeasibleInputIsFixed) {
  std::mt19937_64 rng(14);
  for (int rep = 0; rep < 100; ++rep) {
    const RootedTree t = oracle::random_tree(1 + rng() % 40, rng);
    const Vector mu = oracle::random_feasible_flow(t, rng);
    EXPECT_LE(max_abs_diff(project_flow_dp(mu, t), mu), 1e-10 * (1.0 + mu[0]));
  }
}

TEST(FlowProjection, PathTreeIsMonotoneRegression) {
  // On a path the flow cone is the nonnegative nonincreasing cone.
  std::mt19937_64 rng(15);
  for (int rep = 0; rep < 100; ++rep) {
    const KiteTree path = build_kite(2 + rng() % 30, 0.0);
    const Vector y = oracle::gaussian_vector(path.tree.size(), rng);
    EXPECT_LE(max_abs_diff(project_flow_dp(y, path.tree), project_monotone_nonneg(y)), 1e-12);
  }
}

TEST(FlowProjection, DispatchAndLarge) {
  const KiteTree k = build_kite(20000, 0.5);
  std::mt19937_64 rng(16);
  const Vector y = oracle::gaussian_vector(k.tree.size(), rng);
  const ProjectionReport r = project_flow(y, k.tree, ProjectionMethod::tree_dp);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.max_violation, 1e-9);
  EXPECT_THROW(project_flow(Vector(3, 0.0), k.tree, ProjectionMethod::tree_dp), Error);
}

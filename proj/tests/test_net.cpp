#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "test_support.hpp"
#include "treeflow/treeflow.hpp"

using namespace treeflow;

namespace {

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST(Net, Cardinality) {
  EXPECT_EQ(net_cardinality(1, 1), 2u);
  EXPECT_EQ(net_cardinality(2, 1), 3u);
  EXPECT_EQ(net_cardinality(5, 3), 56u);
  EXPECT_FALSE(net_cardinality(200, 200).has_value());
  EXPECT_EQ(build_maurey_net(build_tree({-1}), 1.0, 1).size(), 2u);
}

TEST(Net, TwoNodeElements) {
  const MaureyNet net = build_maurey_net(build_tree({-1, 0}), 1.0, 1);
  ASSERT_EQ(net.size(), 3u);
  const Vector e0(net.element(0).begin(), net.element(0).end());
  const Vector e1(net.element(1).begin(), net.element(1).end());
  const Vector e2(net.element(2).begin(), net.element(2).end());
  EXPECT_EQ(e0, (Vector{0, 0}));
  EXPECT_EQ(e1, (Vector{1, 0}));
  EXPECT_EQ(e2, (Vector{1, 1}));
}

TEST(Net, ElementsDistinctFeasibleAndBudgeted) {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 30; ++rep) {
    const RootedTree t = oracle::random_tree(1 + rng() % 6, rng);
    const Index m = 1 + rng() % 4;
    const double V = 0.5 + static_cast<double>(rng() % 4);
    const MaureyNet net = build_maurey_net(t, V, m);
    EXPECT_EQ(net.size(), binomial(t.size() + m, m));
    std::set<Vector> seen;
    for (Index k = 0; k < net.size(); ++k) {
      const Vector e(net.element(k).begin(), net.element(k).end());
      EXPECT_TRUE(is_feasible(e, t, 1e-12));
      EXPECT_LE(e[0], V * (1 + 1e-12));
      seen.insert(e);
    }
    EXPECT_EQ(seen.size(), net.size());
  }
}

TEST(Net, CapAndArguments) {
  EXPECT_THROW(build_maurey_net(build_kite(30, 0.5).tree, 1.0, 10), Error);
  EXPECT_THROW(build_maurey_net(build_tree({-1}), 1.0, 0), Error);
  EXPECT_THROW(build_maurey_net(build_tree({-1}), -1.0, 1), Error);
}

TEST(Net, RadiusBoundHolds) {
  std::mt19937_64 rng(32);
  for (int rep = 0; rep < 20; ++rep) {
    const RootedTree t = oracle::random_tree(1 + rng() % 8, rng);
    const MaureyNet net = build_maurey_net(t, 1.0 + static_cast<double>(rep % 3), 1 + rng() % 4);
    const CoverRadiusReport r = cover_radius_check(net, 200, static_cast<std::uint64_t>(rep));
    EXPECT_TRUE(r.within_bound()) << r.max_squared_distance << " > " << r.bound;
    EXPECT_EQ(r.samples, 200u);
  }
}

TEST(Net, NearestIsArgmin) {
  std::mt19937_64 rng(33);
  const RootedTree t = oracle::random_tree(5, rng);
  const MaureyNet net = build_maurey_net(t, 2.0, 3);
  for (int rep = 0; rep < 50; ++rep) {
    const Vector y = oracle::gaussian_vector(t.size(), rng);
    double best = INFINITY;
    for (Index k = 0; k < net.size(); ++k) best = std::min(best, squared_distance(net.element(k), y));
    EXPECT_EQ(net.min_squared_distance(y), best);
  }
}

TEST(PiecewiseApprox, Examples) {
  EXPECT_EQ(piecewise_approx(Vector{1, 0.5, 0}, 0.6), (Vector{1, 1, 0}));
  EXPECT_EQ(piecewise_approx(Vector{1, 0.5, 0}, 0.4), (Vector{1, 0.5, 0}));
  EXPECT_EQ(piecewise_approx(Vector{2, 2, 2}, 0.1), (Vector{2, 2, 2}));
  EXPECT_THROW(piecewise_approx(Vector{0, 1}, 0.5), Error);
  EXPECT_THROW(piecewise_approx(Vector{1}, 0.0), Error);
  EXPECT_THROW(piecewise_approx(Vector{}, 0.5), Error);
}

TEST(PiecewiseApprox, LinearSequenceCount) {
  for (Index n : {10, 100, 1000})
    for (double eps : {0.5, 0.1, 0.03}) {
      Vector theta(n);
      for (Index j = 0; j < n; ++j) theta[j] = 1.0 - static_cast<double>(j) / static_cast<double>(n - 1);
      EXPECT_LE(static_cast<double>(distinct_values(piecewise_approx(theta, eps))), 1.0 / eps + 1.0);
    }
}

TEST(PiecewiseApprox, Guarantees) {
  std::mt19937_64 rng(34);
  std::exponential_distribution<double> drop(3.0);
  std::uniform_real_distribution<double> eps_dist(0.01, 1.0);
  for (int rep = 0; rep < 300; ++rep) {
    Vector theta(1 + rng() % 60);
    theta[0] = 2.0;
    for (std::size_t j = 1; j < theta.size(); ++j) theta[j] = theta[j - 1] - (rng() % 3 == 0 ? 0.0 : drop(rng));
    const double eps = eps_dist(rng);
    const Vector a = piecewise_approx(theta, eps);
    for (std::size_t j = 0; j < a.size(); ++j) EXPECT_LE(std::abs(a[j] - theta[j]), eps);
    for (std::size_t j = 1; j < a.size(); ++j) EXPECT_LE(a[j], a[j - 1]);
    EXPECT_LE(a[0], theta[0]);
    EXPECT_LE(squared_distance(a, theta), static_cast<double>(a.size()) * eps * eps);
    EXPECT_LE(static_cast<double>(distinct_values(a)), (theta.front() - theta.back()) / eps + 1.0);
  }
}

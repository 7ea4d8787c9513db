#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "treeflow/estimators.hpp"
#include "treeflow/random.hpp"

namespace treeflow {

struct NoiseModel {
  double sigma = 1.0;
  std::uint64_t seed = 0;
};

//! y = mu + sigma * z, z drawn from the trial's own stream in node order.
inline Vector gen_observation(std::span<const double> mu, const NoiseModel& noise, std::uint64_t trial) {
  if (!(noise.sigma >= 0.0)) throw Error("gen_observation: sigma must be nonnegative");
  Vector y(mu.size());
  Engine engine = stream_engine(noise.seed, trial);
  fill_standard_normal(y, engine);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = mu[i] + noise.sigma * y[i];
  return y;
}

// ---------------------------------------------------------------------------
// Workers

//! Worker count from TREEFLOW_THREADS, else the hardware concurrency.
inline unsigned worker_count_from_env() {
  if (const char* env = std::getenv("TREEFLOW_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    throw Error("TREEFLOW_THREADS must be a positive integer");
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

//! Runs fn(i) for i in [0, count) on up to `workers` threads. The first
//! exception thrown by any call is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Risk simulation

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  Index trials = 0;
};

//! Mean and standard error (sample sd / sqrt(T)) using pairwise sums.
inline MeanEstimate summarize(std::span<const double> samples) {
  MeanEstimate e;
  e.trials = samples.size();
  if (samples.empty()) return e;
  const double t = static_cast<double>(samples.size());
  e.mean = pairwise_sum(samples) / t;
  if (samples.size() > 1) {
    Vector dev(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) dev[i] = (samples[i] - e.mean) * (samples[i] - e.mean);
    e.std_error = std::sqrt(pairwise_sum(dev) / (t - 1.0) / t);
  }
  return e;
}

struct RiskEstimate {
  double mean_sse = 0.0;
  double stderr_sse = 0.0;
  Index trials = 0;    // trials that contributed
  Index excluded = 0;  // trials dropped for non-convergence
};

//! Monte-Carlo risk of `estimator` at `mu`: mean and standard error of the
//! squared error over independent trials. Trials whose projection fails to
//! converge are excluded; more than 1% excluded is an error.
inline RiskEstimate simulate_risk(std::span<const double> mu, const Estimator& estimator,
                                  const NoiseModel& noise, Index trials, unsigned workers = 1) {
  if (trials < 2) throw Error("simulate_risk: need at least 2 trials");
  constexpr double kExcluded = std::numeric_limits<double>::quiet_NaN();
  Vector sse(trials);
  parallel_for(trials, workers, [&](std::size_t t) {
    const Vector y = gen_observation(mu, noise, t);
    try {
      sse[t] = squared_distance(estimator(y), mu);
    } catch (const ConvergenceError&) {
      sse[t] = kExcluded;
    }
  });
  Vector kept;
  kept.reserve(trials);
  for (double v : sse)
    if (!std::isnan(v)) kept.push_back(v);
  RiskEstimate r;
  r.excluded = trials - kept.size();
  if (r.excluded * 100 > trials)
    throw ConvergenceError("simulate_risk: " + std::to_string(r.excluded) + " of " + std::to_string(trials) +
                           " trials failed to converge (limit 1%)");
  const MeanEstimate m = summarize(kept);
  r.mean_sse = m.mean;
  r.stderr_sse = m.std_error;
  r.trials = m.trials;
  return r;
}

// ---------------------------------------------------------------------------
// Exponent fits

struct ExponentFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
};

//! Ordinary least squares of log(value) on log(size).
inline ExponentFit fit_exponent(std::span<const double> sizes, std::span<const double> values) {
  if (sizes.size() != values.size()) throw Error("fit_exponent: length mismatch");
  if (sizes.size() < 3) throw Error("fit_exponent: need at least 3 points");
  const std::size_t k = sizes.size();
  Vector lx(k), ly(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(sizes[i] > 0.0) || !(values[i] > 0.0)) throw Error("fit_exponent: values must be positive");
    lx[i] = std::log(sizes[i]);
    ly[i] = std::log(values[i]);
  }
  const double mx = pairwise_sum(lx) / static_cast<double>(k);
  const double my = pairwise_sum(ly) / static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw Error("fit_exponent: sizes must not all be equal");
  ExponentFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double r = ly[i] - fit.intercept - fit.slope * lx[i];
    rss += r * r;
  }
  fit.slope_stderr = k > 2 ? std::sqrt(rss / static_cast<double>(k - 2) / sxx) : 0.0;
  return fit;
}

struct RiskPoint {
  Index n = 0;  // actual node count
  double mean_sse = 0.0;
  double stderr_sse = 0.0;
  Index trials = 0;
};

struct RiskCurve {
  double alpha = 0.0;
  std::string estimator;
  std::vector<RiskPoint> points;
  ExponentFit fit;
};

inline ExponentFit fit_exponent(std::span<const RiskPoint> points) {
  Vector sizes, values;
  for (const RiskPoint& p : points) {
    sizes.push_back(static_cast<double>(p.n));
    values.push_back(p.mean_sse);
  }
  return fit_exponent(sizes, values);
}

// ---------------------------------------------------------------------------
// Statistical dimension

//! Monte-Carlo estimate of E |P(Z)|^2 for Z ~ N(0, I_dim), where `project`
//! maps a vector to its projection onto the cone.
template <typename Projector>
MeanEstimate estimate_statdim(Index dim, Projector&& project, Index trials, std::uint64_t seed,
                              unsigned workers = 1) {
  if (trials < 2) throw Error("statdim: need at least 2 trials");
  if (dim == 0) throw Error("statdim: dimension must be positive");
  Vector sq(trials);
  parallel_for(trials, workers, [&](std::size_t t) {
    Vector z(dim);
    Engine engine = stream_engine(seed, t);
    fill_standard_normal(z, engine);
    sq[t] = squared_norm(project(std::span<const double>(z)));
  });
  return summarize(sq);
}

inline MeanEstimate statdim_flow_cone(const RootedTree& tree, Index trials, std::uint64_t seed,
                                      unsigned workers = 1,
                                      ProjectionMethod method = ProjectionMethod::tree_dp,
                                      const ProjectionConfig& cfg = {}) {
  return estimate_statdim(
      tree.size(),
      [&](std::span<const double> z) {
        ProjectionReport r = project_flow(z, tree, method, cfg);
        if (!r.converged) throw ConvergenceError("statdim_flow_cone: projection did not converge");
        return std::move(r.point);
      },
      trials, seed, workers);
}

//! Cone of nonincreasing sequences in R^d (no sign constraint).
inline MeanEstimate statdim_monotone(Index d, Index trials, std::uint64_t seed, unsigned workers = 1) {
  return estimate_statdim(d, [](std::span<const double> z) { return pava_nonincreasing(z); }, trials, seed,
                          workers);
}

}  // namespace treeflow

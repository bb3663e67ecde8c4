#include "sgdlb/engine.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <span>
#include <thread>
#include <utility>

#include "sgdlb/error.h"
#include "sgdlb/rng.h"

namespace sgdlb {

MonteCarloDivergenceError::MonteCarloDivergenceError(
    std::vector<DivergenceError> failures)
    : Error([&] {
        std::string msg = "SGD diverged in " +
                          std::to_string(failures.size()) + " trial(s):";
        for (const auto& f : failures) {
          msg += " " + std::to_string(f.trial()) + "@k=" +
                 std::to_string(f.iteration());
        }
        return msg;
      }()),
      failures_(std::move(failures)) {}

namespace {

// Trials per aggregation block. Fixed so that the reduction tree, and hence
// every rounding step, is independent of the thread count.
constexpr std::size_t kBlockSize = 64;

void ValidateConfig(const FiniteSumProblem& problem, const RunConfig& config,
                    const Vector& theta_dagger) {
  if (!(config.eta > 0.0) || !std::isfinite(config.eta)) {
    throw UsageError("step-size must be positive and finite");
  }
  if (config.iterations < 1) throw UsageError("iteration count must be >= 1");
  if (config.trials < 1) throw UsageError("trial count must be >= 1");
  const auto d = static_cast<Eigen::Index>(problem.dimension());
  if (config.theta0.size() != d) {
    throw UsageError("theta0 has dimension " +
                     std::to_string(config.theta0.size()) + ", expected " +
                     std::to_string(d));
  }
  if (theta_dagger.size() != d) {
    throw UsageError("theta_dagger has the wrong dimension");
  }
  if (!config.theta0.allFinite()) throw UsageError("theta0 must be finite");
}

// Streaming mean / sum of squared deviations per iteration index.
struct Moments {
  std::size_t count = 0;
  std::vector<double> mean;
  std::vector<double> m2;

  explicit Moments(std::size_t length) : mean(length, 0.0), m2(length, 0.0) {}

  void Add(std::span<const double> sample) {
    ++count;
    const double n = static_cast<double>(count);
    for (std::size_t k = 0; k < sample.size(); ++k) {
      const double delta = sample[k] - mean[k];
      mean[k] += delta / n;
      m2[k] += delta * (sample[k] - mean[k]);
    }
  }

  // Chan et al. parallel combination.
  static Moments Merge(Moments a, const Moments& b) {
    if (b.count == 0) return a;
    if (a.count == 0) return b;
    const double na = static_cast<double>(a.count);
    const double nb = static_cast<double>(b.count);
    const double n = na + nb;
    for (std::size_t k = 0; k < a.mean.size(); ++k) {
      const double delta = b.mean[k] - a.mean[k];
      a.mean[k] += delta * (nb / n);
      a.m2[k] += b.m2[k] + delta * delta * (na * nb / n);
    }
    a.count += b.count;
    return a;
  }
};

Moments PairwiseMerge(std::vector<Moments>& blocks, std::size_t lo,
                      std::size_t hi) {
  if (hi - lo == 1) return std::move(blocks[lo]);
  const std::size_t mid = lo + (hi - lo) / 2;
  return Moments::Merge(PairwiseMerge(blocks, lo, mid),
                        PairwiseMerge(blocks, mid, hi));
}

void RunTrialInto(const FiniteSumProblem& problem, const RunConfig& config,
                  const Vector& theta_dagger, std::size_t trial_index,
                  std::span<double> distances,
                  std::span<const std::size_t> snapshot_iters,
                  std::vector<ThetaSnapshot>* snapshots) {
  const std::size_t J = problem.num_components();
  Rng rng(DeriveStreamSeed(config.seed, trial_index));
  Vector theta = config.theta0;
  Vector grad(theta.size());
  auto next_snapshot = snapshot_iters.begin();

  auto record = [&](std::size_t k) {
    distances[k] = (theta - theta_dagger).squaredNorm();
    if (snapshots != nullptr && next_snapshot != snapshot_iters.end() &&
        *next_snapshot == k) {
      snapshots->push_back({trial_index, k, theta});
      ++next_snapshot;
    }
  };

  record(0);
  for (std::size_t k = 1; k <= config.iterations; ++k) {
    const std::size_t gamma = rng.UniformIndex(J);
    problem.ComponentGradientInto(gamma, theta, grad);
    theta.noalias() -= config.eta * grad;
    if (!theta.allFinite()) throw DivergenceError(trial_index, k);
    record(k);
  }
}

std::vector<std::size_t> SortedSnapshotIters(const RunConfig& config) {
  std::vector<std::size_t> iters;
  for (std::size_t k : config.snapshot_iterations) {
    if (k <= config.iterations) iters.push_back(k);
  }
  std::sort(iters.begin(), iters.end());
  iters.erase(std::unique(iters.begin(), iters.end()), iters.end());
  return iters;
}

}  // namespace

Vector SgdStep(const FiniteSumProblem& problem, const Vector& theta,
               double eta, std::size_t gamma) {
  if (!(eta > 0.0)) throw UsageError("step-size must be positive");
  Vector next = theta - eta * problem.GradComponent(gamma, theta);
  if (!next.allFinite()) throw DivergenceError(0, 0);
  return next;
}

Vector Variation(const FiniteSumProblem& problem, const Vector& theta,
                 std::size_t gamma) {
  return problem.GradFull(theta) - problem.GradComponent(gamma, theta);
}

std::vector<double> RunTrial(const FiniteSumProblem& problem,
                             const RunConfig& config,
                             const Vector& theta_dagger,
                             std::size_t trial_index,
                             std::vector<ThetaSnapshot>* snapshots) {
  ValidateConfig(problem, config, theta_dagger);
  std::vector<double> distances(config.iterations + 1);
  const auto iters = SortedSnapshotIters(config);
  RunTrialInto(problem, config, theta_dagger, trial_index, distances, iters,
               snapshots);
  return distances;
}

MonteCarloResult MonteCarloError(const FiniteSumProblem& problem,
                                 const RunConfig& config,
                                 const Vector& theta_dagger) {
  ValidateConfig(problem, config, theta_dagger);
  const std::size_t length = config.iterations + 1;
  const std::size_t num_blocks = (config.trials + kBlockSize - 1) / kBlockSize;
  const auto snapshot_iters = SortedSnapshotIters(config);
  const bool want_snapshots = !snapshot_iters.empty();

  std::vector<Moments> blocks(num_blocks, Moments(0));
  std::vector<std::vector<ThetaSnapshot>> block_snapshots(num_blocks);
  std::vector<std::vector<DivergenceError>> block_failures(num_blocks);

  auto run_block = [&](std::size_t b) {
    Moments moments(length);
    std::vector<double> distances(length);
    const std::size_t first = b * kBlockSize;
    const std::size_t last = std::min(config.trials, first + kBlockSize);
    for (std::size_t t = first; t < last; ++t) {
      std::vector<ThetaSnapshot> trial_snaps;
      try {
        RunTrialInto(problem, config, theta_dagger, t, distances,
                     snapshot_iters, want_snapshots ? &trial_snaps : nullptr);
      } catch (const DivergenceError& e) {
        block_failures[b].push_back(e);
        continue;
      }
      moments.Add(distances);
      for (auto& s : trial_snaps) block_snapshots[b].push_back(std::move(s));
    }
    blocks[b] = std::move(moments);
  };

  std::size_t workers = config.threads;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, num_blocks);
  if (workers <= 1) {
    for (std::size_t b = 0; b < num_blocks; ++b) run_block(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t b = next.fetch_add(1); b < num_blocks;
             b = next.fetch_add(1)) {
          run_block(b);
        }
      });
    }
  }

  std::vector<DivergenceError> failures;
  for (auto& f : block_failures) {
    failures.insert(failures.end(), f.begin(), f.end());
  }
  if (!failures.empty()) throw MonteCarloDivergenceError(std::move(failures));

  Moments total = PairwiseMerge(blocks, 0, num_blocks);

  MonteCarloResult result;
  ErrorSeries& s = result.series;
  s.exact = false;
  s.eta = config.eta;
  s.trials = config.trials;
  s.seed = config.seed;
  s.problem_id = problem.name();
  s.r_hat = std::move(total.mean);
  s.std_err.assign(length, 0.0);
  if (config.trials < 2) {
    s.degenerate_sample = true;
  } else {
    const double m = static_cast<double>(config.trials);
    for (std::size_t k = 0; k < length; ++k) {
      const double variance = std::max(0.0, total.m2[k] / (m - 1.0));
      s.std_err[k] = std::sqrt(variance / m);
    }
  }
  for (auto& snaps : block_snapshots) {
    for (auto& snap : snaps) result.snapshots.push_back(std::move(snap));
  }
  return result;
}

ErrorSeries ExactError(const FiniteSumProblem& problem,
                       const Vector& theta_dagger, double eta,
                       const Vector& theta0, std::size_t k_max) {
  if (!(eta > 0.0)) throw UsageError("step-size must be positive");
  const std::size_t J = problem.num_components();
  const auto d = static_cast<Eigen::Index>(problem.dimension());
  if (theta0.size() != d || theta_dagger.size() != d) {
    throw UsageError("theta0/theta_dagger dimension mismatch");
  }
  const double paths =
      std::pow(static_cast<double>(J), static_cast<double>(k_max));
  if (paths > kEnumerationGuard) {
    throw UsageError("path enumeration needs " + std::to_string(J) + "^" +
                     std::to_string(k_max) +
                     " > 1e7 paths; use the quadratic oracle instead");
  }

  std::vector<double> sums(k_max + 1, 0.0);
  // One iterate buffer per depth; the DFS never allocates.
  std::vector<Vector> stack(k_max + 1, Vector(d));
  Vector grad(d);
  stack[0] = theta0;

  auto visit = [&](auto&& self, std::size_t depth) -> void {
    sums[depth] += (stack[depth] - theta_dagger).squaredNorm();
    if (depth == k_max) return;
    for (std::size_t j = 0; j < J; ++j) {
      problem.ComponentGradientInto(j, stack[depth], grad);
      stack[depth + 1] = stack[depth] - eta * grad;
      if (!stack[depth + 1].allFinite()) throw DivergenceError(0, depth + 1);
      self(self, depth + 1);
    }
  };
  visit(visit, 0);

  ErrorSeries s;
  s.exact = true;
  s.eta = eta;
  s.problem_id = problem.name();
  s.r_hat.resize(k_max + 1);
  s.std_err.assign(k_max + 1, 0.0);
  double weight = 1.0;
  for (std::size_t k = 0; k <= k_max; ++k) {
    s.r_hat[k] = sums[k] * weight;
    weight /= static_cast<double>(J);
  }
  return s;
}

ErrorSeries ExactErrorQuadratic(const LinearRegressionProblem& problem,
                                double eta, const Vector& theta0,
                                std::size_t k_max) {
  if (!(eta > 0.0)) throw UsageError("step-size must be positive");
  const auto& X = problem.data().X;
  const Eigen::Index d = X.rows();
  const std::size_t J = problem.num_components();
  if (theta0.size() != d) throw UsageError("theta0 dimension mismatch");
  const Vector theta_dagger = *problem.AnalyticOptimum();

  const Matrix I = Matrix::Identity(d, d);
  std::vector<Matrix> contraction(J);  // I - eta x_j x_j^T
  std::vector<Vector> bias(J);         // grad f_j(theta_dagger)
  for (std::size_t j = 0; j < J; ++j) {
    const auto x = X.col(static_cast<Eigen::Index>(j));
    contraction[j] = I - eta * x * x.transpose();
    bias[j] = problem.GradComponent(j, theta_dagger);
  }

  // e_{k+1} = (I - eta A_j) e_k - eta b_j with j uniform.
  Vector m = theta0 - theta_dagger;
  Matrix M = m * m.transpose();

  ErrorSeries s;
  s.exact = true;
  s.eta = eta;
  s.problem_id = problem.name();
  s.r_hat.resize(k_max + 1);
  s.std_err.assign(k_max + 1, 0.0);
  s.r_hat[0] = M.trace();

  const double inv_j = 1.0 / static_cast<double>(J);
  Vector m_next(d);
  Matrix M_next(d, d);
  for (std::size_t k = 1; k <= k_max; ++k) {
    m_next.setZero();
    M_next.setZero();
    for (std::size_t j = 0; j < J; ++j) {
      const Matrix& C = contraction[j];
      const Vector Cm = C * m;
      m_next += Cm - eta * bias[j];
      M_next += C * M * C.transpose() -
                eta * (Cm * bias[j].transpose() + bias[j] * Cm.transpose()) +
                (eta * eta) * bias[j] * bias[j].transpose();
    }
    m = m_next * inv_j;
    M = M_next * inv_j;
    s.r_hat[k] = M.trace();
  }
  return s;
}

}  // namespace sgdlb

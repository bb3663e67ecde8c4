#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sgdlb/problem.h"

namespace sgdlb {

struct RunConfig {
  double eta = 0.0;
  // Number of SGD steps K; series carry K + 1 entries (k = 0..K).
  std::size_t iterations = 0;
  // Number of independent trials M.
  std::size_t trials = 1;
  Vector theta0;
  std::uint64_t seed = 0;
  // Worker threads; 0 means hardware concurrency. Never affects results.
  std::size_t threads = 0;
  // Iterations at which every trial's iterate is recorded.
  std::vector<std::size_t> snapshot_iterations;
};

// Per-iteration estimate of R_k = E|theta_k - theta_dagger|^2.
struct ErrorSeries {
  std::vector<double> r_hat;
  std::vector<double> std_err;
  bool exact = false;
  // Set when the standard error is undefined (single trial).
  bool degenerate_sample = false;

  double eta = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::string problem_id;

  std::size_t size() const { return r_hat.size(); }
};

struct ThetaSnapshot {
  std::size_t trial = 0;
  std::size_t iteration = 0;
  Vector theta;
};

struct MonteCarloResult {
  ErrorSeries series;
  // Ordered by (trial, iteration).
  std::vector<ThetaSnapshot> snapshots;
};

// theta - eta * grad f_gamma(theta). Throws DivergenceError (trial 0,
// iteration 0) when the result is not finite.
Vector SgdStep(const FiniteSumProblem& problem, const Vector& theta,
               double eta, std::size_t gamma);

// V(theta) = grad f(theta) - grad f_gamma(theta).
Vector Variation(const FiniteSumProblem& problem, const Vector& theta,
                 std::size_t gamma);

// |theta_k - theta_dagger|^2 for k = 0..K along one trial. Component
// indices come from the stream DeriveStreamSeed(config.seed, trial_index).
std::vector<double> RunTrial(const FiniteSumProblem& problem,
                             const RunConfig& config,
                             const Vector& theta_dagger,
                             std::size_t trial_index,
                             std::vector<ThetaSnapshot>* snapshots = nullptr);

// Averages RunTrial over config.trials trials. The result is bit-identical
// for any thread count. Throws MonteCarloDivergenceError listing every
// trial that diverged.
MonteCarloResult MonteCarloError(const FiniteSumProblem& problem,
                                 const RunConfig& config,
                                 const Vector& theta_dagger);

// Largest J^k_max the path enumeration accepts.
inline constexpr double kEnumerationGuard = 1e7;

// Exact R_k by enumerating all J^k equally likely index paths.
ErrorSeries ExactError(const FiniteSumProblem& problem,
                       const Vector& theta_dagger, double eta,
                       const Vector& theta0, std::size_t k_max);

// Exact R_k for linear regression by propagating the first and second
// moments of theta_k - theta_dagger; the error recursion is affine, so the
// moment recursion is closed.
ErrorSeries ExactErrorQuadratic(const LinearRegressionProblem& problem,
                                double eta, const Vector& theta0,
                                std::size_t k_max);

}  // namespace sgdlb

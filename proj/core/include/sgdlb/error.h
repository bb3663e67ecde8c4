#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgdlb {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated a documented precondition (bad index, malformed input,
// enumeration guard exceeded, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

// A structural invariant of the input data does not hold, e.g. a
// rank-deficient design matrix.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// An iterative solver did not reach its tolerance within the iteration cap.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// The supplied optimum does not annihilate the full gradient.
class StaleOptimumError : public Error {
 public:
  using Error::Error;
};

// A bound was requested whose hypotheses are not met (missing strong
// convexity, step-size outside the admissible range).
class InapplicableError : public Error {
 public:
  using Error::Error;
};

// An SGD iterate became non-finite.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t trial, std::size_t iteration)
      : Error("SGD diverged in trial " + std::to_string(trial) +
              " at iteration " + std::to_string(iteration)),
        trial_(trial),
        iteration_(iteration) {}

  std::size_t trial() const { return trial_; }
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t trial_;
  std::size_t iteration_;
};

// One or more Monte-Carlo trials diverged; carries every offending trial.
class MonteCarloDivergenceError : public Error {
 public:
  explicit MonteCarloDivergenceError(std::vector<DivergenceError> failures);

  const std::vector<DivergenceError>& failures() const { return failures_; }

 private:
  std::vector<DivergenceError> failures_;
};

}  // namespace sgdlb

#pragma once

#include <optional>
#include <vector>

#include "sgdlb/problem.h"

namespace sgdlb {

struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};

// Smallest and largest eigenvalue of a symmetric matrix (d <= 64).
// Throws UsageError if M is not symmetric to within 1e-12.
EigenRange ExtremeEigs(const Matrix& M);

// Per-component gradient Lipschitz constants lambda_max_j.
//   linear regression:   |x_j|^2
//   logistic regression: |x_j|^2 + 1
//   quartic:             sup |f_j''|
std::vector<double> ComponentSmoothness(const FiniteSumProblem& problem);

// Lipschitz constant of the full gradient, lambda_max_0.
double GlobalSmoothness(const FiniteSumProblem& problem);

// Strong convexity modulus; nullopt for non-convex objectives.
std::optional<double> StrongConvexity(const FiniteSumProblem& problem);

// ((1/J) sum_j |grad f_j(theta_dagger)|^2)^{1/2}.
// Throws StaleOptimumError when |grad f(theta_dagger)| > 1e-8.
double ComputeD0(const FiniteSumProblem& problem, const Vector& theta_dagger);

// Root-mean-square of the component constants.
double RootMeanSquare(const std::vector<double>& values);

// Everything above, with theta_dagger from SolveOptimum. User-supplied
// problems return their attached constants.
ProblemConstants ComputeConstants(const FiniteSumProblem& problem);

}  // namespace sgdlb

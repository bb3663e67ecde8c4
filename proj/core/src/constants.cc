#include "sgdlb/constants.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include <Eigen/Eigenvalues>

#include "sgdlb/error.h"

namespace sgdlb {

namespace {

constexpr double kSymmetryTolerance = 1e-12;
constexpr double kOptimalityTolerance = 1e-8;
constexpr Eigen::Index kMaxEigenDimension = 64;

ProblemConstants SuppliedConstants(const FiniteSumProblem& problem) {
  auto constants = problem.AnalyticConstants();
  if (!constants) {
    throw UsageError("constants unavailable for problem '" + problem.name() +
                     "': not a built-in family and no constants supplied");
  }
  return *std::move(constants);
}

// max |q| over [lo, hi] for the quadratic second derivative of a quartic
// piece: endpoints plus the vertex when it lies inside.
double MaxAbsSecondDerivative(const PiecewiseQuarticSpec& spec,
                              const PiecewiseQuartic& piece) {
  double best = std::max(std::abs(spec.SecondDerivative(piece, spec.core_lo)),
                         std::abs(spec.SecondDerivative(piece, spec.core_hi)));
  const double a = 12.0 * piece.coeffs[4];
  const double b = 6.0 * piece.coeffs[3];
  if (a != 0.0) {
    const double vertex = -b / (2.0 * a);
    if (vertex > spec.core_lo && vertex < spec.core_hi) {
      best = std::max(best, std::abs(spec.SecondDerivative(piece, vertex)));
    }
  }
  return best;
}

double MinSecondDerivative(const PiecewiseQuarticSpec& spec,
                           const PiecewiseQuartic& piece) {
  // Linear continuation outside the core has zero curvature.
  double lowest = 0.0;
  lowest = std::min(lowest, spec.SecondDerivative(piece, spec.core_lo));
  lowest = std::min(lowest, spec.SecondDerivative(piece, spec.core_hi));
  const double a = 12.0 * piece.coeffs[4];
  const double b = 6.0 * piece.coeffs[3];
  if (a != 0.0) {
    const double vertex = -b / (2.0 * a);
    if (vertex > spec.core_lo && vertex < spec.core_hi) {
      lowest = std::min(lowest, spec.SecondDerivative(piece, vertex));
    }
  }
  return lowest;
}

}  // namespace

EigenRange ExtremeEigs(const Matrix& M) {
  if (M.rows() != M.cols() || M.rows() < 1) {
    throw UsageError("ExtremeEigs: matrix must be square and non-empty");
  }
  if (M.rows() > kMaxEigenDimension) {
    throw UsageError("ExtremeEigs: dimension above 64 is not supported");
  }
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
    throw UsageError("ExtremeEigs: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(M, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("ExtremeEigs: eigenvalue iteration failed");
  }
  const auto& ev = solver.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

std::vector<double> ComponentSmoothness(const FiniteSumProblem& problem) {
  const std::size_t J = problem.num_components();
  std::vector<double> out(J);
  if (const auto* lin =
          dynamic_cast<const LinearRegressionProblem*>(&problem)) {
    for (std::size_t j = 0; j < J; ++j) {
      out[j] = lin->data().X.col(j).squaredNorm();
    }
    return out;
  }
  if (const auto* log =
          dynamic_cast<const LogisticRegressionProblem*>(&problem)) {
    for (std::size_t j = 0; j < J; ++j) {
      out[j] = log->data().X.col(j).squaredNorm() + 1.0;
    }
    return out;
  }
  if (const auto* quartic = dynamic_cast<const QuarticProblem*>(&problem)) {
    const auto& spec = quartic->spec();
    for (std::size_t j = 0; j < J; ++j) {
      out[j] = MaxAbsSecondDerivative(spec, spec.components[j]);
    }
    return out;
  }
  return SuppliedConstants(problem).lambda_max_j;
}

double GlobalSmoothness(const FiniteSumProblem& problem) {
  if (const auto* lin =
          dynamic_cast<const LinearRegressionProblem*>(&problem)) {
    const auto& X = lin->data().X;
    return ExtremeEigs(X * X.transpose()).max /
           static_cast<double>(X.cols());
  }
  if (const auto* log =
          dynamic_cast<const LogisticRegressionProblem*>(&problem)) {
    const auto& X = log->data().X;
    return 1.0 +
           X.colwise().squaredNorm().sum() / static_cast<double>(X.cols());
  }
  if (const auto* quartic = dynamic_cast<const QuarticProblem*>(&problem)) {
    return MaxAbsSecondDerivative(quartic->spec(), quartic->spec().f);
  }
  return SuppliedConstants(problem).lambda_max_0;
}

std::optional<double> StrongConvexity(const FiniteSumProblem& problem) {
  if (const auto* lin =
          dynamic_cast<const LinearRegressionProblem*>(&problem)) {
    const auto& X = lin->data().X;
    return ExtremeEigs(X * X.transpose()).min /
           static_cast<double>(X.cols());
  }
  if (dynamic_cast<const LogisticRegressionProblem*>(&problem) != nullptr) {
    return 1.0;
  }
  if (const auto* quartic = dynamic_cast<const QuarticProblem*>(&problem)) {
    const double lowest =
        MinSecondDerivative(quartic->spec(), quartic->spec().f);
    if (lowest > 0.0) return lowest;
    return std::nullopt;
  }
  return SuppliedConstants(problem).lambda_min;
}

double ComputeD0(const FiniteSumProblem& problem, const Vector& theta_dagger) {
  const double residual = problem.GradFull(theta_dagger).norm();
  if (!(residual <= kOptimalityTolerance)) {
    throw StaleOptimumError("|grad f(theta_dagger)| = " +
                            std::to_string(residual) + " exceeds 1e-8");
  }
  const std::size_t J = problem.num_components();
  Vector g(problem.dimension());
  double sum = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    problem.ComponentGradientInto(j, theta_dagger, g);
    sum += g.squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(J));
}

double RootMeanSquare(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum / static_cast<double>(values.size()));
}

ProblemConstants ComputeConstants(const FiniteSumProblem& problem) {
  if (problem.family() == ProblemFamily::kUserSupplied) {
    return SuppliedConstants(problem);
  }
  ProblemConstants c;
  c.theta_dagger = SolveOptimum(problem);
  c.lambda_max_j = ComponentSmoothness(problem);
  c.Lambda = RootMeanSquare(c.lambda_max_j);
  c.lambda_max_0 = GlobalSmoothness(problem);
  c.lambda_min = StrongConvexity(problem);
  c.D0 = ComputeD0(problem, c.theta_dagger);
  return c;
}

}  // namespace sgdlb

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sgdlb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Problem-level constants of a finite-sum objective: smoothness of the full
// and component gradients, optional strong convexity, and the gradient noise
// level at the optimum.
struct ProblemConstants {
  double lambda_max_0 = 0.0;
  std::vector<double> lambda_max_j;
  // Root-mean-square of lambda_max_j.
  double Lambda = 0.0;
  // Absent for non-convex objectives.
  std::optional<double> lambda_min;
  // Root-mean-square of the component gradient norms at theta_dagger.
  double D0 = 0.0;
  Vector theta_dagger;
};

enum class ProblemFamily {
  kLinearRegression,
  kLogisticRegression,
  kQuartic,
  kUserSupplied,
};

// f(theta) = (1/J) sum_j f_j(theta).
//
// Components are indexed 0..J-1. Implementations are immutable after
// construction and may be shared by concurrent workers.
class FiniteSumProblem {
 public:
  virtual ~FiniteSumProblem() = default;

  virtual std::size_t num_components() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual ProblemFamily family() const = 0;
  virtual std::string name() const = 0;

  // Writes grad f_j(theta) into `out`. No bounds checking; the hot loop of
  // the SGD engine calls this directly.
  virtual void ComponentGradientInto(std::size_t j,
                                     const Eigen::Ref<const Vector>& theta,
                                     Eigen::Ref<Vector> out) const = 0;

  // f_j(theta), when the family has a closed form.
  virtual std::optional<double> ComponentValue(
      std::size_t j, const Eigen::Ref<const Vector>& theta) const;

  virtual std::optional<Vector> AnalyticOptimum() const { return std::nullopt; }
  virtual std::optional<ProblemConstants> AnalyticConstants() const {
    return std::nullopt;
  }

  // Checked versions. Throw UsageError on an out-of-range index or a
  // dimension mismatch.
  Vector GradComponent(std::size_t j, const Vector& theta) const;
  Vector GradFull(const Vector& theta) const;
  std::optional<double> Value(const Vector& theta) const;
};

// Columns of X are samples: X is d x J.
struct LinearRegressionData {
  Matrix X;
  Vector y;
};

// Labels are 0 or 1; the L2 regularization weight is fixed to 1.
struct LogisticRegressionData {
  Matrix X;
  Vector y;
};

// One piecewise function: a quartic polynomial on [core_lo, core_hi]
// continued linearly outside with matching value and slope.
struct PiecewiseQuartic {
  // coeffs[i] multiplies theta^i.
  std::array<double, 5> coeffs{};
  double left_value = 0.0;
  double left_slope = 0.0;
  double right_value = 0.0;
  double right_slope = 0.0;
};

// f(theta) = theta^4 + 2/3 theta^3 - theta^2 with components
// f_1 = f + theta and f_2 = f - theta on [-2, 2], linear outside.
struct PiecewiseQuarticSpec {
  double core_lo = -2.0;
  double core_hi = 2.0;
  PiecewiseQuartic f;
  // f_1 and f_2.
  std::array<PiecewiseQuartic, 2> components;

  double Value(const PiecewiseQuartic& p, double theta) const;
  double Derivative(const PiecewiseQuartic& p, double theta) const;
  // Zero outside the core interval.
  double SecondDerivative(const PiecewiseQuartic& p, double theta) const;
};

struct SyntheticLinRegConfig {
  std::size_t J = 30;
  std::size_t d = 2;
  Vector theta_star;
  double noise_std = 0.1;
  std::uint64_t seed = 0;
};

class LinearRegressionProblem final : public FiniteSumProblem {
 public:
  // Throws InvariantError when X is not full row rank or shapes disagree.
  explicit LinearRegressionProblem(LinearRegressionData data);

  std::size_t num_components() const override { return data_.X.cols(); }
  std::size_t dimension() const override { return data_.X.rows(); }
  ProblemFamily family() const override {
    return ProblemFamily::kLinearRegression;
  }
  std::string name() const override;

  void ComponentGradientInto(std::size_t j,
                             const Eigen::Ref<const Vector>& theta,
                             Eigen::Ref<Vector> out) const override;
  std::optional<double> ComponentValue(
      std::size_t j, const Eigen::Ref<const Vector>& theta) const override;
  std::optional<Vector> AnalyticOptimum() const override { return optimum_; }

  const LinearRegressionData& data() const { return data_; }

 private:
  LinearRegressionData data_;
  Vector optimum_;
};

class LogisticRegressionProblem final : public FiniteSumProblem {
 public:
  // Throws InvariantError on labels outside {0, 1} or mismatched shapes.
  explicit LogisticRegressionProblem(LogisticRegressionData data);

  std::size_t num_components() const override { return data_.X.cols(); }
  std::size_t dimension() const override { return data_.X.rows(); }
  ProblemFamily family() const override {
    return ProblemFamily::kLogisticRegression;
  }
  std::string name() const override;

  void ComponentGradientInto(std::size_t j,
                             const Eigen::Ref<const Vector>& theta,
                             Eigen::Ref<Vector> out) const override;
  std::optional<double> ComponentValue(
      std::size_t j, const Eigen::Ref<const Vector>& theta) const override;

  const LogisticRegressionData& data() const { return data_; }

 private:
  LogisticRegressionData data_;
};

class QuarticProblem final : public FiniteSumProblem {
 public:
  explicit QuarticProblem(PiecewiseQuarticSpec spec);

  std::size_t num_components() const override { return 2; }
  std::size_t dimension() const override { return 1; }
  ProblemFamily family() const override { return ProblemFamily::kQuartic; }
  std::string name() const override { return "quartic"; }

  void ComponentGradientInto(std::size_t j,
                             const Eigen::Ref<const Vector>& theta,
                             Eigen::Ref<Vector> out) const override;
  std::optional<double> ComponentValue(
      std::size_t j, const Eigen::Ref<const Vector>& theta) const override;
  // The global minimum theta = -1.
  std::optional<Vector> AnalyticOptimum() const override;

  const PiecewiseQuarticSpec& spec() const { return spec_; }

 private:
  PiecewiseQuarticSpec spec_;
};

// A black-box objective. Only usable downstream when the caller also
// supplies the constants (which carry the optimum).
class UserSuppliedProblem final : public FiniteSumProblem {
 public:
  using GradientFn =
      std::function<void(std::size_t, const Eigen::Ref<const Vector>&,
                         Eigen::Ref<Vector>)>;

  UserSuppliedProblem(std::size_t J, std::size_t d, GradientFn gradient,
                      std::optional<ProblemConstants> constants,
                      std::string name = "user_supplied");

  std::size_t num_components() const override { return J_; }
  std::size_t dimension() const override { return d_; }
  ProblemFamily family() const override { return ProblemFamily::kUserSupplied; }
  std::string name() const override { return name_; }

  void ComponentGradientInto(std::size_t j,
                             const Eigen::Ref<const Vector>& theta,
                             Eigen::Ref<Vector> out) const override;
  std::optional<Vector> AnalyticOptimum() const override;
  std::optional<ProblemConstants> AnalyticConstants() const override {
    return constants_;
  }

 private:
  std::size_t J_;
  std::size_t d_;
  GradientFn gradient_;
  std::optional<ProblemConstants> constants_;
  std::string name_;
};

double Sigmoid(double z);

PiecewiseQuarticSpec BuildQuartic();

// Unit-sphere features with y_j = theta_star^T x_j + N(0, noise_std^2).
// Fully determined by config.seed.
LinearRegressionData GenerateLinRegDataset(const SyntheticLinRegConfig& config);

// Linear regression: (X X^T)^{-1} X y. Logistic: full-gradient descent with
// step 1/lambda_max_0 until |grad f| <= 1e-10. Quartic: -1.
Vector SolveOptimum(const FiniteSumProblem& problem);

}  // namespace sgdlb

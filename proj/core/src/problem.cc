#include "sgdlb/problem.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include <Eigen/Cholesky>

#include "sgdlb/constants.h"
#include "sgdlb/error.h"
#include "sgdlb/rng.h"

namespace sgdlb {

namespace {

constexpr double kRankTolerance = 1e-12;
constexpr double kLogisticGradTolerance = 1e-10;
constexpr std::size_t kLogisticMaxIterations = 1'000'000;

double Softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double Horner(const std::array<double, 5>& c, double x) {
  return (((c[4] * x + c[3]) * x + c[2]) * x + c[1]) * x + c[0];
}

double HornerDerivative(const std::array<double, 5>& c, double x) {
  return ((4.0 * c[4] * x + 3.0 * c[3]) * x + 2.0 * c[2]) * x + c[1];
}

double HornerSecond(const std::array<double, 5>& c, double x) {
  return (12.0 * c[4] * x + 6.0 * c[3]) * x + 2.0 * c[2];
}

PiecewiseQuartic MakePiece(const std::array<double, 5>& coeffs, double lo,
                           double hi) {
  PiecewiseQuartic p;
  p.coeffs = coeffs;
  p.left_value = Horner(coeffs, lo);
  p.left_slope = HornerDerivative(coeffs, lo);
  p.right_value = Horner(coeffs, hi);
  p.right_slope = HornerDerivative(coeffs, hi);
  return p;
}

void CheckIndex(const FiniteSumProblem& p, std::size_t j) {
  if (j >= p.num_components()) {
    throw UsageError("component index " + std::to_string(j) +
                     " out of range [0, " +
                     std::to_string(p.num_components()) + ")");
  }
}

void CheckDimension(const FiniteSumProblem& p, const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != p.dimension()) {
    throw UsageError("parameter has dimension " +
                     std::to_string(theta.size()) + ", problem expects " +
                     std::to_string(p.dimension()));
  }
}

}  // namespace

std::optional<double> FiniteSumProblem::ComponentValue(
    std::size_t, const Eigen::Ref<const Vector>&) const {
  return std::nullopt;
}

Vector FiniteSumProblem::GradComponent(std::size_t j,
                                       const Vector& theta) const {
  CheckIndex(*this, j);
  CheckDimension(*this, theta);
  Vector out(dimension());
  ComponentGradientInto(j, theta, out);
  return out;
}

Vector FiniteSumProblem::GradFull(const Vector& theta) const {
  CheckDimension(*this, theta);
  Vector sum = Vector::Zero(dimension());
  Vector g(dimension());
  for (std::size_t j = 0; j < num_components(); ++j) {
    ComponentGradientInto(j, theta, g);
    sum += g;
  }
  return sum / static_cast<double>(num_components());
}

std::optional<double> FiniteSumProblem::Value(const Vector& theta) const {
  CheckDimension(*this, theta);
  double sum = 0.0;
  for (std::size_t j = 0; j < num_components(); ++j) {
    const auto v = ComponentValue(j, theta);
    if (!v) return std::nullopt;
    sum += *v;
  }
  return sum / static_cast<double>(num_components());
}

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Linear regression

LinearRegressionProblem::LinearRegressionProblem(LinearRegressionData data)
    : data_(std::move(data)) {
  if (data_.X.rows() < 1 || data_.X.cols() < 1) {
    throw InvariantError("linear regression needs d >= 1 and J >= 1");
  }
  if (data_.y.size() != data_.X.cols()) {
    throw InvariantError("linear regression: y has " +
                         std::to_string(data_.y.size()) + " entries, X has " +
                         std::to_string(data_.X.cols()) + " columns");
  }
  const Matrix gram = data_.X * data_.X.transpose();
  const auto [lo, hi] = ExtremeEigs(gram);
  if (!(hi > 0.0) || lo <= kRankTolerance * hi) {
    throw InvariantError(
        "linear regression: X X^T is rank deficient (smallest eigenvalue " +
        std::to_string(lo) + ", largest " + std::to_string(hi) + ")");
  }
  optimum_ = gram.ldlt().solve(data_.X * data_.y);
}

std::string LinearRegressionProblem::name() const {
  std::ostringstream os;
  os << "linear_regression(J=" << num_components() << ",d=" << dimension()
     << ")";
  return os.str();
}

void LinearRegressionProblem::ComponentGradientInto(
    std::size_t j, const Eigen::Ref<const Vector>& theta,
    Eigen::Ref<Vector> out) const {
  const auto x = data_.X.col(static_cast<Eigen::Index>(j));
  const double residual = x.dot(theta) - data_.y[static_cast<Eigen::Index>(j)];
  out = residual * x;
}

std::optional<double> LinearRegressionProblem::ComponentValue(
    std::size_t j, const Eigen::Ref<const Vector>& theta) const {
  const auto x = data_.X.col(static_cast<Eigen::Index>(j));
  const double residual = x.dot(theta) - data_.y[static_cast<Eigen::Index>(j)];
  return 0.5 * residual * residual;
}

// ---------------------------------------------------------------------------
// Logistic regression

LogisticRegressionProblem::LogisticRegressionProblem(
    LogisticRegressionData data)
    : data_(std::move(data)) {
  if (data_.X.rows() < 1 || data_.X.cols() < 1) {
    throw InvariantError("logistic regression needs d >= 1 and J >= 1");
  }
  if (data_.y.size() != data_.X.cols()) {
    throw InvariantError("logistic regression: label count does not match X");
  }
  for (Eigen::Index j = 0; j < data_.y.size(); ++j) {
    if (data_.y[j] != 0.0 && data_.y[j] != 1.0) {
      throw InvariantError("logistic regression: label " +
                           std::to_string(data_.y[j]) + " at index " +
                           std::to_string(j) + " is not 0 or 1");
    }
  }
}

std::string LogisticRegressionProblem::name() const {
  std::ostringstream os;
  os << "logistic_regression(J=" << num_components() << ",d=" << dimension()
     << ")";
  return os.str();
}

void LogisticRegressionProblem::ComponentGradientInto(
    std::size_t j, const Eigen::Ref<const Vector>& theta,
    Eigen::Ref<Vector> out) const {
  const auto x = data_.X.col(static_cast<Eigen::Index>(j));
  const double s = Sigmoid(x.dot(theta)) - data_.y[static_cast<Eigen::Index>(j)];
  out = s * x + theta;
}

std::optional<double> LogisticRegressionProblem::ComponentValue(
    std::size_t j, const Eigen::Ref<const Vector>& theta) const {
  const auto x = data_.X.col(static_cast<Eigen::Index>(j));
  const double z = x.dot(theta);
  // -(y log S(z) + (1-y) log(1-S(z))) = softplus(z) - y z
  return Softplus(z) - data_.y[static_cast<Eigen::Index>(j)] * z +
         0.5 * theta.squaredNorm();
}

// ---------------------------------------------------------------------------
// Piecewise quartic

double PiecewiseQuarticSpec::Value(const PiecewiseQuartic& p,
                                   double theta) const {
  if (theta > core_hi) return p.right_value + p.right_slope * (theta - core_hi);
  if (theta < core_lo) return p.left_value + p.left_slope * (theta - core_lo);
  return Horner(p.coeffs, theta);
}

double PiecewiseQuarticSpec::Derivative(const PiecewiseQuartic& p,
                                        double theta) const {
  if (theta > core_hi) return p.right_slope;
  if (theta < core_lo) return p.left_slope;
  return HornerDerivative(p.coeffs, theta);
}

double PiecewiseQuarticSpec::SecondDerivative(const PiecewiseQuartic& p,
                                              double theta) const {
  if (theta > core_hi || theta < core_lo) return 0.0;
  return HornerSecond(p.coeffs, theta);
}

PiecewiseQuarticSpec BuildQuartic() {
  PiecewiseQuarticSpec spec;
  const std::array<double, 5> base{0.0, 0.0, -1.0, 2.0 / 3.0, 1.0};
  auto plus = base;
  plus[1] += 1.0;
  auto minus = base;
  minus[1] -= 1.0;
  spec.f = MakePiece(base, spec.core_lo, spec.core_hi);
  spec.components[0] = MakePiece(plus, spec.core_lo, spec.core_hi);
  spec.components[1] = MakePiece(minus, spec.core_lo, spec.core_hi);
  return spec;
}

QuarticProblem::QuarticProblem(PiecewiseQuarticSpec spec)
    : spec_(std::move(spec)) {}

void QuarticProblem::ComponentGradientInto(
    std::size_t j, const Eigen::Ref<const Vector>& theta,
    Eigen::Ref<Vector> out) const {
  out[0] = spec_.Derivative(spec_.components[j], theta[0]);
}

std::optional<double> QuarticProblem::ComponentValue(
    std::size_t j, const Eigen::Ref<const Vector>& theta) const {
  return spec_.Value(spec_.components[j], theta[0]);
}

std::optional<Vector> QuarticProblem::AnalyticOptimum() const {
  return Vector::Constant(1, -1.0);
}

// ---------------------------------------------------------------------------
// User-supplied

UserSuppliedProblem::UserSuppliedProblem(
    std::size_t J, std::size_t d, GradientFn gradient,
    std::optional<ProblemConstants> constants, std::string name)
    : J_(J),
      d_(d),
      gradient_(std::move(gradient)),
      constants_(std::move(constants)),
      name_(std::move(name)) {
  if (J_ < 1 || d_ < 1) throw InvariantError("problem needs J >= 1, d >= 1");
  if (!gradient_) throw UsageError("user-supplied problem needs a gradient");
}

void UserSuppliedProblem::ComponentGradientInto(
    std::size_t j, const Eigen::Ref<const Vector>& theta,
    Eigen::Ref<Vector> out) const {
  gradient_(j, theta, out);
}

std::optional<Vector> UserSuppliedProblem::AnalyticOptimum() const {
  if (!constants_) return std::nullopt;
  return constants_->theta_dagger;
}

// ---------------------------------------------------------------------------

LinearRegressionData GenerateLinRegDataset(
    const SyntheticLinRegConfig& config) {
  if (config.J < 1 || config.d < 1) {
    throw UsageError("synthetic dataset needs J >= 1 and d >= 1");
  }
  if (static_cast<std::size_t>(config.theta_star.size()) != config.d) {
    throw UsageError("theta_star must have d entries");
  }
  if (!(config.noise_std >= 0.0)) {
    throw UsageError("noise standard deviation must be non-negative");
  }
  Rng rng(config.seed);
  LinearRegressionData data{Matrix(config.d, config.J), Vector(config.J)};
  Vector draw(config.d);
  for (std::size_t j = 0; j < config.J; ++j) {
    double norm = 0.0;
    do {
      for (std::size_t i = 0; i < config.d; ++i) draw[i] = rng.NextGaussian();
      norm = draw.norm();
    } while (!(norm > 0.0));
    data.X.col(j) = draw / norm;
    data.y[j] = config.theta_star.dot(data.X.col(j)) +
                config.noise_std * rng.NextGaussian();
  }
  return data;
}

Vector SolveOptimum(const FiniteSumProblem& problem) {
  if (auto analytic = problem.AnalyticOptimum()) return *std::move(analytic);

  if (const auto* logistic =
          dynamic_cast<const LogisticRegressionProblem*>(&problem)) {
    const auto& X = logistic->data().X;
    const double lambda_max_0 =
        1.0 + X.colwise().squaredNorm().sum() / static_cast<double>(X.cols());
    const double step = 1.0 / lambda_max_0;
    Vector theta = Vector::Zero(problem.dimension());
    for (std::size_t it = 0; it < kLogisticMaxIterations; ++it) {
      const Vector g = problem.GradFull(theta);
      if (g.norm() <= kLogisticGradTolerance) return theta;
      theta -= step * g;
    }
    throw ConvergenceError(
        "logistic regression optimum: gradient descent did not reach "
        "|grad| <= 1e-10 within the iteration cap");
  }
  throw UsageError("no optimum available for problem '" + problem.name() +
                   "'; supply ProblemConstants with theta_dagger");
}

}  // namespace sgdlb

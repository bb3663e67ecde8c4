#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.h"
#include "sgdlb/constants.h"
#include "sgdlb/error.h"
#include "sgdlb/problem.h"
#include "sgdlb/rng.h"

namespace sgdlb {
namespace {

using testing::Scalar;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.NextU64(), b.NextU64());
}

TEST(Rng, StreamSeedsDiffer) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t t = 0; t < 1000; ++t) seeds.insert(DeriveStreamSeed(7, t));
  EXPECT_EQ(seeds.size(), 1000u);
  EXPECT_NE(DeriveStreamSeed(7, 0), DeriveStreamSeed(8, 0));
}

TEST(Rng, UniformIndexInRangeAndBalanced) {
  Rng rng(1);
  constexpr std::size_t kN = 7;
  constexpr int kDraws = 70000;
  std::vector<int> counts(kN, 0);
  for (int i = 0; i < kDraws; ++i) {
    const std::size_t j = rng.UniformIndex(kN);
    ASSERT_LT(j, kN);
    ++counts[j];
  }
  // Chi-square with 6 degrees of freedom; 22.46 is the 0.999 quantile.
  double chi2 = 0.0;
  const double expected = static_cast<double>(kDraws) / kN;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 22.46);
}

TEST(Rng, UniformInUnitInterval) {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.NextUniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, GaussianMoments) {
  Rng rng(5);
  constexpr int kN = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < kN; ++i) {
    const double g = rng.NextGaussian();
    sum += g;
    sq += g * g;
  }
  EXPECT_NEAR(sum / kN, 0.0, 0.01);
  EXPECT_NEAR(sq / kN, 1.0, 0.02);
}

TEST(LinearRegression, ComponentGradientByHand) {
  // x_j = (1, 2), y_j = 1, theta = (1, 1): residual 2, gradient (2, 4).
  LinearRegressionData d;
  d.X = Matrix(2, 2);
  d.X << 1.0, 0.0, 2.0, 1.0;
  d.y = Vector(2);
  d.y << 1.0, 0.0;
  const LinearRegressionProblem p(d);
  Vector theta(2);
  theta << 1.0, 1.0;
  const Vector g = p.GradComponent(0, theta);
  EXPECT_DOUBLE_EQ(g[0], 2.0);
  EXPECT_DOUBLE_EQ(g[1], 4.0);
}

TEST(LinearRegression, ToyGradients) {
  const LinearRegressionProblem p(testing::ToyTwoData());
  EXPECT_DOUBLE_EQ(p.GradComponent(0, Scalar(0.0))[0], -1.0);
  EXPECT_DOUBLE_EQ(p.GradComponent(1, Scalar(0.0))[0], 1.0);
  EXPECT_DOUBLE_EQ(p.GradFull(Scalar(0.0))[0], 0.0);
  EXPECT_DOUBLE_EQ(p.GradFull(Scalar(2.0))[0], 2.0);
}

TEST(LinearRegression, ThreeSampleOptimum) {
  const LinearRegressionProblem p(testing::LinRegThreeData());
  const Vector opt = SolveOptimum(p);
  EXPECT_NEAR(opt[0], 1.0, 1e-14);
  // Brute force over a grid agrees.
  double best = 0.0, best_val = INFINITY;
  for (int i = -3000; i <= 3000; ++i) {
    const double t = i * 1e-3;
    const double v = *p.Value(Scalar(t));
    if (v < best_val) best_val = v, best = t;
  }
  EXPECT_NEAR(opt[0], best, 1e-3);
}

TEST(LinearRegression, RankDeficientRejected) {
  LinearRegressionData d;
  d.X = Matrix(2, 3);
  d.X << 1.0, 2.0, 3.0, 2.0, 4.0, 6.0;
  d.y = Vector::Zero(3);
  EXPECT_THROW(LinearRegressionProblem{d}, InvariantError);
}

TEST(LinearRegression, IndexOutOfRange) {
  const LinearRegressionProblem p(testing::ToyTwoData());
  EXPECT_THROW(p.GradComponent(2, Scalar(0.0)), UsageError);
  EXPECT_THROW(p.GradComponent(0, Vector::Zero(2)), UsageError);
}

TEST(Logistic, ZeroFeatureGivesRegularizer) {
  LogisticRegressionData d;
  d.X = Matrix::Zero(2, 1);
  d.y = Vector::Ones(1);
  const LogisticRegressionProblem p(d);
  Vector theta(2);
  theta << 0.3, -0.7;
  const Vector g = p.GradComponent(0, theta);
  EXPECT_DOUBLE_EQ(g[0], 0.3);
  EXPECT_DOUBLE_EQ(g[1], -0.7);
}

TEST(Logistic, LabelsMustBeBinary) {
  LogisticRegressionData d;
  d.X = Matrix::Ones(1, 2);
  d.y = Vector(2);
  d.y << 1.0, 0.5;
  EXPECT_THROW(LogisticRegressionProblem{d}, InvariantError);
}

TEST(Logistic, OptimumIsStationary) {
  LogisticRegressionData d;
  d.X = Matrix(2, 4);
  d.X << 1.0, -0.5, 0.3, 0.0, 0.2, 1.0, -1.0, 0.7;
  d.y = Vector(4);
  d.y << 1.0, 0.0, 1.0, 0.0;
  const LogisticRegressionProblem p(d);
  const Vector opt = SolveOptimum(p);
  EXPECT_LE(p.GradFull(opt).norm(), 1e-10);
}

TEST(Quartic, PiecesAndValues) {
  const auto spec = BuildQuartic();
  EXPECT_NEAR(spec.Value(spec.f, 2.0), 52.0 / 3.0, 1e-12);
  EXPECT_NEAR(spec.Derivative(spec.f, 2.0), 36.0, 1e-12);
  EXPECT_NEAR(spec.SecondDerivative(spec.f, 2.0), 54.0, 1e-12);
  EXPECT_NEAR(spec.Derivative(spec.f, -1.0), 0.0, 1e-12);
  EXPECT_NEAR(spec.Derivative(spec.f, 0.5), 0.0, 1e-12);
  // Linear extensions continue value and slope.
  EXPECT_NEAR(spec.Value(spec.f, 3.0), 52.0 / 3.0 + 36.0, 1e-12);
  EXPECT_NEAR(spec.Derivative(spec.f, -3.0), spec.Derivative(spec.f, -2.0),
              1e-12);
  EXPECT_DOUBLE_EQ(spec.SecondDerivative(spec.f, 5.0), 0.0);
}

TEST(Quartic, ComponentGradientsAtOptimum) {
  const QuarticProblem p(BuildQuartic());
  EXPECT_NEAR(p.GradComponent(0, Scalar(-1.0))[0], 1.0, 1e-12);
  EXPECT_NEAR(p.GradComponent(1, Scalar(-1.0))[0], -1.0, 1e-12);
  EXPECT_NEAR(SolveOptimum(p)[0], -1.0, 0.0);
  // -1 is the global minimizer; 0.5 is only local.
  EXPECT_LT(*p.Value(Scalar(-1.0)), *p.Value(Scalar(0.5)));
}

TEST(Dataset, UnitFeaturesAndDeterminism) {
  SyntheticLinRegConfig cfg;
  cfg.theta_star = Vector(2);
  cfg.theta_star << -1.27, -0.49;
  cfg.seed = 11;
  const auto a = GenerateLinRegDataset(cfg);
  const auto b = GenerateLinRegDataset(cfg);
  ASSERT_EQ(a.X.cols(), 30);
  ASSERT_EQ(a.X.rows(), 2);
  for (Eigen::Index j = 0; j < a.X.cols(); ++j) {
    EXPECT_NEAR(a.X.col(j).norm(), 1.0, 1e-14);
  }
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.y, b.y);
  cfg.seed = 12;
  EXPECT_NE(GenerateLinRegDataset(cfg).X, a.X);
}

TEST(Dataset, OptimumNearTruth) {
  SyntheticLinRegConfig cfg;
  cfg.theta_star = Vector(2);
  cfg.theta_star << -1.27, -0.49;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    cfg.seed = seed;
    const LinearRegressionProblem p(GenerateLinRegDataset(cfg));
    const Vector opt = SolveOptimum(p);
    EXPECT_LE((opt - cfg.theta_star).cwiseAbs().maxCoeff(), 3 * 0.1);
  }
}

TEST(Dataset, NoiselessOrthonormalInterpolates) {
  LinearRegressionData d;
  d.X = Matrix::Identity(2, 2);
  d.y = Vector(2);
  d.y << 0.4, -2.0;
  const LinearRegressionProblem p(d);
  const Vector opt = SolveOptimum(p);
  EXPECT_NEAR(opt[0], 0.4, 1e-15);
  EXPECT_NEAR(opt[1], -2.0, 1e-15);
  EXPECT_EQ(ComputeD0(p, opt), 0.0);
}

TEST(UserSupplied, OptimumNeedsConstants) {
  const UserSuppliedProblem p(
      1, 1, [](std::size_t, const auto& t, auto out) { out = t; },
      std::nullopt);
  EXPECT_THROW(SolveOptimum(p), UsageError);
}

// Property: every built-in gradient matches central differences at 100
// random points.
class GradientCheck : public ::testing::Test {
 protected:
  static void Verify(const FiniteSumProblem& p, double scale,
                     std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    for (int trial = 0; trial < 100; ++trial) {
      const Vector theta = testing::RandomVector(
          gen, static_cast<Eigen::Index>(p.dimension()), scale);
      for (std::size_t j = 0; j < p.num_components(); ++j) {
        const auto fj = [&](const Vector& t) { return *p.ComponentValue(j, t); };
        const Vector fd = testing::CentralDifference(fj, theta);
        const Vector g = p.GradComponent(j, theta);
        const double rel = (fd - g).norm() / std::max(1.0, g.norm());
        ASSERT_LE(rel, 1e-6) << p.name() << " j=" << j;
      }
      const auto f = [&](const Vector& t) { return *p.Value(t); };
      const Vector fd = testing::CentralDifference(f, theta);
      const Vector g = p.GradFull(theta);
      ASSERT_LE((fd - g).norm() / std::max(1.0, g.norm()), 1e-6);
    }
  }
};

TEST_F(GradientCheck, LinearRegression) {
  SyntheticLinRegConfig cfg;
  cfg.theta_star = Vector(2);
  cfg.theta_star << -1.27, -0.49;
  cfg.seed = 3;
  Verify(LinearRegressionProblem(GenerateLinRegDataset(cfg)), 3.0, 1);
}

TEST_F(GradientCheck, Logistic) {
  std::mt19937_64 gen(9);
  LogisticRegressionData d;
  d.X = Matrix(3, 12);
  for (Eigen::Index j = 0; j < 12; ++j) {
    d.X.col(j) = testing::RandomVector(gen, 3, 1.0);
  }
  d.y = Vector(12);
  for (Eigen::Index j = 0; j < 12; ++j) d.y[j] = j % 2;
  Verify(LogisticRegressionProblem(d), 3.0, 2);
}

TEST_F(GradientCheck, Quartic) {
  // Range includes both linear extensions.
  Verify(QuarticProblem(BuildQuartic()), 3.0, 3);
}

TEST(Problem, MeanOfComponentsIsFullGradient) {
  const QuarticProblem p(BuildQuartic());
  std::mt19937_64 gen(4);
  for (int i = 0; i < 50; ++i) {
    const Vector t = testing::RandomVector(gen, 1, 2.0);
    const double mean =
        0.5 * (p.GradComponent(0, t)[0] + p.GradComponent(1, t)[0]);
    EXPECT_NEAR(mean, p.GradFull(t)[0], 1e-12);
  }
}

}  // namespace
}  // namespace sgdlb

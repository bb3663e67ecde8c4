// One [PASS]/[FAIL] line per acceptance criterion; exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "cli/recipes.h"
#include "oracles.h"
#include "sgdlb/bounds.h"
#include "sgdlb/constants.h"
#include "sgdlb/engine.h"
#include "sgdlb/io.h"
#include "sgdlb/problem.h"
#include "sgdlb/verify.h"

namespace {

using namespace sgdlb;
using sgdlb::testing::Scalar;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;

  void Require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string Num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

bool Near(double x, double target, double tol) { return std::fabs(x - target) <= tol; }

TheoremConstants Toy(double eta) { return MakeTheoremConstants(eta, 1, 1, 1, 1.0); }

ErrorSeries ToyExact(double theta0, std::size_t K) {
  const LinearRegressionProblem toy(sgdlb::testing::ToyTwoData());
  return ExactErrorQuadratic(toy, 0.1, Scalar(theta0), K);
}

Outcome ExactSandwich() {
  Outcome o;
  const auto c = Toy(0.1);
  double worst = INFINITY;
  for (double theta0 : {0.0, 2.0}) {
    const auto s = ToyExact(theta0, 501);
    for (std::size_t k = 0; k <= 500; ++k) {
      worst = std::min(worst, s.r_hat[k + 1] - LowerStep(s.r_hat[k], c));
      worst = std::min(worst, UpperStep(s.r_hat[k], c) - s.r_hat[k + 1]);
    }
  }
  o.Require(worst >= -1e-10, "slack " + Num(worst));
  o.detail = "worst slack " + Num(worst) + (o.pass ? "" : "; " + o.detail);
  return o;
}

Outcome DualOracle() {
  Outcome o;
  double worst = 0.0;
  const LinearRegressionProblem toy(sgdlb::testing::ToyTwoData());
  const auto a = ExactError(toy, Scalar(0.0), 0.1, Scalar(0.0), 16);
  const auto b = ExactErrorQuadratic(toy, 0.1, Scalar(0.0), 16);
  for (std::size_t k = 0; k <= 16; ++k) worst = std::max(worst, std::fabs(a.r_hat[k] - b.r_hat[k]));
  const LinearRegressionProblem three(sgdlb::testing::LinRegThreeData());
  const auto c = ExactError(three, Scalar(1.0), 0.1, Scalar(0.0), 10);
  const auto d = ExactErrorQuadratic(three, 0.1, Scalar(0.0), 10);
  for (std::size_t k = 0; k <= 10; ++k) worst = std::max(worst, std::fabs(c.r_hat[k] - d.r_hat[k]));
  o.Require(worst <= 1e-12, "max difference " + Num(worst));
  if (o.pass) o.detail = "max difference " + Num(worst);
  return o;
}

Outcome FixedPointBracketing() {
  Outcome o;
  const auto c = WithRateLedger(Toy(0.1), 4.0);
  const double exact = ToyExact(0.0, 2000).r_hat.back();
  const double z0_sq = c.z0 * c.z0;
  const double refined = RefinedLimits(c).limsup;
  const double cf = ClosedFormLimits(c).limsup;
  o.Require(Near(exact, 0.052632, 1e-6), "exact limit " + Num(exact));
  o.Require(Near(exact, 0.1 / 1.9, 1e-12), "exact limit vs eta/(2-eta)");
  o.Require(Near(z0_sq, 0.032087, 1e-6), "z0^2 " + Num(z0_sq));
  o.Require(Near(refined, 0.082948, 1e-6), "refined " + Num(refined));
  o.Require(Near(cf, 0.138378, 1e-6), "closed-form " + Num(cf));
  o.Require(z0_sq <= exact && exact <= refined && refined <= cf, "ordering");
  if (o.pass) {
    o.detail = Num(z0_sq) + " <= " + Num(exact) + " <= " + Num(refined) + " <= " + Num(cf);
  }
  return o;
}

Outcome Ledger() {
  Outcome o;
  const auto l = *WithRateLedger(Toy(0.1), 4.0).ledger;
  o.Require(Near(l.C0, 0.288007, 1e-6), "C0 " + Num(l.C0));
  o.Require(Near(l.C2, 2.635523, 1e-6), "C2 " + Num(l.C2));
  o.Require(Near(l.C3, -1.503747, 1e-6), "C3 " + Num(l.C3));
  o.Require(Near(l.C4, 6.635523, 1e-6), "C4 " + Num(l.C4));
  int k = 0;
  for (double p = 1.0; p > 0.1; p *= 0.9) ++k;
  o.Require(l.K0 == 22 && k == 22, "K0 " + std::to_string(l.K0) + " loop " + std::to_string(k));
  if (o.pass) o.detail = "C0..C4, K0 = 22 match";
  return o;
}

Outcome K0Bound() {
  Outcome o;
  const auto l = *WithRateLedger(Toy(0.1), 4.0).ledger;
  const auto s = ToyExact(2.0, 100);
  const double r = s.r_hat[static_cast<std::size_t>(l.K0)];
  o.Require(r <= l.C4 * 0.1, "R_K0 " + Num(r));
  o.Require(Near(l.C4 * 0.1, 0.663552, 1e-6), "C4*eta " + Num(l.C4 * 0.1));
  if (o.pass) o.detail = "R_22 = " + Num(r) + " <= " + Num(l.C4 * 0.1);
  return o;
}

Outcome FloorBehaviour() {
  Outcome o;
  const auto c = Toy(0.1);
  const auto s = ToyExact(0.0, 500);
  const auto report = ClassifyFloorBehavior(s, c.z0 * c.z0, 1e-12);
  o.Require(report.all_pass(), "a property failed");
  o.Require(report.first_crossing && *report.first_crossing == 5, "first crossing");
  if (o.pass) {
    o.detail = "crossing at k = 5 (R_4 = " + Num(s.r_hat[4]) + ", R_5 = " + Num(s.r_hat[5]) + ")";
  }
  return o;
}

Outcome LinRegRecipe(const cli::LinRegRecipeResult& r) {
  Outcome o;
  const double z0_sq = r.theorem.z0 * r.theorem.z0;
  const double limsup = ClosedFormLimits(r.theorem).limsup;
  o.Require(r.tail_average >= z0_sq, "tail below z0^2");
  o.Require(r.tail_average <= limsup, "tail above limsup");
  const auto anch = CheckBracketing(r.mc.series, r.anchored, 4.0, 0.01);
  o.Require(anch.status == CheckStatus::kPass,
            "anchored violations " + Num(anch.violation_fraction));
  if (o.pass) {
    o.detail = Num(z0_sq) + " <= tail " + Num(r.tail_average) + " <= " + Num(limsup) +
               ", anchored violations " + Num(anch.violation_fraction);
  }
  return o;
}

const cli::QuarticRun* FindRun(const cli::QuarticRecipeResult& r, double eta, double theta0) {
  for (const auto& run : r.runs) {
    if (run.eta == eta && run.theta0 == theta0) return &run;
  }
  return nullptr;
}

Outcome QuarticRecipe(const cli::QuarticRecipeResult& r) {
  Outcome o;
  const double derived = 1.0 / (4.0 * r.constants.lambda_max_0);
  o.Require(Near(derived, 1.0 / 216, 1e-18), "derived eta");
  const auto* down = FindRun(r, derived, -2.0);
  const auto* up = FindRun(r, derived, 2.0);
  const auto* reference_down = FindRun(r, cli::kQuarticReferenceEta, -2.0);
  const auto* reference_up = FindRun(r, cli::kQuarticReferenceEta, 2.0);
  if (!down || !up || !reference_down || !reference_up) {
    o.Require(false, "missing run");
    return o;
  }
  const auto asym = CheckAsymptotics(down->mc.series, down->theorem, 0.2, 4.0);
  o.Require(asym.status == CheckStatus::kPass, "tail vs z0^2");
  o.Require(Near(down->theorem.z0 * down->theorem.z0, 2.1433e-5, 1e-9), "z0^2");
  o.Require(up->trap_fraction > 0.5, "trap fraction " + Num(up->trap_fraction));
  o.Require(std::fabs(up->median_final_theta - 0.5) < 0.1, "median " + Num(up->median_final_theta));
  o.Require(!reference_down->theorem.admissible.one_step, "reference eta flagged admissible");
  o.Require(r.report.status != CheckStatus::kFail, "report failed");
  bool reference_reported = false;
  for (const auto& check : r.report.checks) {
    if (check.name.find("reference_eta") != std::string::npos) {
      reference_reported = true;
      o.Require(check.status == CheckStatus::kInapplicable && !check.reason.empty(),
                check.name + " not gated");
    }
  }
  o.Require(reference_reported, "reference eta absent from report");
  if (o.pass) {
    o.detail = "tail " + Num(down->tail_average) + " >= " + Num(2.1433e-5) + ", trapped " +
               Num(up->trap_fraction) + ", median " + Num(up->median_final_theta) +
               ", reference eta gated (median " + Num(reference_up->median_final_theta) + ")";
  }
  return o;
}

Outcome GdDegeneration() {
  Outcome o;
  const LinearRegressionProblem gd(sgdlb::testing::GdOneData());
  const auto constants = ComputeConstants(gd);
  const auto c = MakeTheoremConstants(constants, 0.1);
  RunConfig cfg;
  cfg.eta = 0.1;
  cfg.iterations = 200;
  cfg.trials = 4;
  cfg.theta0 = Scalar(1.0);
  cfg.seed = 1;
  const auto s = MonteCarloError(gd, cfg, constants.theta_dagger).series;
  double worst = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double expected = std::pow(*c.alpha, static_cast<double>(k)) * s.r_hat[0];
    worst = std::max(worst, std::fabs(s.r_hat[k] - expected) / std::max(expected, 1e-300));
  }
  o.Require(constants.D0 == 0.0, "D0 not zero");
  o.Require(worst <= 1e-12, "relative error " + Num(worst));
  if (o.pass) o.detail = "alpha = " + Num(*c.alpha) + ", max relative error " + Num(worst);
  return o;
}

double WorstGradientError(const FiniteSumProblem& p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vector t = sgdlb::testing::RandomVector(gen, static_cast<Eigen::Index>(p.dimension()), 3.0);
    for (std::size_t j = 0; j < p.num_components(); ++j) {
      const Vector fd = sgdlb::testing::CentralDifference(
          [&](const Vector& x) { return *p.ComponentValue(j, x); }, t);
      const Vector g = p.GradComponent(j, t);
      worst = std::max(worst, (fd - g).norm() / std::max({g.norm(), fd.norm(), 1.0}));
    }
  }
  return worst;
}

Outcome GradientChecks() {
  Outcome o;
  SyntheticLinRegConfig cfg;
  cfg.theta_star = Vector(2);
  cfg.theta_star << -1.27, -0.49;
  const LinearRegressionProblem lr(GenerateLinRegDataset(cfg));
  LogisticRegressionData ld;
  ld.X = lr.data().X;
  ld.y = Vector(ld.X.cols());
  for (Eigen::Index j = 0; j < ld.y.size(); ++j) ld.y[j] = j % 3 == 0 ? 1.0 : 0.0;
  const LogisticRegressionProblem lg(ld);
  const QuarticProblem q(BuildQuartic());
  const double e1 = WorstGradientError(lr, 1);
  const double e2 = WorstGradientError(lg, 2);
  const double e3 = WorstGradientError(q, 3);
  o.Require(e1 <= 1e-6, "linreg " + Num(e1));
  o.Require(e2 <= 1e-6, "logistic " + Num(e2));
  o.Require(e3 <= 1e-6, "quartic " + Num(e3));
  if (o.pass) o.detail = "worst relative error " + Num(std::max({e1, e2, e3}));
  return o;
}

bool SameCsvs(const fs::path& a, const fs::path& b, std::size_t* count) {
  bool same = true;
  for (const auto& entry : fs::directory_iterator(a)) {
    if (entry.path().extension() != ".csv") continue;
    const fs::path other = b / entry.path().filename();
    same = same && fs::exists(other) &&
           ReadFile(entry.path().string()) == ReadFile(other.string());
    ++*count;
  }
  return same;
}

int failures = 0;

void Report(int id, const std::string& title, const std::function<Outcome()>& body,
            double budget_seconds) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (budget_seconds > 0 && seconds > budget_seconds) {
    o.pass = false;
    o.detail += "; took " + Num(seconds) + " s, budget " + Num(budget_seconds) + " s";
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(),
              seconds, o.detail.c_str());
  std::fflush(stdout);
}

}  // namespace

int main() {
  Report(1, "exact one-step sandwich", ExactSandwich, 1.0);
  Report(2, "dual-oracle agreement", DualOracle, 10.0);
  Report(3, "fixed-point bracketing", FixedPointBracketing, 0.0);
  Report(4, "rate-ledger regression", Ledger, 0.0);
  Report(5, "burn-in bound R_K0 <= C4 eta", K0Bound, 0.0);
  Report(6, "floor behaviour on exact series", FloorBehaviour, 0.0);

  cli::LinRegRecipeOptions lin_opts;
  lin_opts.threads = 1;
  cli::QuarticRecipeOptions quartic_opts;
  quartic_opts.threads = 1;
  std::optional<cli::LinRegRecipeResult> lin;
  std::optional<cli::QuarticRecipeResult> quartic;
  Report(7, "linear-regression reproduction", [&] {
    lin = cli::RunLinRegRecipe(lin_opts);
    return LinRegRecipe(*lin);
  }, 60.0);
  Report(8, "quartic reproduction", [&] {
    quartic = cli::RunQuarticRecipe(quartic_opts);
    return QuarticRecipe(*quartic);
  }, 10.0);
  Report(9, "GD degeneration", GdDegeneration, 0.0);
  Report(10, "finite-difference gradients", GradientChecks, 0.0);
  Report(11, "thread-count determinism", [&] {
    Outcome o;
    if (!lin || !quartic) {
      o.Require(false, "criteria 7-8 did not produce results");
      return o;
    }
    const fs::path root = fs::temp_directory_path() / "sgdlb_acceptance";
    fs::remove_all(root);
    cli::WriteLinRegArtifacts(*lin, (root / "lin1").string(), false);
    cli::WriteQuarticArtifacts(*quartic, (root / "q1").string(), false);
    lin_opts.threads = 3;
    quartic_opts.threads = 3;
    cli::WriteLinRegArtifacts(cli::RunLinRegRecipe(lin_opts), (root / "lin3").string(), false);
    cli::WriteQuarticArtifacts(cli::RunQuarticRecipe(quartic_opts), (root / "q3").string(),
                               false);
    std::size_t count = 0;
    o.Require(SameCsvs(root / "lin1", root / "lin3", &count), "linreg CSVs differ");
    o.Require(SameCsvs(root / "q1", root / "q3", &count), "quartic CSVs differ");
    fs::remove_all(root);
    if (o.pass) o.detail = std::to_string(count) + " CSV files identical across 1 and 3 threads";
    return o;
  }, 0.0);
  return failures == 0 ? 0 : 1;
}

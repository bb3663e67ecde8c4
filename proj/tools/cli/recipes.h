#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgdlb/bounds.h"
#include "sgdlb/engine.h"
#include "sgdlb/problem.h"
#include "sgdlb/verify.h"

namespace sgdlb::cli {

inline constexpr std::uint64_t kDefaultRecipeSeed = 2020;

struct LinRegRecipeOptions {
  std::uint64_t seed = kDefaultRecipeSeed;
  double eta = 0.01;
  std::size_t iterations = 50000;
  std::size_t trials = 1000;
  std::size_t threads = 0;
  double se_mult = 4.0;
  double tail_fraction = 0.2;
  // Fraction of k allowed to fall outside an SE-inflated bracket.
  double max_violation_fraction = 0.01;
};

struct LinRegRecipeResult {
  LinRegRecipeOptions options;
  LinearRegressionData data;
  ProblemConstants constants;
  TheoremConstants theorem;
  MonteCarloResult mc;
  EnvelopeSeries propagated;
  std::optional<EnvelopeSeries> closed_form;
  EnvelopeSeries anchored;
  double tail_average = 0.0;
  VerificationReport report;
};

LinRegRecipeResult RunLinRegRecipe(const LinRegRecipeOptions& options);

inline constexpr double kQuarticReferenceEta = 0.069;
inline constexpr double kQuarticLocalMinimum = 0.5;

struct QuarticRecipeOptions {
  std::uint64_t seed = kDefaultRecipeSeed;
  // Step sizes to run; defaults to 0.069 and 1/(4 lambda_max_0).
  std::vector<double> etas;
  std::vector<double> theta0s = {-2.0, 2.0};
  std::size_t iterations = 500;
  std::size_t trials = 500;
  std::size_t threads = 0;
  double se_mult = 4.0;
  double tail_fraction = 0.2;
  double max_violation_fraction = 0.01;
  // |theta_K - 0.5| below this counts as trapped.
  double trap_radius = 0.1;
};

struct QuarticRun {
  std::string tag;
  double eta = 0.0;
  double theta0 = 0.0;
  TheoremConstants theorem;
  MonteCarloResult mc;
  std::optional<EnvelopeSeries> propagated;
  std::optional<EnvelopeSeries> anchored;
  std::vector<double> final_theta;
  double trap_fraction = 0.0;
  double median_final_theta = 0.0;
  double tail_average = 0.0;
};

struct QuarticRecipeResult {
  QuarticRecipeOptions options;
  ProblemConstants constants;
  std::vector<QuarticRun> runs;
  VerificationReport report;
};

QuarticRecipeResult RunQuarticRecipe(const QuarticRecipeOptions& options);

// Writes CSVs, JSON sidecars, the report and a summary into out_dir
// (created if missing); SVG charts when svg is set.
void WriteLinRegArtifacts(const LinRegRecipeResult& result,
                          const std::string& out_dir, bool svg);
void WriteQuarticArtifacts(const QuarticRecipeResult& result,
                           const std::string& out_dir, bool svg);

}  // namespace sgdlb::cli

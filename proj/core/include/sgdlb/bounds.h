#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgdlb/engine.h"
#include "sgdlb/problem.h"

namespace sgdlb {

// Step-size conditions gating each family of bounds.
struct Admissibility {
  // eta < 1/lambda_max_0: the one-step lower/upper recursions hold.
  bool one_step = false;
  // eta < lambda_min / (Lambda^2 + lambda_max_0^2): closed-form rates hold.
  // nullopt when there is no strong convexity.
  std::optional<bool> closed_form;
  // eta < 1/(2 lambda_max_0): limsup R_k >= z0^2.
  bool asymptotic_floor = false;
  // z_star <= z0 (and asymptotic_floor): liminf R_k >= z0^2 and the
  // per-iteration floor properties hold.
  bool small_step = false;
};

// Constants of the closed-form non-asymptotic rates; depend on R_0.
struct RateLedger {
  double r0 = 0.0;
  double C0 = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  double C3 = 0.0;
  double C4 = 0.0;
  // 2 eta^2 Lambda D0 (C1 + (D0^2 + 1/2) eta^2)^{1/2} + eta^2 D0^2
  double beta = 0.0;
  // Burn-in horizon ceil(log eta / log(1 - eta lambda_min)).
  std::int64_t K0 = 0;
};

// Step-size dependent quantities derived from ProblemConstants.
struct TheoremConstants {
  double eta = 0.0;
  double D0 = 0.0;
  double Lambda = 0.0;
  double lambda_max_0 = 0.0;
  std::optional<double> lambda_min;

  // sqrt(Lambda^2 + lambda_max_0^2 - lambda_min^2); needs lambda_min.
  std::optional<double> phi;
  // 1 - 2 eta lambda_min + eta^2 phi^2; needs lambda_min.
  std::optional<double> alpha;

  // Positive root of h1(z) = 2 lambda_max_0 z^2 + 2 eta Lambda D0 z - eta D0^2.
  double z0 = 0.0;
  // Minimizer eta^2 Lambda D0 / (1 - 2 eta lambda_max_0) of h2; +inf when
  // the denominator is not positive.
  double z_star = 0.0;

  Admissibility admissible;
  std::optional<RateLedger> ledger;
};

TheoremConstants MakeTheoremConstants(double eta, double D0, double Lambda,
                                      double lambda_max_0,
                                      std::optional<double> lambda_min);
TheoremConstants MakeTheoremConstants(const ProblemConstants& constants,
                                      double eta);

Admissibility CheckAdmissibility(const TheoremConstants& c);

// Human-readable statement of the closed-form step-size condition, e.g.
// "eta < lambda_min/(Lambda^2 + lambda_max_0^2) = 0.5".
std::string ClosedFormCondition(const TheoremConstants& c);
std::string OneStepCondition(const TheoremConstants& c);

double H1(const TheoremConstants& c, double z);
// z^2 - h1(z): the lower one-step map in the sqrt(R) variable.
double H2(const TheoremConstants& c, double z);

// (1 - 2 eta lambda_max_0) R - 2 eta^2 Lambda D0 sqrt(R) + eta^2 D0^2.
// A lower bound on R_{k+1} given R_k = R. Throws UsageError for R < 0.
double LowerStep(double R, const TheoremConstants& c);

// alpha R + 2 eta^2 Lambda D0 sqrt(R) + eta^2 D0^2. Throws
// InapplicableError without strong convexity.
double UpperStep(double R, const TheoremConstants& c);

// Fills c.ledger for initial error r0. Throws InapplicableError naming the
// violated condition when the closed-form rates do not apply.
TheoremConstants WithRateLedger(TheoremConstants c, double r0);

// Closed form of the positive root of h1.
double Z0Root(const TheoremConstants& c);

struct AsymptoticLimits {
  double liminf = 0.0;
  double limsup = 0.0;
};

// Large-k limits of the closed-form envelopes. Requires the ledger.
AsymptoticLimits ClosedFormLimits(const TheoremConstants& c);

// Sharper limits valid under the small-step condition; liminf equals z0^2.
// Throws InapplicableError when the condition or strong convexity fails.
AsymptoticLimits RefinedLimits(const TheoremConstants& c);

enum class EnvelopeMode { kPropagated, kClosedForm, kAnchored };

std::string ToString(EnvelopeMode mode);

// Both one-sided closed-form values at the regime switch k = K0.
struct EnvelopeJunction {
  std::size_t k = 0;
  double lower_before = 0.0;
  double upper_before = 0.0;
  double lower_after = 0.0;
  double upper_after = 0.0;
};

// Per-iteration interval [lower_k, upper_k]; upper may be +inf.
struct EnvelopeSeries {
  EnvelopeMode mode = EnvelopeMode::kPropagated;
  std::vector<double> lower;
  std::vector<double> upper;
  std::optional<EnvelopeJunction> junction;

  std::size_t size() const { return lower.size(); }
};

// Closed-form rates for k = 0..K using c.ledger. Before K0 the all-k pair;
// from K0 on the intersection with the large-k pair.
EnvelopeSeries ClosedFormEnvelopes(const TheoremConstants& c, std::size_t K);

// Certified interval propagation of the one-step recursions from R_0 = r0.
// The lower map is minimized over the whole current interval because it is
// not monotone in R. Throws InapplicableError when eta >= 1/lambda_max_0.
EnvelopeSeries PropagatedEnvelopes(const TheoremConstants& c, double r0,
                                   std::size_t K);

// Entry k+1 is [LowerStep(r_hat_k), UpperStep(r_hat_k)]; entry 0 is
// [0, +inf]. Upper sides are +inf without strong convexity.
EnvelopeSeries OneStepBounds(const ErrorSeries& series,
                             const TheoremConstants& c);

struct FloorProperty {
  bool pass = true;
  std::optional<std::size_t> first_counterexample;
};

// Behaviour of an exact series relative to the floor z0^2:
//   above_minimum:    R_k > min(R_0, z0^2) for every k >= 1
//   rises_below_floor: R_k < z0^2 implies R_{k+1} > R_k
//   stays_above_floor: once R_k >= z0^2, every later entry is >= z0^2
struct FloorReport {
  FloorProperty above_minimum;
  FloorProperty rises_below_floor;
  FloorProperty stays_above_floor;
  std::optional<std::size_t> first_crossing;

  bool all_pass() const {
    return above_minimum.pass && rises_below_floor.pass &&
           stays_above_floor.pass;
  }
};

// Throws UsageError on a Monte-Carlo series.
FloorReport ClassifyFloorBehavior(const ErrorSeries& series, double z0_sq,
                                  double tolerance = 1e-12);

}  // namespace sgdlb

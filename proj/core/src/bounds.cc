#include "sgdlb/bounds.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sgdlb/error.h"

namespace sgdlb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string Num(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

// q(x) = a x^2 + b x + c on [lo, hi] with 0 <= lo <= hi <= +inf.
struct Quadratic {
  double a;
  double b;
  double c;

  double operator()(double x) const { return (a * x + b) * x + c; }

  double MinOver(double lo, double hi) const {
    double best = (*this)(lo);
    if (std::isinf(hi)) {
      if (a < 0.0 || (a == 0.0 && b < 0.0)) return -kInf;
    } else {
      best = std::min(best, (*this)(hi));
    }
    if (a > 0.0) {
      const double vertex = -b / (2.0 * a);
      if (vertex > lo && vertex < hi) best = std::min(best, (*this)(vertex));
    }
    return best;
  }

  double MaxOver(double lo, double hi) const {
    double best = (*this)(lo);
    if (std::isinf(hi)) {
      if (a > 0.0 || (a == 0.0 && b > 0.0)) return kInf;
    } else {
      best = std::max(best, (*this)(hi));
    }
    if (a < 0.0) {
      const double vertex = -b / (2.0 * a);
      if (vertex > lo && vertex < hi) best = std::max(best, (*this)(vertex));
    }
    return best;
  }
};

Quadratic LowerMap(const TheoremConstants& c) {
  const double e2 = c.eta * c.eta;
  return {1.0 - 2.0 * c.eta * c.lambda_max_0, -2.0 * e2 * c.Lambda * c.D0,
          e2 * c.D0 * c.D0};
}

Quadratic UpperMap(const TheoremConstants& c) {
  const double e2 = c.eta * c.eta;
  return {*c.alpha, 2.0 * e2 * c.Lambda * c.D0, e2 * c.D0 * c.D0};
}

// a^k R + S_k, where S_k is the accumulated constant term of
// R_{k+1} >= a R_k + (1 - a) T. The geometric sum (1 - a^k) T is used when
// T > 0 so that the bound stays valid at small k.
double GeometricLower(double a, double k, double R, double T) {
  const double ak = std::pow(a, k);
  return ak * R + (T <= 0.0 ? T : (1.0 - ak) * T);
}

void RequireStrongConvexity(const TheoremConstants& c, const char* what) {
  if (!c.lambda_min) {
    throw InapplicableError(std::string(what) +
                            " requires strong convexity (lambda_min)");
  }
}

}  // namespace

TheoremConstants MakeTheoremConstants(double eta, double D0, double Lambda,
                                      double lambda_max_0,
                                      std::optional<double> lambda_min) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw UsageError("step-size must be positive and finite");
  }
  if (!(lambda_max_0 > 0.0) || !(D0 >= 0.0) || !(Lambda >= 0.0)) {
    throw UsageError(
        "constants need lambda_max_0 > 0, D0 >= 0 and Lambda >= 0");
  }
  if (lambda_min && !(*lambda_min > 0.0)) {
    throw UsageError("lambda_min must be positive when present");
  }
  TheoremConstants c;
  c.eta = eta;
  c.D0 = D0;
  c.Lambda = Lambda;
  c.lambda_max_0 = lambda_max_0;
  c.lambda_min = lambda_min;
  if (lambda_min) {
    const double phi_sq = Lambda * Lambda + lambda_max_0 * lambda_max_0 -
                          *lambda_min * *lambda_min;
    c.phi = std::sqrt(std::max(0.0, phi_sq));
    c.alpha = 1.0 - 2.0 * eta * *lambda_min + eta * eta * phi_sq;
  }
  c.z0 = Z0Root(c);
  const double denom = 1.0 - 2.0 * eta * lambda_max_0;
  c.z_star = denom > 0.0 ? eta * eta * Lambda * D0 / denom : kInf;
  c.admissible = CheckAdmissibility(c);
  return c;
}

TheoremConstants MakeTheoremConstants(const ProblemConstants& constants,
                                      double eta) {
  return MakeTheoremConstants(eta, constants.D0, constants.Lambda,
                              constants.lambda_max_0, constants.lambda_min);
}

Admissibility CheckAdmissibility(const TheoremConstants& c) {
  Admissibility a;
  a.one_step = c.eta < 1.0 / c.lambda_max_0;
  if (c.lambda_min) {
    a.closed_form = c.eta < *c.lambda_min / (c.Lambda * c.Lambda +
                                             c.lambda_max_0 * c.lambda_max_0);
  }
  a.asymptotic_floor = c.eta < 1.0 / (2.0 * c.lambda_max_0);
  a.small_step = a.asymptotic_floor && c.z_star <= c.z0;
  return a;
}

std::string ClosedFormCondition(const TheoremConstants& c) {
  if (!c.lambda_min) return "strong convexity (lambda_min) required";
  return "eta < lambda_min/(Lambda^2 + lambda_max_0^2) = " +
         Num(*c.lambda_min /
             (c.Lambda * c.Lambda + c.lambda_max_0 * c.lambda_max_0));
}

std::string OneStepCondition(const TheoremConstants& c) {
  return "eta < 1/lambda_max_0 = " + Num(1.0 / c.lambda_max_0);
}

double H1(const TheoremConstants& c, double z) {
  return 2.0 * c.lambda_max_0 * z * z + 2.0 * c.eta * c.Lambda * c.D0 * z -
         c.eta * c.D0 * c.D0;
}

double H2(const TheoremConstants& c, double z) { return z * z - c.eta * H1(c, z); }

double LowerStep(double R, const TheoremConstants& c) {
  if (R < 0.0) throw UsageError("LowerStep: R must be non-negative");
  return LowerMap(c)(std::sqrt(R));
}

double UpperStep(double R, const TheoremConstants& c) {
  if (R < 0.0) throw UsageError("UpperStep: R must be non-negative");
  RequireStrongConvexity(c, "the upper one-step bound");
  return UpperMap(c)(std::sqrt(R));
}

double Z0Root(const TheoremConstants& c) {
  const double eta = c.eta;
  const double lD = c.Lambda * c.D0;
  const double disc = 4.0 * eta * eta * lD * lD +
                      8.0 * eta * c.lambda_max_0 * c.D0 * c.D0;
  // Written as 2 eta D0^2 / (eta Lambda D0 + sqrt(...)/2) the expression
  // avoids cancellation; both forms agree algebraically.
  const double root = std::sqrt(disc);
  if (root == 0.0) return 0.0;
  return (2.0 * eta * c.D0 * c.D0) / (2.0 * eta * lD + root);
}

TheoremConstants WithRateLedger(TheoremConstants c, double r0) {
  if (!(r0 >= 0.0)) throw UsageError("R_0 must be non-negative");
  RequireStrongConvexity(c, "the closed-form rates");
  if (!c.admissible.closed_form.value_or(false)) {
    throw InapplicableError("closed-form rates need " +
                            ClosedFormCondition(c) + ", got eta = " +
                            Num(c.eta));
  }
  const double eta = c.eta;
  const double lmin = *c.lambda_min;
  const double phi_sq = *c.phi * *c.phi;
  const double gap = 2.0 * lmin - eta * phi_sq;
  const double lD = c.Lambda * c.D0;
  const double D0sq = c.D0 * c.D0;

  RateLedger L;
  L.r0 = r0;
  L.C0 = (eta * lD + std::sqrt(eta * eta * lD * lD + eta * D0sq * gap)) / gap;
  L.C1 = std::max(r0, L.C0 * L.C0);
  const double bound_root = std::sqrt(L.C1 + (D0sq + 0.5) * eta * eta);
  L.C2 = (2.0 * lD * bound_root + D0sq) / gap;
  L.C3 = (-2.0 * lD * bound_root + D0sq) / (2.0 * c.lambda_max_0);
  L.C4 = r0 + L.C2;
  L.beta = 2.0 * eta * eta * lD * bound_root + eta * eta * D0sq;
  const double k0 = std::ceil(std::log(eta) / std::log(1.0 - eta * lmin));
  L.K0 = static_cast<std::int64_t>(std::max(0.0, k0));
  c.ledger = L;
  return c;
}

AsymptoticLimits ClosedFormLimits(const TheoremConstants& c) {
  if (!c.ledger) {
    throw InapplicableError("closed-form limits need the rate ledger");
  }
  const double eta = c.eta;
  const double phi_sq = *c.phi * *c.phi;
  const double noise = eta * c.D0 * c.D0;
  const double cross =
      2.0 * std::sqrt(c.ledger->C4) * std::pow(eta, 1.5) * c.Lambda * c.D0;
  AsymptoticLimits lim;
  lim.limsup = (noise + cross) / (2.0 * *c.lambda_min - eta * phi_sq);
  lim.liminf = std::max((noise - cross) / (2.0 * c.lambda_max_0), 0.0);
  return lim;
}

AsymptoticLimits RefinedLimits(const TheoremConstants& c) {
  RequireStrongConvexity(c, "the refined limsup bound");
  if (!c.admissible.small_step) {
    throw InapplicableError(
        "refined limits need eta^2 Lambda D0 / (1 - 2 eta lambda_max_0) <= z0");
  }
  const double eta = c.eta;
  const double lmin = *c.lambda_min;
  const double phi_sq = *c.phi * *c.phi;
  const double D0sq = c.D0 * c.D0;
  const double disc =
      4.0 * eta * eta * (c.Lambda * c.Lambda * D0sq - phi_sq * D0sq) +
      8.0 * eta * D0sq * lmin;
  const double denom = 4.0 * lmin - 2.0 * eta * phi_sq;
  if (disc < 0.0 || !(denom > 0.0)) {
    throw InapplicableError("refined limsup bound undefined at this eta");
  }
  const double up = (2.0 * eta * c.Lambda * c.D0 + std::sqrt(disc)) / denom;
  return {c.z0 * c.z0, up * up};
}

std::string ToString(EnvelopeMode mode) {
  switch (mode) {
    case EnvelopeMode::kPropagated:
      return "recursive-propagated";
    case EnvelopeMode::kClosedForm:
      return "closed-form";
    case EnvelopeMode::kAnchored:
      return "one-step-anchored";
  }
  return "unknown";
}

EnvelopeSeries ClosedFormEnvelopes(const TheoremConstants& c, std::size_t K) {
  if (!c.ledger) {
    throw InapplicableError("closed-form envelopes need the rate ledger");
  }
  const RateLedger& L = *c.ledger;
  const double eta = c.eta;
  const double alpha = *c.alpha;
  const double contraction = 1.0 - 2.0 * eta * c.lambda_max_0;
  const auto K0 = static_cast<std::size_t>(L.K0);

  const AsymptoticLimits tails = [&] {
    const double noise = eta * c.D0 * c.D0;
    const double cross =
        2.0 * std::sqrt(L.C4) * std::pow(eta, 1.5) * c.Lambda * c.D0;
    return AsymptoticLimits{
        (noise - cross) / (2.0 * c.lambda_max_0),
        (noise + cross) / (2.0 * *c.lambda_min - eta * *c.phi * *c.phi)};
  }();

  auto early_upper = [&](std::size_t k) {
    return std::pow(alpha, static_cast<double>(k)) * L.r0 + L.C2 * eta;
  };
  auto early_lower = [&](std::size_t k) {
    return std::max(0.0, GeometricLower(contraction, static_cast<double>(k),
                                        L.r0, L.C3 * eta));
  };
  const double anchor_lower = early_lower(K0);
  auto late_upper = [&](std::size_t k) {
    return std::pow(alpha, static_cast<double>(k - K0)) * L.C4 * eta +
           tails.limsup;
  };
  auto late_lower = [&](std::size_t k) {
    return std::max(0.0,
                    GeometricLower(contraction, static_cast<double>(k - K0),
                                   anchor_lower, tails.liminf));
  };

  EnvelopeSeries env;
  env.mode = EnvelopeMode::kClosedForm;
  env.lower.resize(K + 1);
  env.upper.resize(K + 1);
  for (std::size_t k = 0; k <= K; ++k) {
    if (k < K0) {
      env.lower[k] = early_lower(k);
      env.upper[k] = early_upper(k);
    } else {
      env.lower[k] = std::max(early_lower(k), late_lower(k));
      env.upper[k] = std::min(early_upper(k), late_upper(k));
    }
  }
  env.junction = EnvelopeJunction{K0, early_lower(K0), early_upper(K0),
                                  late_lower(K0), late_upper(K0)};
  return env;
}

EnvelopeSeries PropagatedEnvelopes(const TheoremConstants& c, double r0,
                                   std::size_t K) {
  if (!(r0 >= 0.0)) throw UsageError("R_0 must be non-negative");
  if (!c.admissible.one_step) {
    throw InapplicableError("one-step bounds need " + OneStepCondition(c) +
                            ", got eta = " + Num(c.eta));
  }
  const Quadratic lower_map = LowerMap(c);
  const bool has_upper = c.lambda_min.has_value();

  EnvelopeSeries env;
  env.mode = EnvelopeMode::kPropagated;
  env.lower.resize(K + 1);
  env.upper.resize(K + 1);
  env.lower[0] = r0;
  env.upper[0] = has_upper ? r0 : kInf;
  for (std::size_t k = 0; k < K; ++k) {
    const double lo = std::sqrt(env.lower[k]);
    const double hi = std::isinf(env.upper[k]) ? kInf : std::sqrt(env.upper[k]);
    env.lower[k + 1] = std::max(0.0, lower_map.MinOver(lo, hi));
    env.upper[k + 1] = has_upper ? UpperMap(c).MaxOver(lo, hi) : kInf;
  }
  return env;
}

EnvelopeSeries OneStepBounds(const ErrorSeries& series,
                             const TheoremConstants& c) {
  if (series.size() == 0) throw UsageError("OneStepBounds: empty series");
  const bool has_upper = c.lambda_min.has_value();
  EnvelopeSeries env;
  env.mode = EnvelopeMode::kAnchored;
  env.lower.resize(series.size());
  env.upper.resize(series.size());
  env.lower[0] = 0.0;
  env.upper[0] = kInf;
  for (std::size_t k = 0; k + 1 < series.size(); ++k) {
    const double r = std::max(0.0, series.r_hat[k]);
    env.lower[k + 1] = std::max(0.0, LowerStep(r, c));
    env.upper[k + 1] = has_upper ? UpperStep(r, c) : kInf;
  }
  return env;
}

FloorReport ClassifyFloorBehavior(const ErrorSeries& series, double z0_sq,
                                  double tolerance) {
  if (!series.exact) {
    throw UsageError(
        "floor classification needs an exact series; Monte-Carlo noise "
        "breaks strict monotonicity");
  }
  FloorReport report;
  const auto& R = series.r_hat;
  if (R.empty()) return report;

  auto fail = [](FloorProperty& p, std::size_t k) {
    if (p.pass) {
      p.pass = false;
      p.first_counterexample = k;
    }
  };

  const double floor_min = std::min(R[0], z0_sq);
  for (std::size_t k = 1; k < R.size(); ++k) {
    if (!(R[k] - floor_min > -tolerance)) fail(report.above_minimum, k);
  }
  for (std::size_t k = 0; k + 1 < R.size(); ++k) {
    if (R[k] < z0_sq - tolerance && !(R[k + 1] > R[k])) {
      fail(report.rises_below_floor, k);
    }
  }
  for (std::size_t k = 0; k < R.size(); ++k) {
    if (!report.first_crossing) {
      if (R[k] >= z0_sq) report.first_crossing = k;
    } else if (R[k] < z0_sq - tolerance) {
      fail(report.stays_above_floor, k);
    }
  }
  return report;
}

}  // namespace sgdlb

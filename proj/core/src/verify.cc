#include "sgdlb/verify.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sgdlb/error.h"

namespace sgdlb {

namespace {

constexpr std::size_t kMinTailPoints = 50;

}  // namespace

std::string ToString(CheckStatus status) {
  switch (status) {
    case CheckStatus::kPass:
      return "pass";
    case CheckStatus::kFail:
      return "fail";
    case CheckStatus::kInapplicable:
      return "inapplicable";
  }
  return "unknown";
}

CheckRecord CheckBracketing(const ErrorSeries& series,
                            const EnvelopeSeries& envelope, double se_mult,
                            double max_violation_fraction, std::string name) {
  if (series.size() != envelope.size()) {
    throw UsageError("bracketing: series has " +
                     std::to_string(series.size()) + " entries, envelope " +
                     std::to_string(envelope.size()));
  }
  if (series.size() == 0) throw UsageError("bracketing: empty series");
  CheckRecord rec;
  rec.name = name.empty() ? "bracketing:" + ToString(envelope.mode) : name;
  const bool exact = series.exact;
  rec.tolerance = exact ? kExactTolerance : se_mult;
  const double threshold = exact ? -kExactTolerance : 0.0;

  double worst = std::numeric_limits<double>::infinity();
  std::size_t violations = 0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double inflate = exact ? 0.0 : se_mult * series.std_err[k];
    const double r = series.r_hat[k];
    double slack = r - (envelope.lower[k] - inflate);
    if (!std::isinf(envelope.upper[k])) {
      slack = std::min(slack, envelope.upper[k] + inflate - r);
    }
    worst = std::min(worst, slack);
    if (slack < threshold) {
      ++violations;
      if (!rec.first_violation_k) rec.first_violation_k = k;
    }
  }
  rec.slack = worst;
  rec.violation_fraction =
      static_cast<double>(violations) / static_cast<double>(series.size());
  const auto allowed = static_cast<std::size_t>(
      std::floor(max_violation_fraction * static_cast<double>(series.size())));
  rec.status = violations <= allowed ? CheckStatus::kPass : CheckStatus::kFail;
  return rec;
}

CheckRecord CheckAsymptotics(const ErrorSeries& series,
                             const TheoremConstants& c, double tail_fraction,
                             double se_mult) {
  CheckRecord rec;
  rec.name = "asymptotics";
  rec.tolerance = series.exact ? kExactTolerance : se_mult;
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw UsageError("tail fraction must lie in (0, 1]");
  }
  const auto window = static_cast<std::size_t>(
      std::ceil(tail_fraction * static_cast<double>(series.size())));
  if (window < kMinTailPoints) {
    throw UsageError("asymptotics: tail window has " + std::to_string(window) +
                     " points, need at least 50");
  }
  if (!c.admissible.asymptotic_floor || !c.admissible.small_step) {
    rec.status = CheckStatus::kInapplicable;
    rec.reason =
        c.admissible.asymptotic_floor
            ? "small-step condition eta^2 Lambda D0/(1 - 2 eta lambda_max_0) "
              "<= z0 fails"
            : "needs eta < 1/(2 lambda_max_0)";
    return rec;
  }

  const std::size_t first = series.size() - window;
  double sum = 0.0;
  double se_sum = 0.0;
  for (std::size_t k = first; k < series.size(); ++k) {
    sum += series.r_hat[k];
    se_sum += series.std_err[k];
  }
  const double n = static_cast<double>(window);
  const double tail_avg = sum / n;
  // Mean of the per-k standard errors: an upper bound on the standard
  // error of the window average under positive correlation.
  const double pooled = series.exact ? 0.0 : se_sum / n;
  const double margin = series.exact ? 0.0 : se_mult * pooled;

  double slack = tail_avg + margin - c.z0 * c.z0;
  if (c.ledger) {
    const double limsup = ClosedFormLimits(c).limsup;
    slack = std::min(slack, limsup - (tail_avg - margin));
  } else if (c.lambda_min) {
    rec.reason = "upper side skipped: no rate ledger for this step-size";
  } else {
    rec.reason = "upper side skipped: no strong convexity";
  }
  rec.slack = slack;
  const double threshold = series.exact ? -kExactTolerance : 0.0;
  rec.status = slack >= threshold ? CheckStatus::kPass : CheckStatus::kFail;
  return rec;
}

CheckRecord CheckRecursion(const ErrorSeries& series,
                           const TheoremConstants& c) {
  CheckRecord rec;
  rec.name = "recursion";
  rec.tolerance = kExactTolerance;
  if (!series.exact) {
    rec.status = CheckStatus::kInapplicable;
    rec.reason = "Monte-Carlo series: sampling noise can violate inequalities "
                 "that hold in expectation";
    return rec;
  }
  if (!c.admissible.one_step) {
    rec.status = CheckStatus::kInapplicable;
    rec.reason = "needs " + OneStepCondition(c);
    return rec;
  }
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < series.size(); ++k) {
    const double r = std::max(0.0, series.r_hat[k]);
    const double next = series.r_hat[k + 1];
    double slack = next - LowerStep(r, c);
    if (c.lambda_min) slack = std::min(slack, UpperStep(r, c) - next);
    worst = std::min(worst, slack);
    if (slack < -kExactTolerance && !rec.first_violation_k) {
      rec.first_violation_k = k + 1;
    }
  }
  if (series.size() < 2) worst = 0.0;
  if (!c.lambda_min) rec.reason = "upper side skipped: no strong convexity";
  rec.slack = worst;
  rec.status = rec.first_violation_k ? CheckStatus::kFail : CheckStatus::kPass;
  return rec;
}

VerificationReport MakeReport(std::vector<CheckRecord> checks) {
  VerificationReport report;
  std::stable_partition(checks.begin(), checks.end(), [](const auto& c) {
    return c.status == CheckStatus::kFail;
  });
  report.checks = std::move(checks);
  if (report.checks.empty()) {
    report.status = CheckStatus::kFail;
    report.exit_code = 2;
    return report;
  }
  const bool any_fail = report.checks.front().status == CheckStatus::kFail;
  report.status = any_fail ? CheckStatus::kFail : CheckStatus::kPass;
  report.exit_code = any_fail ? 1 : 0;
  return report;
}

nlohmann::json VerificationReport::ToJson() const {
  nlohmann::json out;
  out["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json j;
    j["name"] = c.name;
    j["status"] = ToString(c.status);
    j["slack"] = c.slack;
    j["first_violation_k"] =
        c.first_violation_k ? nlohmann::json(*c.first_violation_k)
                            : nlohmann::json(nullptr);
    j["tolerance"] = c.tolerance;
    j["violation_fraction"] = c.violation_fraction;
    if (!c.reason.empty()) j["reason"] = c.reason;
    out["checks"].push_back(std::move(j));
  }
  out["status"] = exit_code == 2 ? "usage_error" : ToString(status);
  out["exit_code"] = exit_code;
  return out;
}

std::string VerificationReport::Serialize() const {
  return ToJson().dump(2) + "\n";
}

}  // namespace sgdlb

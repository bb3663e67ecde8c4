#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgdlb/bounds.h"
#include "sgdlb/engine.h"

namespace sgdlb {

enum class CheckStatus { kPass, kFail, kInapplicable };

std::string ToString(CheckStatus status);

struct CheckRecord {
  std::string name;
  CheckStatus status = CheckStatus::kInapplicable;
  // Smallest margin observed; negative means a violation.
  double slack = 0.0;
  std::optional<std::size_t> first_violation_k;
  double tolerance = 0.0;
  // Fraction of indices that violated the check (bracketing only).
  double violation_fraction = 0.0;
  // Why a check is inapplicable, or what part of it was skipped.
  std::string reason;
};

struct VerificationReport {
  // Failing checks first, otherwise in submission order.
  std::vector<CheckRecord> checks;
  // kFail iff some applicable check failed.
  CheckStatus status = CheckStatus::kPass;
  // 0 all pass, 1 any failure, 2 usage error (no checks).
  int exit_code = 0;

  nlohmann::json ToJson() const;
  std::string Serialize() const;
};

inline constexpr double kExactTolerance = 1e-10;

// lower_k - se_mult*SE_k <= r_hat_k <= upper_k + se_mult*SE_k at every k.
// Exact series ignore se_mult and use kExactTolerance. Up to
// floor(max_violation_fraction * n) indices may violate the bracket.
// Throws UsageError on mismatched lengths.
CheckRecord CheckBracketing(const ErrorSeries& series,
                            const EnvelopeSeries& envelope, double se_mult,
                            double max_violation_fraction = 0.0,
                            std::string name = "");

// Compares the average of the last tail_fraction of the series with the
// asymptotic floor z0^2 and, when the rate ledger is present, with the
// closed-form limsup bound. Throws UsageError when the window has fewer
// than 50 points.
CheckRecord CheckAsymptotics(const ErrorSeries& series,
                             const TheoremConstants& c, double tail_fraction,
                             double se_mult);

// Largest violation of the one-step recursions over an exact series.
// Inapplicable for Monte-Carlo series or eta >= 1/lambda_max_0.
CheckRecord CheckRecursion(const ErrorSeries& series,
                           const TheoremConstants& c);

VerificationReport MakeReport(std::vector<CheckRecord> checks);

}  // namespace sgdlb

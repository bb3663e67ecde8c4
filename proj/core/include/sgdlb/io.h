#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgdlb/bounds.h"
#include "sgdlb/engine.h"
#include "sgdlb/problem.h"

namespace sgdlb {

// Shortest decimal string that round-trips to the same binary64 value.
// Infinities are rendered as the empty string.
std::string FormatDouble(double x);

// Inverse of FormatDouble; the empty string parses as +inf. Throws
// UsageError on malformed input.
double ParseDouble(const std::string& text);

// Problem specification:
//   {"type": "linear_regression" | "logistic_regression", "X": [[...]], "y": [...]}
//   {"type": "quartic"}
//   {"type": "synthetic_linreg", "J": 30, "d": 2, "theta_star": [...],
//    "noise_std": 0.1, "seed": 7}
// X is d x J (one column per sample), given as an array of d rows.
// Throws UsageError on schema violations.
std::unique_ptr<FiniteSumProblem> ProblemFromJson(const nlohmann::json& spec);
std::unique_ptr<FiniteSumProblem> LoadProblem(const std::string& path);
nlohmann::json LinearRegressionToJson(const LinearRegressionData& data);

nlohmann::json ToJson(const ProblemConstants& c);
nlohmann::json ToJson(const TheoremConstants& c);
TheoremConstants TheoremConstantsFromJson(const nlohmann::json& j);

// CSV with header `k,r_hat,std_err`.
void WriteSeriesCsv(std::ostream& os, const ErrorSeries& series);
// `exact` is not stored in the CSV; callers take it from the sidecar.
ErrorSeries ReadSeriesCsv(std::istream& is);
nlohmann::json SeriesMetadata(const ErrorSeries& series);

// Named envelope columns: header k,lower_<name>,upper_<name>,...
// All envelopes must share one length. +inf is written as an empty field.
using NamedEnvelope = std::pair<std::string, const EnvelopeSeries*>;
void WriteEnvelopeCsv(std::ostream& os,
                      const std::vector<NamedEnvelope>& envelopes);
// Keyed by column suffix (prop, cf, anch, ...).
std::map<std::string, EnvelopeSeries> ReadEnvelopeCsv(std::istream& is);

// CSV `trial,k,theta_1..theta_d`.
void WriteSnapshotsCsv(std::ostream& os,
                       const std::vector<ThetaSnapshot>& snapshots);

// Whole-file helpers; throw UsageError when the file cannot be opened.
std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, const std::string& contents);

}  // namespace sgdlb

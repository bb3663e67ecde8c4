#include "sgdlb/io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sgdlb/error.h"

namespace sgdlb {

namespace {

using nlohmann::json;

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ls(line);
  while (std::getline(ls, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool NextLine(std::istream& is, std::string& line) {
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

Vector VectorFromJson(const json& j, const char* what) {
  if (!j.is_array()) throw UsageError(std::string(what) + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw UsageError(std::string(what) + " must contain numbers");
    }
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json VectorToJson(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Matrix MatrixFromRows(const json& rows) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw UsageError("X must be a non-empty array of rows");
  }
  const std::size_t d = rows.size();
  const std::size_t J = rows[0].size();
  Matrix X(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(J));
  for (std::size_t i = 0; i < d; ++i) {
    const Vector row = VectorFromJson(rows[i], "X row");
    if (static_cast<std::size_t>(row.size()) != J) {
      throw UsageError("X rows must have equal length");
    }
    X.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return X;
}

const json& Require(const json& spec, const char* key) {
  if (!spec.contains(key)) {
    throw UsageError(std::string("problem spec is missing \"") + key + "\"");
  }
  return spec.at(key);
}

json OptionalNumber(const std::optional<double>& x) {
  return x ? json(*x) : json(nullptr);
}

std::optional<double> NumberOrNull(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

std::string FormatDouble(double x) {
  if (std::isinf(x)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double ParseDouble(const std::string& text) {
  if (text.empty()) return std::numeric_limits<double>::infinity();
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw UsageError("malformed number '" + text + "'");
  }
  return value;
}

std::unique_ptr<FiniteSumProblem> ProblemFromJson(const json& spec) {
  if (!spec.is_object()) throw UsageError("problem spec must be an object");
  const std::string type = Require(spec, "type").get<std::string>();
  try {
    if (type == "linear_regression" || type == "logistic_regression") {
      Matrix X = MatrixFromRows(Require(spec, "X"));
      Vector y = VectorFromJson(Require(spec, "y"), "y");
      if (type == "linear_regression") {
        return std::make_unique<LinearRegressionProblem>(
            LinearRegressionData{std::move(X), std::move(y)});
      }
      return std::make_unique<LogisticRegressionProblem>(
          LogisticRegressionData{std::move(X), std::move(y)});
    }
    if (type == "quartic") {
      return std::make_unique<QuarticProblem>(BuildQuartic());
    }
    if (type == "synthetic_linreg") {
      SyntheticLinRegConfig cfg;
      cfg.J = Require(spec, "J").get<std::size_t>();
      cfg.d = Require(spec, "d").get<std::size_t>();
      cfg.theta_star = VectorFromJson(Require(spec, "theta_star"), "theta_star");
      cfg.noise_std = Require(spec, "noise_std").get<double>();
      cfg.seed = Require(spec, "seed").get<std::uint64_t>();
      return std::make_unique<LinearRegressionProblem>(
          GenerateLinRegDataset(cfg));
    }
  } catch (const InvariantError& e) {
    throw UsageError(std::string("invalid problem data: ") + e.what());
  } catch (const json::exception& e) {
    throw UsageError(std::string("problem spec: ") + e.what());
  }
  throw UsageError("unknown problem type '" + type + "'");
}

std::unique_ptr<FiniteSumProblem> LoadProblem(const std::string& path) {
  json spec;
  try {
    spec = json::parse(ReadFile(path));
  } catch (const json::parse_error& e) {
    throw UsageError("cannot parse " + path + ": " + e.what());
  }
  return ProblemFromJson(spec);
}

json LinearRegressionToJson(const LinearRegressionData& data) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    rows.push_back(VectorToJson(data.X.row(i).transpose()));
  }
  return {{"type", "linear_regression"}, {"X", rows}, {"y", VectorToJson(data.y)}};
}

json ToJson(const ProblemConstants& c) {
  return {{"lambda_max_0", c.lambda_max_0},
          {"lambda_max_j", c.lambda_max_j},
          {"Lambda", c.Lambda},
          {"lambda_min", OptionalNumber(c.lambda_min)},
          {"D0", c.D0},
          {"theta_dagger", VectorToJson(c.theta_dagger)}};
}

json ToJson(const TheoremConstants& c) {
  json j;
  j["eta"] = c.eta;
  j["D0"] = c.D0;
  j["Lambda"] = c.Lambda;
  j["lambda_max_0"] = c.lambda_max_0;
  j["lambda_min"] = OptionalNumber(c.lambda_min);
  j["Phi"] = OptionalNumber(c.phi);
  j["alpha"] = OptionalNumber(c.alpha);
  j["z0"] = c.z0;
  j["z0_sq"] = c.z0 * c.z0;
  j["z_star"] = std::isinf(c.z_star) ? json(nullptr) : json(c.z_star);
  j["admissible"] = {
      {"one_step", c.admissible.one_step},
      {"closed_form", c.admissible.closed_form
                          ? json(*c.admissible.closed_form)
                          : json(nullptr)},
      {"asymptotic_floor", c.admissible.asymptotic_floor},
      {"small_step", c.admissible.small_step}};
  if (c.ledger) {
    const auto& L = *c.ledger;
    j["ledger"] = {{"R0", L.r0}, {"C0", L.C0}, {"C1", L.C1}, {"C2", L.C2},
                   {"C3", L.C3}, {"C4", L.C4}, {"beta", L.beta}, {"K0", L.K0}};
    const auto lim = ClosedFormLimits(c);
    j["closed_form_limits"] = {{"liminf", lim.liminf}, {"limsup", lim.limsup}};
  } else {
    j["ledger"] = nullptr;
  }
  if (c.lambda_min && c.admissible.small_step) {
    try {
      const auto refined = RefinedLimits(c);
      j["refined_limits"] = {{"liminf", refined.liminf},
                             {"limsup", refined.limsup}};
    } catch (const InapplicableError&) {
      j["refined_limits"] = nullptr;
    }
  } else {
    j["refined_limits"] = nullptr;
  }
  return j;
}

TheoremConstants TheoremConstantsFromJson(const json& j) {
  try {
    TheoremConstants c = MakeTheoremConstants(
        j.at("eta").get<double>(), j.at("D0").get<double>(),
        j.at("Lambda").get<double>(), j.at("lambda_max_0").get<double>(),
        NumberOrNull(j, "lambda_min"));
    if (j.contains("ledger") && !j.at("ledger").is_null()) {
      c = WithRateLedger(std::move(c), j.at("ledger").at("R0").get<double>());
    }
    return c;
  } catch (const json::exception& e) {
    throw UsageError(std::string("constants file: ") + e.what());
  }
}

void WriteSeriesCsv(std::ostream& os, const ErrorSeries& series) {
  os << "k,r_hat,std_err\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    os << k << ',' << FormatDouble(series.r_hat[k]) << ','
       << FormatDouble(series.std_err[k]) << '\n';
  }
}

ErrorSeries ReadSeriesCsv(std::istream& is) {
  std::string line;
  if (!NextLine(is, line) || line != "k,r_hat,std_err") {
    throw UsageError("series CSV must start with header k,r_hat,std_err");
  }
  ErrorSeries s;
  while (NextLine(is, line)) {
    const auto f = SplitCsvLine(line);
    if (f.size() != 3) throw UsageError("series CSV row needs 3 fields");
    if (ParseDouble(f[0]) != static_cast<double>(s.size())) {
      throw UsageError("series CSV rows must be k = 0, 1, 2, ...");
    }
    s.r_hat.push_back(ParseDouble(f[1]));
    s.std_err.push_back(ParseDouble(f[2]));
  }
  return s;
}

json SeriesMetadata(const ErrorSeries& series) {
  json j = {{"exact", series.exact},
            {"eta", series.eta},
            {"trials", series.trials},
            {"seed", series.seed},
            {"problem", series.problem_id},
            {"iterations", series.size() == 0 ? 0 : series.size() - 1}};
  if (series.degenerate_sample) {
    j["warning"] = "single trial: standard errors are undefined and reported as 0";
  }
  return j;
}

void WriteEnvelopeCsv(std::ostream& os,
                      const std::vector<NamedEnvelope>& envelopes) {
  if (envelopes.empty()) throw UsageError("no envelopes to write");
  const std::size_t n = envelopes.front().second->size();
  os << 'k';
  for (const auto& [name, env] : envelopes) {
    if (env->size() != n) throw UsageError("envelope lengths differ");
    os << ",lower_" << name << ",upper_" << name;
  }
  os << '\n';
  for (std::size_t k = 0; k < n; ++k) {
    os << k;
    for (const auto& [name, env] : envelopes) {
      os << ',' << FormatDouble(env->lower[k]) << ','
         << FormatDouble(env->upper[k]);
    }
    os << '\n';
  }
}

std::map<std::string, EnvelopeSeries> ReadEnvelopeCsv(std::istream& is) {
  std::string line;
  if (!NextLine(is, line)) throw UsageError("empty bounds CSV");
  const auto header = SplitCsvLine(line);
  if (header.empty() || header[0] != "k" || header.size() % 2 != 1) {
    throw UsageError("bounds CSV header must be k,lower_*,upper_*,...");
  }
  std::vector<std::string> names;
  for (std::size_t i = 1; i < header.size(); i += 2) {
    const std::string& lo = header[i];
    const std::string& hi = header[i + 1];
    if (lo.rfind("lower_", 0) != 0 || hi.rfind("upper_", 0) != 0 ||
        lo.substr(6) != hi.substr(6)) {
      throw UsageError("bounds CSV columns must come in lower_X,upper_X pairs");
    }
    names.push_back(lo.substr(6));
  }
  std::map<std::string, EnvelopeSeries> out;
  for (const auto& name : names) {
    auto& env = out[name];
    env.mode = name == "cf"     ? EnvelopeMode::kClosedForm
               : name == "anch" ? EnvelopeMode::kAnchored
                                : EnvelopeMode::kPropagated;
  }
  std::size_t row = 0;
  while (NextLine(is, line)) {
    const auto f = SplitCsvLine(line);
    if (f.size() != header.size()) {
      throw UsageError("bounds CSV row " + std::to_string(row) +
                       " has the wrong number of fields");
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
      auto& env = out[names[i]];
      const std::string& lo = f[1 + 2 * i];
      if (lo.empty()) throw UsageError("lower bound fields may not be empty");
      env.lower.push_back(ParseDouble(lo));
      env.upper.push_back(ParseDouble(f[2 + 2 * i]));
    }
    ++row;
  }
  return out;
}

void WriteSnapshotsCsv(std::ostream& os,
                       const std::vector<ThetaSnapshot>& snapshots) {
  const Eigen::Index d = snapshots.empty() ? 0 : snapshots.front().theta.size();
  os << "trial,k";
  for (Eigen::Index i = 1; i <= d; ++i) os << ",theta_" << i;
  os << '\n';
  for (const auto& s : snapshots) {
    os << s.trial << ',' << s.iteration;
    for (Eigen::Index i = 0; i < s.theta.size(); ++i) {
      os << ',' << FormatDouble(s.theta[i]);
    }
    os << '\n';
  }
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << contents;
}

}  // namespace sgdlb

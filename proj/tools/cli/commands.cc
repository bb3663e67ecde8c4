#include "commands.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "recipes.h"
#include "sgdlb/bounds.h"
#include "sgdlb/constants.h"
#include "sgdlb/engine.h"
#include "sgdlb/error.h"
#include "sgdlb/io.h"
#include "sgdlb/problem.h"
#include "sgdlb/verify.h"

namespace sgdlb::cli {

namespace {

using nlohmann::json;

struct ConstantsArgs {
  std::string spec;
  std::string out;
};

struct SimulateArgs {
  std::string spec;
  double eta = 0.0;
  std::size_t iters = 0;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  std::vector<double> theta0;
  std::string out;
  std::size_t threads = 0;
  std::vector<std::size_t> dump_theta;
};

struct BoundsArgs {
  std::string spec;
  double eta = 0.0;
  std::optional<double> r0;
  std::vector<double> theta0;
  std::optional<std::size_t> iters;
  std::string mode = "all";
  std::string series;
  std::string out;
};

struct VerifyArgs {
  std::string series;
  std::string bounds;
  std::string constants;
  double se_mult = 4.0;
  double tail = 0.2;
  double max_violation_fraction = 0.01;
  bool exact = false;
  std::string out;
};

struct ReproduceArgs {
  std::string name;
  std::string out_dir;
  bool svg = false;
  std::uint64_t seed = kDefaultRecipeSeed;
  std::size_t threads = 0;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> iters;
  std::vector<double> etas;
};

struct OracleArgs {
  std::string spec;
  double eta = 0.0;
  std::vector<double> theta0;
  std::size_t kmax = 0;
  std::string method = "enumerate";
  std::string out;
};

void RequirePositiveEta(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw UsageError("--eta must be a positive finite number");
  }
}

Vector Theta0(const std::vector<double>& values, std::size_t d) {
  if (values.empty()) return Vector::Zero(static_cast<Eigen::Index>(d));
  if (values.size() != d) {
    throw UsageError("--theta0 has " + std::to_string(values.size()) +
                     " entries but the problem has dimension " +
                     std::to_string(d));
  }
  Vector v(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return v;
}

// Writes to `path`, or to `out` when path is empty.
void Emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    WriteFile(path, text);
  }
}

int CmdConstants(const ConstantsArgs& a, std::ostream& out) {
  const auto problem = LoadProblem(a.spec);
  Emit(a.out, ToJson(ComputeConstants(*problem)).dump(2) + "\n", out);
  return kExitOk;
}

int CmdSimulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  RequirePositiveEta(a.eta);
  if (a.iters < 1) throw UsageError("--iters must be at least 1");
  if (a.trials < 1) throw UsageError("--trials must be at least 1");
  if (!a.dump_theta.empty() && a.out.empty()) {
    throw UsageError("--dump-theta needs --out");
  }
  const auto problem = LoadProblem(a.spec);
  const Vector theta_dagger = SolveOptimum(*problem);

  RunConfig cfg;
  cfg.eta = a.eta;
  cfg.iterations = a.iters;
  cfg.trials = a.trials;
  cfg.theta0 = Theta0(a.theta0, problem->dimension());
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  cfg.snapshot_iterations = a.dump_theta;
  for (std::size_t k : cfg.snapshot_iterations) {
    if (k > a.iters) throw UsageError("--dump-theta entry beyond --iters");
  }

  auto result = MonteCarloError(*problem, cfg, theta_dagger);
  result.series.problem_id = problem->name();
  if (result.series.degenerate_sample) {
    err << "warning: a single trial gives no standard error; std_err is 0\n";
  }
  std::ostringstream csv;
  WriteSeriesCsv(csv, result.series);
  Emit(a.out, csv.str(), out);
  if (!a.out.empty()) {
    WriteFile(a.out + ".json", SeriesMetadata(result.series).dump(2) + "\n");
  }
  if (!a.dump_theta.empty()) {
    std::ostringstream snaps;
    WriteSnapshotsCsv(snaps, result.snapshots);
    WriteFile(a.out + ".theta.csv", snaps.str());
  }
  return kExitOk;
}

ErrorSeries LoadSeries(const std::string& path, bool force_exact) {
  std::istringstream in(ReadFile(path));
  ErrorSeries s = ReadSeriesCsv(in);
  s.exact = force_exact;
  const std::string sidecar = path + ".json";
  if (!force_exact && std::filesystem::exists(sidecar)) {
    try {
      const json meta = json::parse(ReadFile(sidecar));
      s.exact = meta.value("exact", false);
      s.eta = meta.value("eta", 0.0);
      s.trials = meta.value("trials", std::size_t{0});
    } catch (const json::exception& e) {
      throw UsageError("series sidecar " + sidecar + ": " + e.what());
    }
  }
  if (s.exact) {
    std::fill(s.std_err.begin(), s.std_err.end(), 0.0);
  } else {
    s.degenerate_sample = s.trials == 1;
  }
  return s;
}

int CmdBounds(const BoundsArgs& a, std::ostream& out) {
  RequirePositiveEta(a.eta);
  if (a.mode != "prop" && a.mode != "cf" && a.mode != "anchored" &&
      a.mode != "all") {
    throw UsageError("--mode must be prop, cf, anchored or all");
  }
  if (a.mode == "anchored" && a.series.empty()) {
    throw UsageError("--mode anchored needs --series");
  }
  if (a.r0 && !a.theta0.empty()) {
    throw UsageError("give either --r0 or --theta0, not both");
  }
  const auto problem = LoadProblem(a.spec);
  const ProblemConstants constants = ComputeConstants(*problem);
  TheoremConstants c = MakeTheoremConstants(constants, a.eta);
  if (!c.admissible.one_step) {
    throw UsageError("step size violates " + OneStepCondition(c));
  }

  double r0 = 0.0;
  if (a.r0) {
    if (!(*a.r0 >= 0.0) || !std::isfinite(*a.r0)) {
      throw UsageError("--r0 must be finite and non-negative");
    }
    r0 = *a.r0;
  } else {
    r0 = (Theta0(a.theta0, problem->dimension()) - constants.theta_dagger)
             .squaredNorm();
  }

  std::optional<ErrorSeries> series;
  if (!a.series.empty()) series = LoadSeries(a.series, false);
  std::size_t K = 0;
  if (a.iters) {
    K = *a.iters;
    if (series && series->size() != K + 1) {
      throw UsageError("--iters does not match the length of --series");
    }
  } else if (series) {
    if (series->size() == 0) throw UsageError("--series is empty");
    K = series->size() - 1;
  } else {
    throw UsageError("--iters is required without --series");
  }

  const bool cf_ok = c.admissible.closed_form.value_or(false);
  if (cf_ok) c = WithRateLedger(c, r0);
  if (a.mode == "cf" && !cf_ok) {
    throw UsageError("closed-form rates need " + ClosedFormCondition(c));
  }

  std::optional<EnvelopeSeries> prop, cf, anch;
  if (a.mode == "prop" || a.mode == "all") prop = PropagatedEnvelopes(c, r0, K);
  if (cf_ok && (a.mode == "cf" || a.mode == "all")) {
    cf = ClosedFormEnvelopes(c, K);
  }
  if (series && (a.mode == "anchored" || a.mode == "all")) {
    anch = OneStepBounds(*series, c);
  }

  std::vector<NamedEnvelope> envs;
  if (prop) envs.emplace_back("prop", &*prop);
  if (cf) envs.emplace_back("cf", &*cf);
  if (anch) envs.emplace_back("anch", &*anch);
  std::ostringstream csv;
  WriteEnvelopeCsv(csv, envs);
  Emit(a.out, csv.str(), out);

  if (!a.out.empty()) {
    json side = ToJson(c);
    side["r0"] = r0;
    side["iterations"] = K;
    json modes = json::array();
    for (const auto& [name, env] : envs) modes.push_back(name);
    side["modes"] = modes;
    if (!cf_ok) side["closed_form_skipped"] = ClosedFormCondition(c);
    if (cf && cf->junction) {
      const auto& j = *cf->junction;
      side["junction"] = {{"k", j.k},
                          {"lower_before", j.lower_before},
                          {"upper_before", j.upper_before},
                          {"lower_after", j.lower_after},
                          {"upper_after", j.upper_after}};
    }
    WriteFile(a.out + ".json", side.dump(2) + "\n");
  }
  return kExitOk;
}

int CmdVerify(const VerifyArgs& a, std::ostream& out) {
  if (!(a.se_mult >= 0.0)) throw UsageError("--se-mult must be >= 0");
  if (!(a.tail > 0.0 && a.tail <= 1.0)) {
    throw UsageError("--tail must be in (0, 1]");
  }
  const ErrorSeries series = LoadSeries(a.series, a.exact);
  std::istringstream bounds_in(ReadFile(a.bounds));
  const auto envs = ReadEnvelopeCsv(bounds_in);
  const std::string constants_path =
      a.constants.empty() ? a.bounds + ".json" : a.constants;
  TheoremConstants c;
  try {
    c = TheoremConstantsFromJson(json::parse(ReadFile(constants_path)));
  } catch (const json::exception& e) {
    throw UsageError("constants file " + constants_path + ": " + e.what());
  }

  std::vector<CheckRecord> checks;
  const double fraction = series.exact ? 0.0 : a.max_violation_fraction;
  for (const auto& [name, env] : envs) {
    checks.push_back(CheckBracketing(series, env, a.se_mult, fraction,
                                     "bracketing_" + name));
  }
  const auto window = static_cast<std::size_t>(
      std::ceil(a.tail * static_cast<double>(series.size())));
  if (window >= 50) {
    checks.push_back(CheckAsymptotics(series, c, a.tail, a.se_mult));
  } else {
    CheckRecord r;
    r.name = "asymptotics";
    r.status = CheckStatus::kInapplicable;
    r.reason = "tail window has " + std::to_string(window) +
               " points; at least 50 are needed";
    checks.push_back(r);
  }
  checks.push_back(CheckRecursion(series, c));

  const VerificationReport report = MakeReport(std::move(checks));
  Emit(a.out, report.Serialize(), out);
  return report.exit_code;
}

int CmdReproduce(const ReproduceArgs& a, std::ostream& out) {
  const std::string dir =
      a.out_dir.empty() ? "reproduce_" + a.name : a.out_dir;
  for (double eta : a.etas) RequirePositiveEta(eta);
  if (a.name == "linreg") {
    LinRegRecipeOptions o;
    o.seed = a.seed;
    o.threads = a.threads;
    if (a.trials) o.trials = *a.trials;
    if (a.iters) o.iterations = *a.iters;
    if (a.etas.size() > 1) throw UsageError("linreg takes a single --eta");
    if (!a.etas.empty()) o.eta = a.etas.front();
    const auto result = RunLinRegRecipe(o);
    WriteLinRegArtifacts(result, dir, a.svg);
    out << result.report.Serialize();
    return result.report.exit_code;
  }
  if (a.name == "quartic") {
    QuarticRecipeOptions o;
    o.seed = a.seed;
    o.threads = a.threads;
    if (a.trials) o.trials = *a.trials;
    if (a.iters) o.iterations = *a.iters;
    o.etas = a.etas;
    const auto result = RunQuarticRecipe(o);
    WriteQuarticArtifacts(result, dir, a.svg);
    out << result.report.Serialize();
    return result.report.exit_code;
  }
  throw UsageError("unknown recipe '" + a.name + "'; expected linreg or quartic");
}

int CmdOracle(const OracleArgs& a, std::ostream& out) {
  RequirePositiveEta(a.eta);
  const auto problem = LoadProblem(a.spec);
  const Vector theta0 = Theta0(a.theta0, problem->dimension());
  ErrorSeries series;
  if (a.method == "enumerate") {
    series = ExactError(*problem, SolveOptimum(*problem), a.eta, theta0,
                        a.kmax);
  } else if (a.method == "quadratic") {
    const auto* linreg =
        dynamic_cast<const LinearRegressionProblem*>(problem.get());
    if (linreg == nullptr) {
      throw UsageError("the quadratic oracle needs a linear_regression spec");
    }
    series = ExactErrorQuadratic(*linreg, a.eta, theta0, a.kmax);
  } else {
    throw UsageError("--method must be enumerate or quadratic");
  }
  series.problem_id = problem->name();
  std::ostringstream csv;
  WriteSeriesCsv(csv, series);
  Emit(a.out, csv.str(), out);
  if (!a.out.empty()) {
    WriteFile(a.out + ".json", SeriesMetadata(series).dump(2) + "\n");
  }
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Bounds on the error of constant step-size SGD", "sgdlb"};
  app.require_subcommand(1);

  ConstantsArgs ca;
  auto* constants = app.add_subcommand("constants", "Print problem constants");
  constants->add_option("spec,--spec", ca.spec, "Problem spec JSON")
      ->required();
  constants->add_option("--out", ca.out, "Output file (default stdout)");

  SimulateArgs sa;
  auto* simulate =
      app.add_subcommand("simulate", "Monte-Carlo estimate of the SGD error");
  simulate->add_option("spec,--spec", sa.spec, "Problem spec JSON")->required();
  simulate->add_option("--eta", sa.eta, "Step size")->required();
  simulate->add_option("--iters", sa.iters, "SGD steps K")->required();
  simulate->add_option("--trials", sa.trials, "Independent trials M")
      ->capture_default_str();
  simulate->add_option("--seed", sa.seed, "Master seed")->capture_default_str();
  simulate->add_option("--theta0", sa.theta0, "Initial point, comma separated")
      ->delimiter(',');
  simulate->add_option("--out", sa.out, "Series CSV (default stdout)");
  simulate->add_option("--threads", sa.threads, "Worker threads (0 = all)");
  simulate->add_option("--dump-theta", sa.dump_theta,
                       "Iterations whose iterates are written to <out>.theta.csv")
      ->delimiter(',');

  BoundsArgs ba;
  auto* bounds = app.add_subcommand("bounds", "Bound envelopes for R_k");
  bounds->add_option("spec,--spec", ba.spec, "Problem spec JSON")->required();
  bounds->add_option("--eta", ba.eta, "Step size")->required();
  bounds->add_option("--r0", ba.r0, "Initial error R_0");
  bounds->add_option("--theta0", ba.theta0, "Initial point; R_0 = |theta0 - theta_dagger|^2")
      ->delimiter(',');
  bounds->add_option("--iters", ba.iters, "Envelope length K");
  bounds->add_option("--mode", ba.mode, "prop | cf | anchored | all")
      ->capture_default_str();
  bounds->add_option("--series,--anchored", ba.series,
                     "Series CSV for one-step anchored bounds");
  bounds->add_option("--out", ba.out, "Bounds CSV (default stdout)");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Check a series against bounds");
  verify->add_option("--series", va.series, "Series CSV")->required();
  verify->add_option("--bounds", va.bounds, "Bounds CSV")->required();
  verify->add_option("--constants", va.constants,
                     "Constants JSON (default <bounds>.json)");
  verify->add_option("--se-mult", va.se_mult, "Standard-error multiplier")
      ->capture_default_str();
  verify->add_option("--tail", va.tail, "Tail fraction for asymptotics")
      ->capture_default_str();
  verify->add_option("--max-violation-fraction", va.max_violation_fraction,
                     "Bracket violations tolerated on Monte-Carlo series")
      ->capture_default_str();
  verify->add_flag("--exact", va.exact, "Treat the series as exact");
  verify->add_option("--out", va.out, "Report JSON (default stdout)");

  ReproduceArgs ra;
  auto* reproduce =
      app.add_subcommand("reproduce", "Run a built-in experiment recipe");
  reproduce->add_option("name", ra.name, "linreg | quartic")->required();
  reproduce->add_option("--out-dir", ra.out_dir, "Output directory");
  reproduce->add_flag("--svg", ra.svg, "Also write SVG charts");
  reproduce->add_option("--seed", ra.seed, "Master seed")->capture_default_str();
  reproduce->add_option("--threads", ra.threads, "Worker threads (0 = all)");
  reproduce->add_option("--trials", ra.trials, "Override trial count");
  reproduce->add_option("--iters", ra.iters, "Override iteration count");
  reproduce->add_option("--eta", ra.etas, "Override step size(s)")
      ->delimiter(',');

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle", "Exact R_k without sampling");
  oracle->add_option("spec,--spec", oa.spec, "Problem spec JSON")->required();
  oracle->add_option("--eta", oa.eta, "Step size")->required();
  oracle->add_option("--theta0", oa.theta0, "Initial point")->delimiter(',');
  oracle->add_option("--kmax", oa.kmax, "Last iteration")->required();
  oracle->add_option("--method", oa.method, "enumerate | quadratic")
      ->capture_default_str();
  oracle->add_option("--out", oa.out, "Series CSV (default stdout)");

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("sgdlb");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_storage) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*constants) return CmdConstants(ca, out);
    if (*simulate) return CmdSimulate(sa, out, err);
    if (*bounds) return CmdBounds(ba, out);
    if (*verify) return CmdVerify(va, out);
    if (*reproduce) return CmdReproduce(ra, out);
    if (*oracle) return CmdOracle(oa, out);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitViolation;
  } catch (const MonteCarloDivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitViolation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace sgdlb::cli

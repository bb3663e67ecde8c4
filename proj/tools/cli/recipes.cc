#include "recipes.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "sgdlb/constants.h"
#include "sgdlb/io.h"
#include "sgdlb/rng.h"
#include "svg.h"

namespace sgdlb::cli {

namespace {

using nlohmann::json;

double TailAverage(const ErrorSeries& s, double fraction) {
  const std::size_t n = s.size();
  const auto window = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n)));
  if (window == 0 || window > n) return 0.0;
  double sum = 0.0;
  for (std::size_t k = n - window; k < n; ++k) sum += s.r_hat[k];
  return sum / static_cast<double>(window);
}

CheckRecord Inapplicable(std::string name, std::string reason) {
  CheckRecord r;
  r.name = std::move(name);
  r.status = CheckStatus::kInapplicable;
  r.reason = std::move(reason);
  return r;
}

CheckRecord Renamed(CheckRecord r, std::string name) {
  r.name = std::move(name);
  return r;
}

double Median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
  }
  return m;
}

std::string SeriesCsv(const ErrorSeries& s) {
  std::ostringstream os;
  WriteSeriesCsv(os, s);
  return os.str();
}

std::string BoundsCsv(const std::vector<NamedEnvelope>& envs) {
  std::ostringstream os;
  WriteEnvelopeCsv(os, envs);
  return os.str();
}

std::vector<double> Iota(std::size_t n) {
  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = static_cast<double>(i);
  return k;
}

// Keeps at most ~max_points evenly strided entries (plus the last one).
LineSeries Thin(LineSeries s, std::size_t max_points = 2000) {
  const std::size_t n = s.x.size();
  if (n <= max_points) return s;
  const std::size_t stride = (n + max_points - 1) / max_points;
  LineSeries out = s;
  out.x.clear();
  out.y.clear();
  for (std::size_t i = 0; i < n; i += stride) {
    out.x.push_back(s.x[i]);
    out.y.push_back(s.y[i]);
  }
  out.x.push_back(s.x.back());
  out.y.push_back(s.y.back());
  return out;
}

LineSeries Rule(std::string label, double value, std::size_t n,
                std::string color) {
  LineSeries s;
  s.label = std::move(label);
  s.x = {0.0, static_cast<double>(n - 1)};
  s.y = {value, value};
  s.color = std::move(color);
  s.dashed = true;
  return s;
}

LineSeries Curve(std::string label, const std::vector<double>& y,
                 std::string color, bool dashed = false) {
  LineSeries s;
  s.label = std::move(label);
  s.x = Iota(y.size());
  s.y = y;
  s.color = std::move(color);
  s.dashed = dashed;
  return Thin(std::move(s));
}

json ProblemSpecJson(const LinRegRecipeOptions& o) {
  return {{"type", "synthetic_linreg"},
          {"J", 30},
          {"d", 2},
          {"theta_star", {-1.27, -0.49}},
          {"noise_std", 0.1},
          {"seed", o.seed}};
}

std::string EtaLabel(double eta, double derived_eta) {
  if (eta == kQuarticReferenceEta) return "reference_eta";
  if (eta == derived_eta) return "derived_eta";
  return "eta" + FormatDouble(eta);
}

std::string Theta0Label(double theta0) {
  return (theta0 < 0 ? "m" : "p") + FormatDouble(std::fabs(theta0));
}

}  // namespace

LinRegRecipeResult RunLinRegRecipe(const LinRegRecipeOptions& options) {
  LinRegRecipeResult r;
  r.options = options;

  SyntheticLinRegConfig cfg;
  cfg.J = 30;
  cfg.d = 2;
  cfg.theta_star = Vector(2);
  cfg.theta_star << -1.27, -0.49;
  cfg.noise_std = 0.1;
  cfg.seed = options.seed;
  r.data = GenerateLinRegDataset(cfg);
  const LinearRegressionProblem problem(r.data);
  r.constants = ComputeConstants(problem);

  const Vector theta0 = Vector::Zero(2);
  const double r0 = (theta0 - r.constants.theta_dagger).squaredNorm();
  r.theorem = MakeTheoremConstants(r.constants, options.eta);
  if (r.theorem.admissible.closed_form.value_or(false)) {
    r.theorem = WithRateLedger(r.theorem, r0);
    r.closed_form = ClosedFormEnvelopes(r.theorem, options.iterations);
  }
  r.propagated = PropagatedEnvelopes(r.theorem, r0, options.iterations);

  RunConfig run;
  run.eta = options.eta;
  run.iterations = options.iterations;
  run.trials = options.trials;
  run.theta0 = theta0;
  run.seed = Mix64(options.seed);
  run.threads = options.threads;
  for (std::size_t k : {10, 100, 1000, 10000, 50000}) {
    if (k <= options.iterations) run.snapshot_iterations.push_back(k);
  }
  r.mc = MonteCarloError(problem, run, r.constants.theta_dagger);
  r.mc.series.problem_id = "linreg_recipe";
  r.anchored = OneStepBounds(r.mc.series, r.theorem);
  r.tail_average = TailAverage(r.mc.series, options.tail_fraction);

  const auto& s = r.mc.series;
  std::vector<CheckRecord> checks;
  checks.push_back(CheckBracketing(s, r.anchored, options.se_mult,
                                   options.max_violation_fraction,
                                   "bracketing_anch"));
  checks.push_back(CheckBracketing(s, r.propagated, options.se_mult,
                                   options.max_violation_fraction,
                                   "bracketing_prop"));
  if (r.closed_form) {
    checks.push_back(CheckBracketing(s, *r.closed_form, options.se_mult,
                                     options.max_violation_fraction,
                                     "bracketing_cf"));
  } else {
    checks.push_back(
        Inapplicable("bracketing_cf", ClosedFormCondition(r.theorem)));
  }
  checks.push_back(
      CheckAsymptotics(s, r.theorem, options.tail_fraction, options.se_mult));
  checks.push_back(CheckRecursion(s, r.theorem));
  r.report = MakeReport(std::move(checks));
  return r;
}

QuarticRecipeResult RunQuarticRecipe(const QuarticRecipeOptions& options) {
  QuarticRecipeResult r;
  r.options = options;
  const QuarticProblem problem(BuildQuartic());
  r.constants = ComputeConstants(problem);
  const double derived_eta = 1.0 / (4.0 * r.constants.lambda_max_0);
  if (r.options.etas.empty()) r.options.etas = {kQuarticReferenceEta, derived_eta};

  std::vector<CheckRecord> checks;
  for (double eta : r.options.etas) {
    for (double t0 : r.options.theta0s) {
      QuarticRun run;
      run.eta = eta;
      run.theta0 = t0;
      run.tag = EtaLabel(eta, derived_eta) + "_theta0_" + Theta0Label(t0);
      run.theorem = MakeTheoremConstants(r.constants, eta);

      RunConfig cfg;
      cfg.eta = eta;
      cfg.iterations = options.iterations;
      cfg.trials = options.trials;
      cfg.theta0 = Vector::Constant(1, t0);
      cfg.seed = Mix64(options.seed);
      cfg.threads = options.threads;
      cfg.snapshot_iterations = {options.iterations};
      run.mc = MonteCarloError(problem, cfg, r.constants.theta_dagger);
      run.mc.series.problem_id = "quartic_recipe";
      run.tail_average = TailAverage(run.mc.series, options.tail_fraction);

      for (const auto& snap : run.mc.snapshots) {
        run.final_theta.push_back(snap.theta[0]);
      }
      std::size_t trapped = 0;
      for (double th : run.final_theta) {
        if (std::fabs(th - kQuarticLocalMinimum) < options.trap_radius) {
          ++trapped;
        }
      }
      run.trap_fraction = run.final_theta.empty()
                              ? 0.0
                              : static_cast<double>(trapped) /
                                    static_cast<double>(run.final_theta.size());
      run.median_final_theta = Median(run.final_theta);

      const auto& s = run.mc.series;
      const std::string suffix = "[" + run.tag + "]";
      if (run.theorem.admissible.one_step) {
        const double r0 =
            (cfg.theta0 - r.constants.theta_dagger).squaredNorm();
        run.propagated = PropagatedEnvelopes(run.theorem, r0,
                                             options.iterations);
        run.anchored = OneStepBounds(s, run.theorem);
        checks.push_back(CheckBracketing(s, *run.anchored, options.se_mult,
                                         options.max_violation_fraction,
                                         "bracketing_anch" + suffix));
      } else {
        checks.push_back(Inapplicable("bracketing_anch" + suffix,
                                      OneStepCondition(run.theorem)));
      }
      checks.push_back(Renamed(CheckAsymptotics(s, run.theorem,
                                                options.tail_fraction,
                                                options.se_mult),
                               "asymptotics" + suffix));

      if (t0 > kQuarticLocalMinimum) {
        const std::string name = "trap" + suffix;
        if (run.theorem.admissible.one_step) {
          CheckRecord trap;
          trap.name = name;
          trap.tolerance = options.trap_radius;
          const double median_gap =
              options.trap_radius -
              std::fabs(run.median_final_theta - kQuarticLocalMinimum);
          trap.slack = std::min(run.trap_fraction - 0.5, median_gap);
          trap.status = run.trap_fraction > 0.5 && median_gap > 0.0
                            ? CheckStatus::kPass
                            : CheckStatus::kFail;
          checks.push_back(trap);
        } else {
          checks.push_back(Inapplicable(
              name, OneStepCondition(run.theorem) +
                        "; trap statistics reported in the summary only"));
        }
      }
      r.runs.push_back(std::move(run));
    }
  }
  r.report = MakeReport(std::move(checks));
  return r;
}

void WriteLinRegArtifacts(const LinRegRecipeResult& r,
                          const std::string& out_dir, bool svg) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto path = [&](const std::string& f) {
    return (fs::path(out_dir) / f).string();
  };

  json problem = LinearRegressionToJson(r.data);
  problem["generator"] = ProblemSpecJson(r.options);
  WriteFile(path("problem.json"), problem.dump(2) + "\n");
  WriteFile(path("constants.json"), ToJson(r.constants).dump(2) + "\n");
  WriteFile(path("theorem.json"), ToJson(r.theorem).dump(2) + "\n");
  WriteFile(path("series.csv"), SeriesCsv(r.mc.series));
  WriteFile(path("series.csv.json"),
            SeriesMetadata(r.mc.series).dump(2) + "\n");
  {
    std::ostringstream os;
    WriteSnapshotsCsv(os, r.mc.snapshots);
    WriteFile(path("theta.csv"), os.str());
  }
  std::vector<NamedEnvelope> envs = {{"prop", &r.propagated}};
  if (r.closed_form) envs.emplace_back("cf", &*r.closed_form);
  envs.emplace_back("anch", &r.anchored);
  WriteFile(path("bounds.csv"), BoundsCsv(envs));
  WriteFile(path("report.json"), r.report.Serialize());

  const double z0_sq = r.theorem.z0 * r.theorem.z0;
  json summary = {{"recipe", "linreg"},
                  {"seed", r.options.seed},
                  {"eta", r.options.eta},
                  {"iterations", r.options.iterations},
                  {"trials", r.options.trials},
                  {"tail_fraction", r.options.tail_fraction},
                  {"tail_average", r.tail_average},
                  {"z0_sq", z0_sq},
                  {"status", ToString(r.report.status)},
                  {"exit_code", r.report.exit_code}};
  summary["theta_dagger"] = {r.constants.theta_dagger[0],
                             r.constants.theta_dagger[1]};
  if (r.theorem.ledger) {
    summary["closed_form_limsup"] = ClosedFormLimits(r.theorem).limsup;
  }
  if (r.theorem.admissible.small_step && r.theorem.lambda_min) {
    summary["refined_limsup"] = RefinedLimits(r.theorem).limsup;
  }
  WriteFile(path("summary.json"), summary.dump(2) + "\n");

  if (!svg) return;
  const std::size_t n = r.mc.series.size();
  std::vector<LineSeries> lines = {
      Curve("r_hat", r.mc.series.r_hat, "#1f77b4"),
      Curve("anchored lower", r.anchored.lower, "#2ca02c", true),
      Curve("anchored upper", r.anchored.upper, "#d62728", true),
      Rule("z0^2", z0_sq, n, "#7f7f7f")};
  if (r.theorem.ledger) {
    lines.push_back(
        Rule("limsup bound", ClosedFormLimits(r.theorem).limsup, n, "#9467bd"));
  }
  WriteFile(path("error_curve.svg"),
            RenderLineChart("SGD error, linear regression", lines, true));

  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b"};
  std::vector<ScatterGroup> groups;
  for (const auto& snap : r.mc.snapshots) {
    const std::string label = "k=" + std::to_string(snap.iteration);
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.label == label; });
    if (it == groups.end()) {
      ScatterGroup g;
      g.label = label;
      g.color = kColors[groups.size() % std::size(kColors)];
      groups.push_back(std::move(g));
      it = std::prev(groups.end());
    }
    it->x.push_back(snap.theta[0]);
    it->y.push_back(snap.theta[1]);
  }
  WriteFile(path("scatter.svg"),
            RenderScatter("SGD iterates, linear regression", groups));
}

void WriteQuarticArtifacts(const QuarticRecipeResult& r,
                           const std::string& out_dir, bool svg) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto path = [&](const std::string& f) {
    return (fs::path(out_dir) / f).string();
  };

  WriteFile(path("problem.json"), json{{"type", "quartic"}}.dump(2) + "\n");
  WriteFile(path("constants.json"), ToJson(r.constants).dump(2) + "\n");
  json runs = json::array();
  for (const auto& run : r.runs) {
    WriteFile(path("series_" + run.tag + ".csv"), SeriesCsv(run.mc.series));
    WriteFile(path("series_" + run.tag + ".csv.json"),
              SeriesMetadata(run.mc.series).dump(2) + "\n");
    WriteFile(path("theorem_" + run.tag + ".json"),
              ToJson(run.theorem).dump(2) + "\n");
    {
      std::ostringstream os;
      WriteSnapshotsCsv(os, run.mc.snapshots);
      WriteFile(path("theta_" + run.tag + ".csv"), os.str());
    }
    if (run.propagated && run.anchored) {
      WriteFile(path("bounds_" + run.tag + ".csv"),
                BoundsCsv({{"prop", &*run.propagated},
                           {"anch", &*run.anchored}}));
    }
    runs.push_back({{"tag", run.tag},
                    {"eta", run.eta},
                    {"theta0", run.theta0},
                    {"one_step_admissible", run.theorem.admissible.one_step},
                    {"z0_sq", run.theorem.z0 * run.theorem.z0},
                    {"tail_average", run.tail_average},
                    {"trap_fraction", run.trap_fraction},
                    {"median_final_theta", run.median_final_theta}});
  }
  WriteFile(path("report.json"), r.report.Serialize());
  const json summary = {{"recipe", "quartic"},
                        {"seed", r.options.seed},
                        {"iterations", r.options.iterations},
                        {"trials", r.options.trials},
                        {"lambda_max_0", r.constants.lambda_max_0},
                        {"runs", runs},
                        {"status", ToString(r.report.status)},
                        {"exit_code", r.report.exit_code}};
  WriteFile(path("summary.json"), summary.dump(2) + "\n");

  if (!svg) return;
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"};
  for (double eta : r.options.etas) {
    std::vector<LineSeries> lines;
    std::string label;
    double z0_sq = 0.0;
    std::size_t n = 0;
    for (const auto& run : r.runs) {
      if (run.eta != eta) continue;
      label = run.tag.substr(0, run.tag.find("_theta0_"));
      z0_sq = run.theorem.z0 * run.theorem.z0;
      n = run.mc.series.size();
      lines.push_back(Curve("theta0=" + FormatDouble(run.theta0),
                            run.mc.series.r_hat,
                            kColors[lines.size() % std::size(kColors)]));
    }
    if (lines.empty()) continue;
    lines.push_back(Rule("z0^2", z0_sq, n, "#7f7f7f"));
    WriteFile(path("error_" + label + ".svg"),
              RenderLineChart("SGD error, quartic, eta=" + FormatDouble(eta),
                              lines, true));
  }
}

}  // namespace sgdlb::cli

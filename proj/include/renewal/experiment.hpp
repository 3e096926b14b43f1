#pragma once

// End-to-end pipeline behind the CLI: resolve a RunConfig, compute the
// bounds, simulate the coupled pair with the same parameters and compare.
// Reports are plain data with JSON/CSV writers; identical config and seed
// give byte-identical output.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "renewal/bounds.hpp"
#include "renewal/config.hpp"
#include "renewal/simulation.hpp"

namespace renewal {

struct BoundReport {
  RunConfig config;  // "auto" fields resolved: threshold fixed, beta filled in when admissible
  ThresholdMode threshold_source;
  bool beta_auto;
  LawPtr law;
  double xi_mean;
  KappaTheta kappa;
  CouplingParams params;
  std::vector<PolyBound> poly;
  std::optional<BetaSearch> beta_search;  // empty when no positive rate is admissible
  std::string beta_note;                  // why beta_search is empty
  std::vector<MgfBound> mgf;
  std::vector<ExpBound> exp;
  std::optional<ExampleDiagnostics> example;
  std::vector<TvCurve> tv_curves;  // poly curves in ell order, then exp curves in beta order
};

struct MomentEstimate {
  Functional kind;
  double order;
  Estimate estimate;
};

struct SimReport {
  std::uint64_t seed;
  std::size_t replicas;
  std::vector<double> tau_samples;
  AttemptStats stats;
  std::vector<MomentEstimate> moments;
  std::vector<TvEstimate> empirical_tv;
  std::optional<LordenCheck> lorden;
};

/// One comparison of a Monte Carlo estimate with its bound. Gating verdicts
/// decide the `verify` exit status; the others are diagnostics.
struct Verdict {
  std::string name;
  double estimate;
  double std_error;
  double bound;
  double margin;  // allowance for Monte Carlo error: 3 std_error, or the TV noise floor
  bool pass;
  bool gating;
};

/// Resolves Theta and beta and computes every bound. Throws ConfigError
/// (naming the field) when the config is inadmissible for the law.
BoundReport compute_bounds(const RunConfig& config);

struct SimulationParts {
  bool tau = true;
  bool tv = true;
  bool lorden = true;
};

SimReport run_simulation(const BoundReport& bounds, const SimulationParts& parts = {});

std::vector<Verdict> dominance_verdicts(const BoundReport& bounds, const SimReport& sim);
bool all_gating_pass(const std::vector<Verdict>& verdicts);

struct ExperimentReport {
  BoundReport bounds;
  SimReport sim;
  std::vector<Verdict> verdicts;
};

ExperimentReport run_experiment(const RunConfig& config);

nlohmann::json to_json(const BoundReport& report);
nlohmann::json to_json(const SimReport& report, const std::vector<Verdict>& verdicts = {});

/// `t,analytic_bound,empirical_tv`, 17 significant digits; the empirical
/// column is empty when `sim` carries no TV estimates.
std::string tv_curve_csv(const BoundReport& bounds, const SimReport* sim);
std::string tau_csv(const SimReport& sim);

/// Structural and numerical checks on an emitted report (bounds.json,
/// sim.json or tv_curve.csv, selected by `kind`). Returns the problems found.
std::vector<std::string> check_report(const std::string& kind, const std::string& text);

/// Formats a double with 17 significant digits.
std::string format_double(double x);

}  // namespace renewal

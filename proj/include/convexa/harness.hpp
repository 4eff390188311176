#pragma once

#include "convexa/spec_json.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace convexa {

enum class Check {
  sandwich,
  santalo,
  vk_monotone,
  zq_inclusions,
  zn_equiv,
  zq_vrad_scaling,
  MZq_scaling,
  thm42_witness,
  thm31_covering,
  lemma61_profile,
  psi_alpha_suite,
  conditional_suite,
  low_mstar_crosscheck,
};

std::string to_string(Check check);
/// ConfigError for unknown names.
Check check_from_string(const std::string& name);
const std::vector<Check>& all_checks();

enum class Verdict { pass, fail, inconclusive };
std::string to_string(Verdict v);

struct Budgets {
  std::size_t sphere_samples = 20000;
  std::size_t measure_samples = 20000;
  std::size_t subspace_trials = 8;
  std::size_t dirs = 64;
};

struct TolerancePolicy {
  double ci_sigma = 3.0;
  /// Inclusive q range used by slope and stability fits; unset = whole grid.
  std::optional<double> fit_q_min, fit_q_max;
  /// Allowed |slope - 1/2| for the Z_q volume-radius law; unset picks 0.05
  /// for closed-form families and 0.1 for sampled ones.
  std::optional<double> slope_slack;
  /// Upper limit on the log-log slope of M(Z_q).
  double mzq_slope_max = -0.15;
  /// Fitted constants must agree within this factor over the grid's upper half.
  double stability_factor = 3.0;
  /// Relative allowance for extremal-search error in monotonicity checks.
  double search_rel = 0.02;
  /// Exponent alpha for psi_alpha_suite.
  double alpha = 2.0;
};

/// One experiment. The subject is {"body": spec} or {"measure": spec}; the
/// string "$n" anywhere inside the spec is replaced by each value of n_list,
/// and {"family": "random_ellipsoid" | "random_linear_image", ...} generates
/// a random body from the grid point's stream.
struct ExperimentConfig {
  std::string experiment_id;
  Check check = Check::sandwich;
  Json subject;
  std::vector<std::size_t> n_list, k_list;
  std::vector<double> q_list;
  Budgets budgets;
  std::uint64_t seed = 0;
  TolerancePolicy tolerance;
};

/// {"seed": s, "experiments": [...]} or a single experiment object, or an
/// array of experiments. Per-experiment "seed" falls back to the top-level
/// one; seed_override (the CLI's --seed) replaces both. Subjects are built
/// once here so malformed specs fail as ConfigError before anything runs.
std::vector<ExperimentConfig> parse_experiments(const Json& config, std::optional<std::uint64_t> seed_override = {});

struct ReportRecord {
  std::string experiment_id;
  std::string check;
  std::string subject_digest;
  Json grid_point;
  Json measured;  // EstimateCI object, or null when nothing is measured
  Json bound;     // BoundValue object or a reference EstimateCI
  std::optional<double> fitted_constant;
  Verdict verdict = Verdict::inconclusive;
  double runtime_ms = 0.0;
  std::uint64_t seed = 0;
  Json notes = Json::object();
};

Json to_json(const ReportRecord& r, bool include_runtime = true);

/// Runs every grid point of the experiment (concurrently when there are at
/// least as many points as workers) and appends any cross-grid summary
/// records. Errors at a grid point become an inconclusive record carrying
/// the message.
std::vector<ReportRecord> run(const ExperimentConfig& config);

void write_jsonl(std::ostream& os, const std::vector<ReportRecord>& records);
/// experiment_id,check,grid_point,measured,bound,fitted_constant,verdict
void write_summary_csv(std::ostream& os, const std::vector<ReportRecord>& records);

/// a <= b judged at k combined standard errors: fail when b - a < -k se,
/// inconclusive when |b - a| < k se, pass otherwise.
Verdict compare_le(const EstimateCI& a, const EstimateCI& b, double k_sigma);

/// Least-squares slope of log y against log x with its propagated standard
/// error (from the relative errors of y).
struct SlopeFit {
  double slope = 0.0;
  double std_err = 0.0;
};
SlopeFit loglog_slope(const std::vector<double>& x, const std::vector<EstimateCI>& y);

/// Fitted values of a monotone (non-increasing when decreasing = true) isotonic
/// least-squares fit, via pool-adjacent-violators.
std::vector<double> isotonic_fit(const std::vector<double>& y, bool decreasing);

}  // namespace convexa

#pragma once

// Benchmark harness: suites of random instances, multi-solver runs,
// optimality adjudication and Dolan-More performance profiles.

#include "rsscsm/errors.hpp"
#include "rsscsm/objectives.hpp"
#include "rsscsm/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rsscsm {

/// Known solver ids: "rsscsm" and "subgradient".
const std::vector<std::string>& known_solvers();

struct SolverOverrides {
  std::optional<double> epsilon_stop;
  std::optional<int> max_iters;
  std::optional<int> max_null_steps;
  std::optional<double> tau_hi_init;
  std::optional<double> interval_tol;

  SolverConfig apply(SolverConfig cfg) const;
};

struct ProblemSize {
  int n = 0;
  int m = 0;
  friend bool operator==(const ProblemSize&, const ProblemSize&) = default;
};

struct SuiteSpec {
  ProblemKind problem = ProblemKind::Rayleigh;
  std::vector<ProblemSize> sizes;
  int runs = 10;
  std::uint64_t base_seed = 0;
  std::vector<std::string> solvers{"rsscsm"};
  std::map<std::string, SolverOverrides> overrides;

  /// Throws ContractViolation (runs < 1, unknown solver) or EmptySuite (no sizes).
  void validate() const;
};

/// JSON: {"problem": "rayleigh", "sizes": [[n, m], ...], "runs": 10,
///        "base_seed": 0, "solvers": [...], "overrides": {"rsscsm": {...}}}
SuiteSpec suite_from_json(const std::string& text);
std::string suite_to_json(const SuiteSpec& spec);

/// Replaces base_seed with $RSSCSM_SEED when that variable is set.
void apply_seed_override(SuiteSpec& spec);

struct BenchmarkRecord {
  std::string problem_id;
  std::string problem;
  int n = 0;
  int m = 0;
  std::string solver;
  std::uint64_t seed = 0;
  std::int64_t iters = 0;
  std::int64_t nf = 0;
  double wall_time_s = 0.0;
  double final_f = 0.0;
  bool solved = false;
  /// "ok", "stall" or "error".
  std::string status = "ok";

  friend bool operator==(const BenchmarkRecord&, const BenchmarkRecord&) = default;
};

/// Solved iff 0 <= (f - f_opt) / (|f_opt| + 1) <= 1e-7.
bool within_optimality(double f, double f_opt);

/// Sets `solved` on every record for one problem and returns f_opt, the best
/// final value among records that finished. Failed records are unsolved.
/// std::nullopt when no record finished.
std::optional<double> adjudicate(std::vector<BenchmarkRecord*>& records);
/// Groups by problem_id and adjudicates each group.
void adjudicate_all(std::vector<BenchmarkRecord>& records);

/// Times below this are raised to it before forming ratios.
inline constexpr double kTimeFloor = 1e-9;

struct ProfileCurve {
  std::string solver;
  /// r_{p,s} for every problem, ascending; +inf for unsolved.
  std::vector<double> ratios;
  /// Sampled (tau, rho) pairs: log-spaced on [1, tau_max] plus every
  /// finite breakpoint, ascending in tau.
  std::vector<std::pair<double, double>> points;

  /// Exact step function value.
  double rho(double tau) const;
};

struct ProfileOptions {
  int samples = 50;
  /// Defaults to the largest finite ratio (at least 2).
  std::optional<double> tau_max;
};

/// Throws EmptySuite on an empty record set. Records must be adjudicated.
std::vector<ProfileCurve> performance_profile(const std::vector<BenchmarkRecord>& records,
                                              const ProfileOptions& opt = {});

struct SummaryRow {
  ProblemSize size;
  std::string solver;
  int runs = 0;
  int solved = 0;
  int failed = 0;
  double mean_iters = 0.0;
  double mean_nf = 0.0;
  double mean_time_s = 0.0;
};

std::vector<SummaryRow> summarize(const std::vector<BenchmarkRecord>& records);
std::string summary_to_json(const SuiteSpec& spec, const std::vector<SummaryRow>& rows);

struct RunOptions {
  int jobs = 1;
  /// When set, trajectories and IRP traces are written here.
  std::optional<std::filesystem::path> trace_dir;
};

struct SuiteResult {
  std::vector<BenchmarkRecord> records;
  std::vector<ProfileCurve> profiles;
  std::vector<SummaryRow> summary;
};

/// Deterministic apart from timing: problem index i uses seed base_seed + i
/// for the instance, the starting point and the solver's random direction.
SuiteResult run_suite(const SuiteSpec& spec, const RunOptions& opt = {});

/// Starting point used for the instance with this seed.
ManifoldPoint starting_point(const ManifoldKind& kind, std::uint64_t seed);

void write_records_csv(std::ostream& os, const std::vector<BenchmarkRecord>& records);
std::vector<BenchmarkRecord> read_records_csv(std::istream& is);
/// Columns solver,tau,rho.
void write_profile_csv(std::ostream& os, const std::vector<ProfileCurve>& curves);

}  // namespace rsscsm

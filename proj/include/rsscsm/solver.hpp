#pragma once

// Riemannian semismooth conjugate subgradient method and a plain Riemannian
// subgradient baseline sharing the same state and trajectory schema.

#include "rsscsm/errors.hpp"
#include "rsscsm/linesearch.hpp"
#include "rsscsm/manifold.hpp"
#include "rsscsm/objectives.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rsscsm {

struct SolverConfig {
  /// Stop once |eta_{k+1}| <= epsilon_stop.
  double epsilon_stop = 1e-8;
  /// Maximum number of line searches (iterations).
  int max_iters = 10000;
  /// Stop after this many consecutive null steps.
  int max_null_steps = 50;
  LineSearchConfig ls;
  /// Seeds the random direction used to pick the first subgradient.
  std::uint64_t direction_seed = 0;
  /// Keep x_k, eta_k and g~_k for every iteration (needed by the FR replay).
  bool keep_iterates = false;

  void validate() const;
};

enum class StopReason { Converged, MaxIterations, NullSteps };
std::string to_string(StopReason r);

struct SolverStats {
  std::int64_t iters = 0;
  std::int64_t nf = 0;
  std::int64_t ng = 0;
  std::int64_t ls_calls = 0;
  std::int64_t null_steps = 0;
  double wall_time_s = 0.0;
};

struct SolverState {
  int k;
  ManifoldPoint x;
  TangentVector eta;
  TangentVector g_tilde;
  double t_prev;
  double f_x;
  SolverStats stats;
  StopReason stop;
};

/// Scalars from the line search started at x_k.
struct LineSearchSummary {
  LineSearchBranch branch = LineSearchBranch::Null;
  IrpTermination termination = IrpTermination::Exact;
  double phi0 = 0.0;
  double phi_t = 0.0;
  double dplus0 = 0.0;
  double dminus0 = 0.0;
  double t_minus = 0.0;
  double t_plus = 0.0;
  double dminus_at_t_minus = 0.0;
  double dplus_at_t_plus = 0.0;
  int irp_iterations = 0;
  bool tau_hi_clamped = false;
  bool hit_upper_bound = false;
};

/// Record k describes x_k, eta_k and g~_k, plus the line search from x_k
/// (absent on the terminal record). Fields tied to the update that built
/// eta_k from eta_{k-1} are absent for k = 1.
struct IterationRecord {
  int k = 0;
  double f = 0.0;
  double eta_norm = 0.0;
  double gtilde_norm = 0.0;
  std::optional<double> t;
  std::optional<double> lambda;
  std::optional<double> alpha;
  bool null_step = false;
  std::int64_t nf_cum = 0;
  double time_cum_s = 0.0;

  std::optional<double> transported_norm;  ///< |T eta_{k-1}|
  /// <g~_k, T eta_{k-1}> as produced by the lambda combination.
  std::optional<double> orth;
  /// The endpoint pairings did not bracket zero inside a reduced bracket
  /// (rounding), so the component of g~_k along T eta_{k-1} was removed
  /// after the combination. Not applied after a boundary-truncated search.
  bool projected = false;
  std::optional<double> ip_plus;           ///< <g_+, T eta_{k-1}>
  std::optional<double> ip_minus;          ///< <g_-, T eta_{k-1}>
  std::optional<LineSearchSummary> ls;
};

struct IterateSnapshot {
  ManifoldPoint x;
  TangentVector eta;
  TangentVector g_tilde;
  std::optional<double> t;
};

struct Trajectory {
  std::string solver;
  std::vector<IterationRecord> records;
  /// Filled when SolverConfig::keep_iterates is set.
  std::vector<IterateSnapshot> iterates;
};

struct SolveResult {
  SolverState state;
  Trajectory trajectory;
};

/// Line-search failure inside a solve, with the state reached so far.
class SolverStall : public Error {
 public:
  SolverStall(const std::string& what, SolverState s, Trajectory t)
      : Error(what), state(std::move(s)), trajectory(std::move(t)) {}
  SolverState state;
  Trajectory trajectory;
};

struct DirectionUpdate {
  double lambda = 0.5;
  double alpha = 0.0;
  double cos2_theta = 0.0;
  double inner_gplus_d = 0.0;
  double inner_gminus_d = 0.0;
};

/// lambda = ip+ / (ip+ - ip-), or 1/2 when the two pairings coincide
/// (|ip+ - ip-| <= 1e-14 (1 + |ip+| + |ip-|)). Clamped to [0, 1].
double select_lambda(double ip_plus, double ip_minus);

/// ip- <= 0 <= ip+. When this fails no convex combination of g+ and g- is
/// orthogonal to d.
bool pairings_straddle_zero(double ip_plus, double ip_minus);

/// lambda g_- + (1 - lambda) g_+.
TangentVector combine_subgradient(const TangentVector& g_plus, const TangentVector& g_minus,
                                  double lambda);

struct DirectionStep {
  TangentVector eta;
  double alpha;
  double cos2_theta;
  /// Both inputs were zero; eta is zero and the caller should stop.
  bool degenerate;
};

/// Minimum-norm element of the segment [-g~, d]:
///   alpha = |d|^2 / (|g~|^2 + |d|^2),  eta = -alpha g~ + (1 - alpha) d.
/// Assumes <g~, d> = 0.
DirectionStep direction_update(const TangentVector& g_tilde, const TangentVector& d);

/// Runs the method from x0. Throws SolverStall if a line search stalls.
SolveResult rsscsm_solve(const Objective& f, const ManifoldPoint& x0, const SolverConfig& cfg,
                         const IrpTraceSink& trace = {});

/// x_{k+1} = R(x_k, -t_k g_k), t_k = c / sqrt(k), c = 1 / (1 + |g_1|).
/// Stops when |g_k| <= epsilon_stop or after max_iters steps. The returned
/// state holds the best iterate seen.
SolveResult baseline_subgradient_solve(const Objective& f, const ManifoldPoint& x0,
                                       const SolverConfig& cfg);

/// Replays the nonsmooth Fletcher-Reeves recursion along a trajectory with
/// iterates and returns
///   max_k | |eta_k|^2 eta_k^FR - |g~_k|^2 eta_k | / (|g~_k|^2 |eta_k| + 1e-300).
double fr_direction_check(const Trajectory& traj);

/// Per-record |1/|eta_k|^2 - sum_{j<=k} 1/|g~_j|^2| / (1/|eta_k|^2).
std::vector<double> norm_recursion_residuals(const Trajectory& traj);

// Trajectory JSON-lines: one object per iteration with
// {k, f, eta_norm, gtilde_norm, t, lambda, alpha, null, nf_cum, time_cum_s}
// plus diagnostic fields. With `include_iterates`, each record also carries
// "manifold", "shape", "x", "eta" and "gtilde" (column-major data).
void write_trajectory_jsonl(std::ostream& os, const Trajectory& traj, bool include_iterates);
Trajectory read_trajectory_jsonl(std::istream& is);

}  // namespace rsscsm

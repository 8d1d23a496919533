#pragma once

// Line search with interval reduction for semismooth univariate functions.
//
// The search works on phi(t) = f(R_x(t eta)). Its one-sided derivatives are
//   phi'_+(t) =  f'(y;  v)    phi'_-(t) = -f'(y; -v)
// with y = R_x(t eta) and v = D R_x(t eta)[eta]. The line search picks the
// descent side, runs the interval reduction procedure (IRP) on that side and
// selects a pair of directionally active subgradients from the final
// bracket.

#include "rsscsm/manifold.hpp"
#include "rsscsm/objectives.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>

namespace rsscsm {

struct LineSearchConfig {
  double tau_lo_init = 0.0;
  double tau_init = 1.0;
  double tau_hi_init = 100.0;
  double q = 0.33;
  double rho = 2.0;
  /// IRP stops once tau_hi - tau_lo <= interval_tol.
  double interval_tol = 1e-6;
  int max_iters = 10000;

  /// Throws ContractViolation unless 0 <= lo < tau < hi, 0 < q < 1/2,
  /// rho > 1 and interval_tol > 0.
  void validate() const;
};

/// One-sided derivatives l'_-(t) and l'_+(t).
struct OneSided {
  double minus;
  double plus;
};

/// A univariate semismooth function as seen by the IRP.
class LineFunction {
 public:
  virtual ~LineFunction() = default;
  virtual double value(double tau) = 0;
  virtual OneSided derivatives(double tau) = 0;
};

/// Adapter over callables, mostly for tests.
class LambdaLine final : public LineFunction {
 public:
  LambdaLine(std::function<double(double)> value, std::function<OneSided(double)> derivs)
      : value_(std::move(value)), derivs_(std::move(derivs)) {}
  double value(double tau) override { return value_(tau); }
  OneSided derivatives(double tau) override { return derivs_(tau); }

 private:
  std::function<double(double)> value_;
  std::function<OneSided(double)> derivs_;
};

enum class IrpStep { LowerShift, UpperShift, Exact, Tolerance };
enum class IrpTermination { Exact, Tolerance };

std::string to_string(IrpStep s);

struct IrpTraceRecord {
  int i = 0;
  double tau_lo = 0.0;
  double tau = 0.0;
  double tau_hi = 0.0;
  double l_lo = 0.0;
  double l_tau = 0.0;
  /// Only evaluated when l(tau) < l(tau_lo).
  std::optional<OneSided> derivs;
  IrpStep step = IrpStep::LowerShift;
};

using IrpTraceSink = std::function<void(const IrpTraceRecord&)>;

/// One JSON object (no trailing newline).
std::string to_json_line(const IrpTraceRecord& rec);

struct IrpResult {
  double tau_star = 0.0;
  double tau_lo = 0.0;
  double tau_hi = 0.0;
  double l_star = 0.0;
  IrpTermination termination = IrpTermination::Tolerance;
  int iterations = 0;
};

/// Interval reduction procedure. Requires l'_+(0) < 0 (not re-checked) and
/// cfg.tau_hi_init <= inj_bound. Trial points are bracket midpoints; with
/// an unbounded bracket (both cfg.tau_hi_init and inj_bound infinite) the
/// next trial is rho * max(tau_lo, 1). Derivatives are only requested when
/// l(tau) < l(tau_lo), the only case in which the procedure reads them.
/// Throws LineSearchStall after cfg.max_iters iterations.
IrpResult irp(LineFunction& l, const LineSearchConfig& cfg, double inj_bound,
              const IrpTraceSink& trace = {});

/// phi(t) restricted to a point, a direction and an objective, with caching
/// of points, values and directional probes per t.
class PhiFunction {
 public:
  struct Probe {
    ManifoldPoint y;
    TangentVector velocity;  ///< D R_x(t eta)[eta] at y
    DirectionalProbe probe;  ///< along `velocity`
  };

  PhiFunction(const Objective& f, ManifoldPoint x, TangentVector eta, EvalStats* stats = nullptr);

  /// +inf when the retraction degenerates (SPD overflow).
  double phi(double t);
  double dplus(double t) { return probe(t).probe.plus.deriv; }
  double dminus(double t) { return probe(t).probe.minus.deriv; }
  const Probe& probe(double t);
  ManifoldPoint point(double t);

  const Objective& objective() const { return *f_; }
  const ManifoldPoint& x() const { return x_; }
  const TangentVector& eta() const { return eta_; }
  EvalStats* stats() const { return stats_; }

 private:
  struct Entry {
    std::optional<ManifoldPoint> y;
    std::optional<double> value;
    std::optional<Probe> probe;
    bool degenerate = false;
  };
  Entry& entry(double t);

  const Objective* f_;
  ManifoldPoint x_;
  TangentVector eta_;
  EvalStats* stats_;
  std::unique_ptr<RayOracle> ray_;
  std::map<double, Entry> cache_;
};

enum class LineSearchBranch { Positive, Negative, Null };
std::string to_string(LineSearchBranch b);

struct LineSearchResult {
  double t = 0.0;
  LineSearchBranch branch = LineSearchBranch::Null;
  /// Meaningless for null steps.
  IrpTermination termination = IrpTermination::Exact;
  double tau_lo_final = 0.0;
  double tau_hi_final = 0.0;
  /// Upper bracket actually used after clamping to the injectivity bound.
  double tau_hi_used = 0.0;
  bool tau_hi_clamped = false;
  int irp_iterations = 0;
  /// Tolerance termination against the initial upper bound, which the IRP
  /// never moved: l was still decreasing at the edge of the search range.
  bool hit_upper_bound = false;

  double phi0 = 0.0;
  double phi_at_t = 0.0;
  double dplus0 = 0.0;
  double dminus0 = 0.0;

  ManifoldPoint x_next;

  // Subgradient selection: g_minus is taken at t_minus for -velocity,
  // g_plus at t_plus for +velocity, with t_minus <= t_plus. On tolerance
  // termination these are the bracket endpoints mapped back to t.
  double t_minus = 0.0;
  double t_plus = 0.0;
  TangentVector g_minus;
  TangentVector g_plus;
  double dminus_at_t_minus = 0.0;  ///< phi'_-(t_minus)
  double dplus_at_t_plus = 0.0;    ///< phi'_+(t_plus)
};

/// Algorithm: positive-side IRP when phi'_+(0) < 0, negative-side IRP on
/// l(tau) = phi(-tau) when phi'_-(0) > 0, otherwise a null step t = 0.
/// cfg.tau_hi_init is clamped to (1 - 1e-9) * Inj / |eta|; if this leaves it
/// below cfg.tau_init, the first trial becomes the bracket midpoint.
LineSearchResult line_search(PhiFunction& pf, const LineSearchConfig& cfg,
                             const IrpTraceSink& trace = {});

}  // namespace rsscsm

#include "rsscsm/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace rsscsm {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kLambdaTieTol = 1e-14;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

TangentVector rebase(const TangentVector& v, const ManifoldPoint& at) {
  if (v.base().same_as(at, 0.0)) return {at, v.data()};
  return parallel_transport(v, at);
}

}  // namespace

void SolverConfig::validate() const {
  if (!(epsilon_stop > 0.0)) throw ContractViolation("epsilon_stop must be positive");
  if (max_iters < 1) throw ContractViolation("max_iters must be >= 1");
  if (max_null_steps < 1) throw ContractViolation("max_null_steps must be >= 1");
  ls.validate();
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "converged";
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::NullSteps: return "null_steps";
  }
  return "unknown";
}

double select_lambda(double ip_plus, double ip_minus) {
  const double gap = ip_plus - ip_minus;
  if (std::abs(gap) <= kLambdaTieTol * (1.0 + std::abs(ip_plus) + std::abs(ip_minus))) return 0.5;
  return std::clamp(ip_plus / gap, 0.0, 1.0);
}

bool pairings_straddle_zero(double ip_plus, double ip_minus) {
  return ip_minus <= 0.0 && 0.0 <= ip_plus;
}

TangentVector combine_subgradient(const TangentVector& g_plus, const TangentVector& g_minus,
                                  double lambda) {
  require_same_base(g_plus, g_minus);
  return TangentVector(g_plus.base(), lambda * g_minus.data() + (1.0 - lambda) * g_plus.data());
}

DirectionStep direction_update(const TangentVector& g_tilde, const TangentVector& d) {
  require_same_base(g_tilde, d);
  const double gg = inner(g_tilde, g_tilde);
  const double dd = inner(d, d);
  if (gg + dd == 0.0) return {TangentVector::zero(d.base()), 0.0, 0.0, true};
  const double alpha = dd / (gg + dd);
  TangentVector eta(d.base(), -alpha * g_tilde.data() + (1.0 - alpha) * d.data());
  const TangentVector sum = g_tilde + d;
  const double ss = inner(sum, sum);
  const double cos2 = ss > 0.0 ? dd / ss : 0.0;
  return {std::move(eta), alpha, cos2, false};
}

SolveResult rsscsm_solve(const Objective& f, const ManifoldPoint& x0, const SolverConfig& cfg,
                         const IrpTraceSink& trace) {
  cfg.validate();
  if (!(x0.kind() == f.manifold())) throw ContractViolation("x0 is not on the objective's manifold");

  const auto start = Clock::now();
  EvalStats evals;
  SolverStats stats;
  Trajectory traj;
  traj.solver = "rsscsm";

  std::mt19937_64 rng(cfg.direction_seed);
  ManifoldPoint x = x0;
  double fx = f.value(x, &evals);
  const TangentVector probe_dir = random_unit_tangent(x, rng);
  ++evals.ng;
  TangentVector g_tilde = f.active_subgrad(x, probe_dir);
  TangentVector eta = -g_tilde;
  double t_prev = 0.0;
  int consecutive_null = 0;

  IterationRecord rec;
  rec.k = 1;
  rec.f = fx;
  rec.eta_norm = norm(eta);
  rec.gtilde_norm = norm(g_tilde);

  auto make_state = [&](int k, StopReason why) {
    stats.nf = evals.nf;
    stats.ng = evals.ng;
    stats.wall_time_s = seconds_since(start);
    return SolverState{k, x, eta, g_tilde, t_prev, fx, stats, why};
  };

  for (int k = 1;; ++k) {
    if (cfg.keep_iterates) traj.iterates.push_back({x, eta, g_tilde, std::nullopt});

    std::optional<StopReason> stop;
    if (rec.eta_norm <= cfg.epsilon_stop) {
      stop = StopReason::Converged;
    } else if (stats.iters >= cfg.max_iters) {
      stop = StopReason::MaxIterations;
    } else if (consecutive_null >= cfg.max_null_steps) {
      stop = StopReason::NullSteps;
    }
    if (stop) {
      rec.nf_cum = evals.nf;
      rec.time_cum_s = seconds_since(start);
      traj.records.push_back(rec);
      return {make_state(k, *stop), std::move(traj)};
    }

    PhiFunction pf(f, x, eta, &evals);
    LineSearchResult ls = [&] {
      try {
        return line_search(pf, cfg.ls, trace);
      } catch (const LineSearchStall& e) {
        rec.nf_cum = evals.nf;
        rec.time_cum_s = seconds_since(start);
        traj.records.push_back(rec);
        throw SolverStall(e.what(), make_state(k, StopReason::MaxIterations), std::move(traj));
      }
    }();
    ++stats.iters;
    ++stats.ls_calls;
    const bool null_step = ls.branch == LineSearchBranch::Null;
    if (null_step) {
      ++stats.null_steps;
      ++consecutive_null;
    } else {
      consecutive_null = 0;
    }

    rec.t = ls.t;
    rec.null_step = null_step;
    rec.ls = LineSearchSummary{ls.branch,          ls.termination,     ls.phi0,
                               ls.phi_at_t,        ls.dplus0,          ls.dminus0,
                               ls.t_minus,         ls.t_plus,          ls.dminus_at_t_minus,
                               ls.dplus_at_t_plus, ls.irp_iterations,  ls.tau_hi_clamped,
                               ls.hit_upper_bound};
    rec.nf_cum = evals.nf;
    rec.time_cum_s = seconds_since(start);
    traj.records.push_back(rec);
    if (cfg.keep_iterates) traj.iterates.back().t = ls.t;

    // Move to x_{k+1} and bring eta_k and the endpoint subgradients there.
    const ManifoldPoint x_next = ls.x_next;
    const TangentVector d =
        null_step ? eta : TangentVector(x_next, transport(x, ls.t * eta, eta).data());
    const TangentVector g_plus = rebase(ls.g_plus, x_next);
    const TangentVector g_minus = rebase(ls.g_minus, x_next);
    const double ip_plus = inner(g_plus, d);
    const double ip_minus = inner(g_minus, d);
    const double lambda = select_lambda(ip_plus, ip_minus);
    TangentVector g_next = combine_subgradient(g_plus, g_minus, lambda);
    const double orth_raw = inner(g_next, d);
    const double dd = inner(d, d);
    const bool projected =
        !pairings_straddle_zero(ip_plus, ip_minus) && !ls.hit_upper_bound && dd > 0.0;
    if (projected) g_next -= (orth_raw / dd) * d;
    DirectionStep step = direction_update(g_next, d);

    x = x_next;
    fx = ls.phi_at_t;
    t_prev = ls.t;
    g_tilde = std::move(g_next);
    eta = std::move(step.eta);

    rec = IterationRecord{};
    rec.k = k + 1;
    rec.f = fx;
    rec.eta_norm = norm(eta);
    rec.gtilde_norm = norm(g_tilde);
    rec.lambda = lambda;
    rec.alpha = step.alpha;
    rec.transported_norm = norm(d);
    rec.orth = orth_raw;
    rec.projected = projected;
    rec.ip_plus = ip_plus;
    rec.ip_minus = ip_minus;
  }
}

SolveResult baseline_subgradient_solve(const Objective& f, const ManifoldPoint& x0,
                                       const SolverConfig& cfg) {
  cfg.validate();
  if (!(x0.kind() == f.manifold())) throw ContractViolation("x0 is not on the objective's manifold");

  const auto start = Clock::now();
  EvalStats evals;
  SolverStats stats;
  Trajectory traj;
  traj.solver = "subgradient";
  std::mt19937_64 rng(cfg.direction_seed);

  ManifoldPoint x = x0;
  double fx = f.value(x, &evals);
  ManifoldPoint best_x = x;
  double best_f = fx;
  double c = 0.0;
  double t_prev = 0.0;
  TangentVector g = TangentVector::zero(x);

  for (int k = 1;; ++k) {
    ++evals.ng;
    g = f.active_subgrad(x, random_unit_tangent(x, rng));
    const double gnorm = norm(g);
    if (k == 1) c = 1.0 / (1.0 + gnorm);

    IterationRecord rec;
    rec.k = k;
    rec.f = fx;
    rec.eta_norm = gnorm;
    rec.gtilde_norm = gnorm;
    if (cfg.keep_iterates) traj.iterates.push_back({x, -g, g, std::nullopt});

    const bool done = gnorm <= cfg.epsilon_stop || stats.iters >= cfg.max_iters;
    if (done) {
      rec.nf_cum = evals.nf;
      rec.time_cum_s = seconds_since(start);
      traj.records.push_back(rec);
      stats.nf = evals.nf;
      stats.ng = evals.ng;
      stats.wall_time_s = seconds_since(start);
      const StopReason why = gnorm <= cfg.epsilon_stop ? StopReason::Converged
                                                       : StopReason::MaxIterations;
      // Report the best point seen; subgradient steps do not descend.
      return {SolverState{k, best_x, TangentVector::zero(best_x), TangentVector::zero(best_x),
                          t_prev, best_f, stats, why},
              std::move(traj)};
    }

    const double t = c / std::sqrt(static_cast<double>(k));
    rec.t = t;
    if (cfg.keep_iterates) traj.iterates.back().t = t;
    x = retract(x, -t * g);
    fx = f.value(x, &evals);
    ++stats.iters;
    t_prev = t;
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
    rec.nf_cum = evals.nf;
    rec.time_cum_s = seconds_since(start);
    traj.records.push_back(rec);
  }
}

double fr_direction_check(const Trajectory& traj) {
  const auto& it = traj.iterates;
  if (it.empty()) throw ContractViolation("fr_direction_check needs recorded iterates");
  double worst = 0.0;
  std::optional<TangentVector> fr;
  double prev_gg = 0.0;
  for (std::size_t k = 0; k < it.size(); ++k) {
    const double gg = inner(it[k].g_tilde, it[k].g_tilde);
    if (k == 0) {
      fr = -it[k].g_tilde;
    } else {
      const auto& prev = it[k - 1];
      const double t = prev.t.value_or(0.0);
      const TangentVector moved =
          t == 0.0 ? TangentVector(it[k].x, fr->data())
                   : TangentVector(it[k].x, transport(prev.x, t * prev.eta, *fr).data());
      fr = TangentVector(it[k].x, -it[k].g_tilde.data() + (gg / prev_gg) * moved.data());
    }
    const double ee = inner(it[k].eta, it[k].eta);
    const TangentVector diff(it[k].x, ee * fr->data() - gg * it[k].eta.data());
    const double res = norm(diff) / (gg * std::sqrt(ee) + 1e-300);
    worst = std::max(worst, res);
    prev_gg = gg;
  }
  return worst;
}

std::vector<double> norm_recursion_residuals(const Trajectory& traj) {
  std::vector<double> out;
  out.reserve(traj.records.size());
  double acc = 0.0;
  for (const auto& r : traj.records) {
    acc += 1.0 / (r.gtilde_norm * r.gtilde_norm);
    const double inv = 1.0 / (r.eta_norm * r.eta_norm);
    out.push_back(std::abs(inv - acc) / inv);
  }
  return out;
}

}  // namespace rsscsm

#include "rsscsm/linesearch.hpp"

#include "rsscsm/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace rsscsm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Keeps tau_hi strictly inside the injectivity ball.
constexpr double kInjectivityMargin = 1e-9;

// l(tau) = phi(sign * tau). For sign = -1 the one-sided derivatives swap:
// l'_+(tau) = -phi'_-(-tau), l'_-(tau) = -phi'_+(-tau).
class PhiLine final : public LineFunction {
 public:
  PhiLine(PhiFunction& pf, double sign) : pf_(pf), sign_(sign) {}

  double value(double tau) override { return pf_.phi(sign_ * tau); }

  OneSided derivatives(double tau) override {
    const auto& p = pf_.probe(sign_ * tau).probe;
    if (sign_ > 0.0) return {p.minus.deriv, p.plus.deriv};
    return {-p.plus.deriv, -p.minus.deriv};
  }

 private:
  PhiFunction& pf_;
  double sign_;
};

}  // namespace

void LineSearchConfig::validate() const {
  if (!(0.0 <= tau_lo_init && tau_lo_init < tau_init && tau_init < tau_hi_init)) {
    throw ContractViolation("line search needs 0 <= tau_lo < tau < tau_hi");
  }
  if (!(q > 0.0 && q < 0.5)) throw ContractViolation("line search needs 0 < q < 1/2");
  if (!(rho > 1.0)) throw ContractViolation("line search needs rho > 1");
  if (!(interval_tol > 0.0)) throw ContractViolation("line search needs interval_tol > 0");
  if (max_iters < 1) throw ContractViolation("line search needs max_iters >= 1");
}

std::string to_string(IrpStep s) {
  switch (s) {
    case IrpStep::LowerShift: return "lower";
    case IrpStep::UpperShift: return "upper";
    case IrpStep::Exact: return "exact";
    case IrpStep::Tolerance: return "tolerance";
  }
  return "unknown";
}

std::string to_string(LineSearchBranch b) {
  switch (b) {
    case LineSearchBranch::Positive: return "positive";
    case LineSearchBranch::Negative: return "negative";
    case LineSearchBranch::Null: return "null";
  }
  return "unknown";
}

std::string to_json_line(const IrpTraceRecord& rec) {
  // nlohmann writes non-finite numbers as null.
  nlohmann::json j{{"i", rec.i},         {"tau_lo", rec.tau_lo}, {"tau", rec.tau},
                   {"tau_hi", rec.tau_hi}, {"l_lo", rec.l_lo},   {"l_tau", rec.l_tau},
                   {"step", to_string(rec.step)}};
  if (rec.derivs) {
    j["dminus"] = rec.derivs->minus;
    j["dplus"] = rec.derivs->plus;
  }
  return j.dump();
}

IrpResult irp(LineFunction& l, const LineSearchConfig& cfg, double inj_bound,
              const IrpTraceSink& trace) {
  cfg.validate();
  if (cfg.tau_hi_init > inj_bound) {
    throw ContractViolation("IRP upper bracket exceeds the injectivity bound");
  }
  const bool unbounded_ok = std::isinf(inj_bound);

  double lo = cfg.tau_lo_init;
  double hi = cfg.tau_hi_init;
  double tau = cfg.tau_init;
  double l_lo = l.value(lo);

  for (int i = 1; i <= cfg.max_iters; ++i) {
    const double l_tau = l.value(tau);
    IrpTraceRecord rec{i, lo, tau, hi, l_lo, l_tau, std::nullopt, IrpStep::UpperShift};

    if (l_tau < l_lo) {
      const OneSided d = l.derivatives(tau);
      rec.derivs = d;
      if (d.minus <= 0.0 && 0.0 <= d.plus) {
        rec.step = IrpStep::Exact;
        if (trace) trace(rec);
        return {tau, lo, hi, l_tau, IrpTermination::Exact, i};
      }
      if (d.plus < 0.0) {
        rec.step = IrpStep::LowerShift;
        lo = tau;
        l_lo = l_tau;
      } else {
        // l'_+ >= 0 together with a failed exact test forces 0 < l'_-.
        hi = tau;
      }
    } else {
      hi = tau;
    }
    if (trace) trace(rec);

    if (hi - lo <= cfg.interval_tol) {
      if (trace) trace({i, lo, lo, hi, l_lo, l_lo, std::nullopt, IrpStep::Tolerance});
      return {lo, lo, hi, l_lo, IrpTermination::Tolerance, i};
    }

    if (unbounded_ok && std::isinf(hi)) {
      tau = cfg.rho * std::max(lo, 1.0);
    } else {
      // The midpoint always lies in [lo + q w, hi - q w] for q < 1/2.
      const double w = hi - lo;
      tau = std::clamp(lo + 0.5 * w, lo + cfg.q * w, hi - cfg.q * w);
    }
  }
  throw LineSearchStall("interval reduction exceeded its iteration cap", lo, hi);
}

// ---------------------------------------------------------------------------

PhiFunction::PhiFunction(const Objective& f, ManifoldPoint x, TangentVector eta, EvalStats* stats)
    : f_(&f), x_(std::move(x)), eta_(std::move(eta)), stats_(stats) {
  if (!eta_.base().same_as(x_)) throw ContractViolation("PhiFunction: eta is not tangent at x");
  ray_ = f.ray(x_, eta_);
}

PhiFunction::Entry& PhiFunction::entry(double t) {
  Entry& e = cache_[t];
  if (!e.y && !e.degenerate) {
    try {
      e.y = retract(x_, t * eta_);
    } catch (const DegenerateRetraction&) {
      e.degenerate = true;
    }
  }
  return e;
}

double PhiFunction::phi(double t) {
  Entry& e = entry(t);
  if (!e.value) {
    if (e.degenerate) {
      e.value = kInf;
    } else {
      double v;
      if (ray_) {
        if (stats_ != nullptr) ++stats_->nf;
        v = ray_->value(t);
      } else {
        v = f_->value(*e.y, stats_);
      }
      e.value = std::isfinite(v) ? v : kInf;
    }
  }
  return *e.value;
}

const PhiFunction::Probe& PhiFunction::probe(double t) {
  Entry& e = entry(t);
  if (!e.probe) {
    if (e.degenerate) throw DegenerateRetraction("probe requested at a degenerate point");
    TangentVector v = retraction_velocity(x_, eta_, t);
    // Tie the velocity to the cached point so base checks are pointer-equal.
    TangentVector vel(*e.y, v.data());
    DirectionalProbe p = [&] {
      if (!ray_) return f_->probe(*e.y, vel, stats_);
      if (stats_ != nullptr) ++stats_->ng;
      return ray_->probe(t, *e.y, vel);
    }();
    e.probe = Probe{*e.y, std::move(vel), std::move(p)};
  }
  return *e.probe;
}

ManifoldPoint PhiFunction::point(double t) {
  Entry& e = entry(t);
  if (e.degenerate) throw DegenerateRetraction("point requested at a degenerate retraction");
  return *e.y;
}

// ---------------------------------------------------------------------------

LineSearchResult line_search(PhiFunction& pf, const LineSearchConfig& cfg_in,
                             const IrpTraceSink& trace) {
  cfg_in.validate();
  const double phi0 = pf.phi(0.0);
  const auto& p0 = pf.probe(0.0);
  const double dplus0 = p0.probe.plus.deriv;
  const double dminus0 = p0.probe.minus.deriv;

  const double eta_norm = norm(pf.eta());
  const double inj = injectivity_radius(pf.x().kind());
  const double inj_bound = eta_norm > 0.0 ? inj / eta_norm : kInf;

  LineSearchConfig cfg = cfg_in;
  bool clamped = false;
  if (std::isfinite(inj_bound) && cfg.tau_hi_init > inj_bound * (1.0 - kInjectivityMargin)) {
    cfg.tau_hi_init = inj_bound * (1.0 - kInjectivityMargin);
    clamped = true;
    if (cfg.tau_hi_init <= cfg.tau_lo_init) {
      throw ContractViolation("injectivity bound leaves an empty line-search bracket");
    }
    if (cfg.tau_init >= cfg.tau_hi_init) cfg.tau_init = 0.5 * (cfg.tau_lo_init + cfg.tau_hi_init);
  }

  LineSearchBranch branch = LineSearchBranch::Null;
  double sign = 0.0;
  if (dplus0 < 0.0) {
    branch = LineSearchBranch::Positive;
    sign = 1.0;
  } else if (dminus0 > 0.0) {
    branch = LineSearchBranch::Negative;
    sign = -1.0;
  }

  if (branch == LineSearchBranch::Null) {
    return LineSearchResult{
        .t = 0.0,
        .branch = branch,
        .termination = IrpTermination::Exact,
        .tau_lo_final = 0.0,
        .tau_hi_final = 0.0,
        .tau_hi_used = cfg.tau_hi_init,
        .tau_hi_clamped = clamped,
        .irp_iterations = 0,
        .hit_upper_bound = false,
        .phi0 = phi0,
        .phi_at_t = phi0,
        .dplus0 = dplus0,
        .dminus0 = dminus0,
        .x_next = pf.x(),
        .t_minus = 0.0,
        .t_plus = 0.0,
        .g_minus = p0.probe.minus.g,
        .g_plus = p0.probe.plus.g,
        .dminus_at_t_minus = dminus0,
        .dplus_at_t_plus = dplus0,
    };
  }

  PhiLine line(pf, sign);
  const IrpResult r = irp(line, cfg, inj_bound, trace);
  const double t = sign * r.tau_star;

  double t_minus = t;
  double t_plus = t;
  if (r.termination == IrpTermination::Tolerance) {
    // Bracket endpoints, ordered in t.
    t_minus = std::min(sign * r.tau_lo, sign * r.tau_hi);
    t_plus = std::max(sign * r.tau_lo, sign * r.tau_hi);
  }
  const auto& pm = pf.probe(t_minus);
  const auto& pp = pf.probe(t_plus);

  return LineSearchResult{
      .t = t,
      .branch = branch,
      .termination = r.termination,
      .tau_lo_final = r.tau_lo,
      .tau_hi_final = r.tau_hi,
      .tau_hi_used = cfg.tau_hi_init,
      .tau_hi_clamped = clamped,
      .irp_iterations = r.iterations,
      .hit_upper_bound = r.termination == IrpTermination::Tolerance && r.tau_hi == cfg.tau_hi_init,
      .phi0 = phi0,
      .phi_at_t = pf.phi(t),
      .dplus0 = dplus0,
      .dminus0 = dminus0,
      .x_next = pf.point(t),
      .t_minus = t_minus,
      .t_plus = t_plus,
      .g_minus = pm.probe.minus.g,
      .g_plus = pp.probe.plus.g,
      .dminus_at_t_minus = pm.probe.minus.deriv,
      .dplus_at_t_plus = pp.probe.plus.deriv,
  };
}

}  // namespace rsscsm

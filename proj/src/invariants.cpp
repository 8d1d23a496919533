#include "rsscsm/invariants.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace rsscsm {

InvariantReport check_trajectory(const Trajectory& traj, const InvariantOptions& opt) {
  InvariantReport rep;
  const auto& rs = traj.records;
  rep.records = static_cast<int>(rs.size());

  double max_g = 0.0;
  for (const auto& r : rs) max_g = std::max(max_g, r.gtilde_norm);

  for (std::size_t i = 0; i < rs.size(); ++i) {
    const IterationRecord& r = rs[i];

    if (i > 0 && opt.expect_descent) {
      const double prev = rs[i - 1].f;
      const double rel = (r.f - prev) / (1.0 + std::abs(prev));
      ++rep.descent_checked;
      rep.worst_descent = std::max(rep.worst_descent, rel);
      if (rel > opt.descent_tol) ++rep.descent_violations;
    }

    if (i > 0 && r.orth) {
      const double scale = r.gtilde_norm * rs[i - 1].eta_norm + 1.0;
      const double ratio = std::abs(*r.orth) / scale;
      ++rep.orth_checked;
      rep.worst_orth_ratio = std::max(rep.worst_orth_ratio, ratio);
      if (ratio > opt.orth_tol) ++rep.orth_violations;
    }
    if (r.projected) ++rep.projected;

    if (i > 0 && r.transported_norm) {
      const double prev = rs[i - 1].eta_norm;
      const double dev = std::abs(*r.transported_norm - prev) / (1.0 + prev);
      ++rep.isometry_checked;
      rep.worst_isometry = std::max(rep.worst_isometry, dev);
      const double bound = std::min(r.gtilde_norm, *r.transported_norm);
      if (r.eta_norm > bound * (1.0 + 1e-12) + 1e-300) ++rep.minimality_violations;
    }

    if (r.lambda && (*r.lambda < 0.0 || *r.lambda > 1.0)) ++rep.lambda_alpha_violations;
    if (r.alpha && (*r.alpha < 0.0 || *r.alpha > 1.0)) ++rep.lambda_alpha_violations;

    const double k = static_cast<double>(i + 1);
    if (r.eta_norm * r.eta_norm > (max_g * max_g / k) * (1.0 + 1e-12)) ++rep.norm_decay_violations;

    if (r.ls) {
      const LineSearchSummary& s = *r.ls;
      ++rep.ls_checked;
      if (s.phi_t > s.phi0 + 1e-12 * (1.0 + std::abs(s.phi0))) ++rep.ls_descent_violations;
      if (s.hit_upper_bound) ++rep.boundary_truncated;
      if (s.branch != LineSearchBranch::Null && !s.hit_upper_bound) {
        const double tol = opt.first_order_tol * (1.0 + std::abs(s.dplus0));
        ++rep.ls_first_order_checked;
        if (!(s.dminus_at_t_minus <= tol && s.dplus_at_t_plus >= -tol)) {
          ++rep.ls_first_order_violations;
        }
      }
    }
  }

  const auto nr = norm_recursion_residuals(traj);
  const std::size_t window = std::min(nr.size(), static_cast<std::size_t>(opt.norm_recursion_window));
  for (std::size_t i = 0; i < window; ++i) {
    rep.worst_norm_recursion = std::max(rep.worst_norm_recursion, nr[i]);
  }

  if (rs.size() >= 2 && rs.back().eta_norm <= opt.epsilon_stop &&
      rs[rs.size() - 2].eta_norm > opt.epsilon_stop) {
    const double g = rs.back().gtilde_norm;
    const double e = rs[rs.size() - 2].eta_norm;
    rep.stopping_sound = g * e / std::sqrt(g * g + e * e) <= opt.epsilon_stop * (1.0 + 1e-12);
  }

  if (!traj.iterates.empty()) rep.fr_residual = fr_direction_check(traj);
  return rep;
}

void accumulate(InvariantReport& into, const InvariantReport& r) {
  into.records += r.records;
  into.descent_checked += r.descent_checked;
  into.descent_violations += r.descent_violations;
  into.worst_descent = std::max(into.worst_descent, r.worst_descent);
  into.orth_checked += r.orth_checked;
  into.orth_violations += r.orth_violations;
  into.worst_orth_ratio = std::max(into.worst_orth_ratio, r.worst_orth_ratio);
  into.projected += r.projected;
  into.boundary_truncated += r.boundary_truncated;
  into.worst_norm_recursion = std::max(into.worst_norm_recursion, r.worst_norm_recursion);
  into.isometry_checked += r.isometry_checked;
  into.worst_isometry = std::max(into.worst_isometry, r.worst_isometry);
  into.minimality_violations += r.minimality_violations;
  into.norm_decay_violations += r.norm_decay_violations;
  into.lambda_alpha_violations += r.lambda_alpha_violations;
  into.ls_checked += r.ls_checked;
  into.ls_descent_violations += r.ls_descent_violations;
  into.ls_first_order_checked += r.ls_first_order_checked;
  into.ls_first_order_violations += r.ls_first_order_violations;
  if (r.stopping_sound) into.stopping_sound = into.stopping_sound.value_or(true) && *r.stopping_sound;
  if (r.fr_residual) into.fr_residual = std::max(into.fr_residual.value_or(0.0), *r.fr_residual);
}

std::string to_json(const InvariantReport& r) {
  nlohmann::json j{{"records", r.records},
                   {"descent_checked", r.descent_checked},
                   {"descent_violations", r.descent_violations},
                   {"worst_descent", r.worst_descent},
                   {"orth_checked", r.orth_checked},
                   {"orth_violations", r.orth_violations},
                   {"orth_fraction", r.orth_fraction()},
                   {"worst_orth_ratio", r.worst_orth_ratio},
                   {"projected", r.projected},
                   {"boundary_truncated", r.boundary_truncated},
                   {"worst_norm_recursion", r.worst_norm_recursion},
                   {"isometry_checked", r.isometry_checked},
                   {"worst_isometry", r.worst_isometry},
                   {"minimality_violations", r.minimality_violations},
                   {"norm_decay_violations", r.norm_decay_violations},
                   {"lambda_alpha_violations", r.lambda_alpha_violations},
                   {"ls_checked", r.ls_checked},
                   {"ls_descent_violations", r.ls_descent_violations},
                   {"ls_first_order_checked", r.ls_first_order_checked},
                   {"ls_first_order_violations", r.ls_first_order_violations}};
  j["stopping_sound"] = r.stopping_sound ? nlohmann::json(*r.stopping_sound) : nlohmann::json(nullptr);
  j["fr_residual"] = r.fr_residual ? nlohmann::json(*r.fr_residual) : nlohmann::json(nullptr);
  return j.dump(2);
}

}  // namespace rsscsm

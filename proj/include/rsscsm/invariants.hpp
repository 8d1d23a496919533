#pragma once

// Post-hoc checks of the identities a conjugate subgradient trajectory is
// expected to satisfy. Everything here works from recorded scalars, except
// the Fletcher-Reeves replay, which needs recorded iterates.

#include "rsscsm/solver.hpp"

#include <optional>
#include <string>

namespace rsscsm {

struct InvariantOptions {
  /// Stopping tolerance the run used (for the stopping-soundness check).
  double epsilon_stop = 1e-8;
  double descent_tol = 1e-12;
  double orth_tol = 1e-6;
  double norm_recursion_tol = 1e-6;
  /// Only the first `norm_recursion_window` records enter the recursion check.
  int norm_recursion_window = 500;
  double isometry_tol = 1e-10;
  double first_order_tol = 1e-6;
  /// Skip the descent check (the subgradient baseline does not descend).
  bool expect_descent = true;
};

struct InvariantReport {
  int records = 0;

  int descent_checked = 0;
  int descent_violations = 0;
  double worst_descent = 0.0;  ///< max (f_{k+1} - f_k) / (1 + |f_k|)

  int orth_checked = 0;
  int orth_violations = 0;
  double worst_orth_ratio = 0.0;  ///< max |orth| / (|g~| |eta_prev| + 1)
  int projected = 0;
  int boundary_truncated = 0;

  double worst_norm_recursion = 0.0;
  int isometry_checked = 0;
  double worst_isometry = 0.0;
  int minimality_violations = 0;
  int norm_decay_violations = 0;
  int lambda_alpha_violations = 0;

  int ls_checked = 0;
  int ls_descent_violations = 0;
  int ls_first_order_checked = 0;
  int ls_first_order_violations = 0;

  std::optional<bool> stopping_sound;
  std::optional<double> fr_residual;

  double orth_fraction() const {
    return orth_checked == 0 ? 1.0 : 1.0 - static_cast<double>(orth_violations) / orth_checked;
  }
};

InvariantReport check_trajectory(const Trajectory& traj, const InvariantOptions& opt = {});

/// Merges counters; worst values take the maximum. The FR residual and
/// stopping flag combine by max / logical and.
void accumulate(InvariantReport& into, const InvariantReport& r);

std::string to_json(const InvariantReport& r);

}  // namespace rsscsm

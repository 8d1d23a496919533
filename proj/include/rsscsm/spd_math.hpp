#pragma once

// Spectral functions of symmetric matrices, all computed through a
// symmetric eigendecomposition.

#include <Eigen/Dense>

namespace rsscsm::spd {

/// Eigenvalues at or below this floor are clamped before taking logarithms.
inline constexpr double kLogEigenFloor = 1e-14;

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

/// Returns V f(D) V^T for the symmetric input S = V D V^T.
template <typename F>
Eigen::MatrixXd apply_spectral(const Eigen::MatrixXd& s, F&& f) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  const Eigen::VectorXd values = es.eigenvalues().unaryExpr(f);
  const Eigen::MatrixXd& v = es.eigenvectors();
  return symmetrize(v * values.asDiagonal() * v.transpose());
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& s);
Eigen::MatrixXd logm(const Eigen::MatrixXd& s);
Eigen::MatrixXd sqrtm(const Eigen::MatrixXd& s);

/// Frobenius norm of logm(s) from the eigenvalues alone.
double logm_norm_squared(const Eigen::MatrixXd& s);

double min_eigenvalue(const Eigen::MatrixXd& s);
double max_asymmetry(const Eigen::MatrixXd& m);

}  // namespace rsscsm::spd

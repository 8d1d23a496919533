#include "rsscsm/spd_math.hpp"

#include <algorithm>
#include <cmath>

namespace rsscsm::spd {

Eigen::MatrixXd expm(const Eigen::MatrixXd& s) {
  return apply_spectral(s, [](double v) { return std::exp(v); });
}

Eigen::MatrixXd logm(const Eigen::MatrixXd& s) {
  return apply_spectral(s, [](double v) { return std::log(std::max(v, kLogEigenFloor)); });
}

Eigen::MatrixXd sqrtm(const Eigen::MatrixXd& s) {
  return apply_spectral(s, [](double v) { return std::sqrt(std::max(v, 0.0)); });
}

double logm_norm_squared(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  double acc = 0.0;
  for (double v : es.eigenvalues()) {
    const double l = std::log(std::max(v, kLogEigenFloor));
    acc += l * l;
  }
  return acc;
}

double min_eigenvalue(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_asymmetry(const Eigen::MatrixXd& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace rsscsm::spd

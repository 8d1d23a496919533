#pragma once

// Independent oracles shared by the test binaries. Nothing here calls the
// library's transport, gradient or spectral code; matrix functions come
// from Eigen's Schur/Pade based MatrixFunctions module.

#include "rsscsm/manifold.hpp"
#include "rsscsm/objectives.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace rsscsm::testing {

inline Eigen::MatrixXd sym(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }
inline Eigen::MatrixXd ref_expm(const Eigen::MatrixXd& m) { return sym(m.exp()); }
inline Eigen::MatrixXd ref_sqrtm(const Eigen::MatrixXd& m) { return sym(m.sqrt()); }
inline Eigen::MatrixXd ref_logm(const Eigen::MatrixXd& m) { return sym(m.log()); }

inline Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd b(n, n);
  for (int i = 0; i < b.size(); ++i) b.data()[i] = nd(rng);
  return 0.5 * (b + b.transpose());
}

/// Random tangent vector with norm `scale` (Riemannian norm).
inline TangentVector random_tangent(const ManifoldPoint& x, double scale, std::mt19937_64& rng) {
  return scale * random_unit_tangent(x, rng);
}

/// Orthonormal basis of T_x under the Riemannian metric.
inline std::vector<TangentVector> tangent_basis(const ManifoldPoint& x) {
  std::vector<TangentVector> out;
  const int d = x.kind().dim;
  if (x.kind().is_sphere()) {
    Eigen::MatrixXd m(d, d + 1);
    m.col(0) = x.data().col(0);
    m.rightCols(d) = Eigen::MatrixXd::Identity(d, d);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
    for (int j = 1; j < d; ++j) out.emplace_back(x, Eigen::MatrixXd(q.col(j)));
  } else {
    const Eigen::MatrixXd s = ref_sqrtm(x.data());
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(d, d);
        if (i == j) {
          e(i, i) = 1.0;
        } else {
          e(i, j) = e(j, i) = 1.0 / std::sqrt(2.0);
        }
        out.emplace_back(x, s * e * s);
      }
    }
  }
  return out;
}

/// Central difference of f along t -> R_x(t xi) at t = 0.
inline double fd_directional(const Objective& f, const ManifoldPoint& x, const TangentVector& xi,
                             double h) {
  return (f.value(retract(x, h * xi)) - f.value(retract(x, -h * xi))) / (2.0 * h);
}

/// Riemannian gradient assembled from central differences in an orthonormal basis.
inline Eigen::MatrixXd fd_gradient(const Objective& f, const ManifoldPoint& x, double h) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(x.data().rows(), x.data().cols());
  for (const auto& b : tangent_basis(x)) g += fd_directional(f, x, b, h) * b.data();
  return g;
}

/// Parallel transport of xi along the geodesic s -> gamma(s), s in [0, 1],
/// starting at x with initial velocity v, by RK4 on the transport ODE.
///   sphere: V' = -<V, gamma'> gamma
///   SPD:    V' = 1/2 (gamma' gamma^-1 V + V gamma^-1 gamma')
inline Eigen::MatrixXd ode_transport(const ManifoldPoint& x, const Eigen::MatrixXd& v,
                                     const Eigen::MatrixXd& xi, int steps = 2000) {
  std::function<Eigen::MatrixXd(double, const Eigen::MatrixXd&)> rhs;
  if (x.kind().is_sphere()) {
    const Eigen::VectorXd p = x.data().col(0);
    const double th = v.norm();
    const Eigen::VectorXd u = th > 0 ? Eigen::VectorXd(v.col(0) / th) : Eigen::VectorXd::Zero(p.size());
    rhs = [p, u, th](double s, const Eigen::MatrixXd& w) -> Eigen::MatrixXd {
      const Eigen::VectorXd g = std::cos(th * s) * p + std::sin(th * s) * u;
      const Eigen::VectorXd dg = th * (-std::sin(th * s) * p + std::cos(th * s) * u);
      return -(dg.dot(w.col(0))) * g;
    };
  } else {
    const Eigen::MatrixXd r = ref_sqrtm(x.data());
    const Eigen::MatrixXd ri = r.inverse();
    const Eigen::MatrixXd sv = sym(ri * v * ri);
    rhs = [r, sv](double s, const Eigen::MatrixXd& w) -> Eigen::MatrixXd {
      const Eigen::MatrixXd e = ref_expm(s * sv);
      const Eigen::MatrixXd g = r * e * r;
      const Eigen::MatrixXd dg = r * sv * e * r;
      const Eigen::MatrixXd gi = g.inverse();
      return 0.5 * (dg * gi * w + w * gi * dg);
    };
  }
  Eigen::MatrixXd w = xi;
  const double hs = 1.0 / steps;
  for (int i = 0; i < steps; ++i) {
    const double s = i * hs;
    const Eigen::MatrixXd k1 = rhs(s, w);
    const Eigen::MatrixXd k2 = rhs(s + hs / 2, w + hs / 2 * k1);
    const Eigen::MatrixXd k3 = rhs(s + hs / 2, w + hs / 2 * k2);
    const Eigen::MatrixXd k4 = rhs(s + hs, w + hs * k3);
    w += hs / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return w;
}

/// Geodesic initial velocity from x to y, computed without the library's
/// log map: sphere angle-and-direction, SPD via the matrix logarithm.
inline Eigen::MatrixXd geodesic_velocity(const ManifoldPoint& x, const ManifoldPoint& y) {
  if (x.kind().is_sphere()) {
    const Eigen::VectorXd p = x.data().col(0), q = y.data().col(0);
    const Eigen::VectorXd w = q - p.dot(q) * p;
    const double th = std::acos(std::clamp(p.dot(q), -1.0, 1.0));
    return w.norm() > 0 ? Eigen::MatrixXd(th * w / w.norm()) : Eigen::MatrixXd(Eigen::VectorXd::Zero(p.size()));
  }
  const Eigen::MatrixXd r = ref_sqrtm(x.data());
  const Eigen::MatrixXd ri = r.inverse();
  return r * ref_logm(sym(ri * y.data() * ri)) * r;
}

}  // namespace rsscsm::testing

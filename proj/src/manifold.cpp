#include "rsscsm/manifold.hpp"

#include "rsscsm/errors.hpp"
#include "rsscsm/spd_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rsscsm {

namespace {

constexpr double kUnitNormTol = 1e-12;
constexpr double kSymmetryTol = 1e-12;
constexpr double kTangencyTol = 1e-10;
constexpr double kAntipodalTol = 1e-14;

double entry_scale(const Eigen::MatrixXd& m) {
  return 1.0 + m.cwiseAbs().maxCoeff();
}

bool is_zero(const TangentVector& v) { return v.data().isZero(0.0); }

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

}  // namespace

ManifoldKind ManifoldKind::sphere(int ambient_dim) {
  if (ambient_dim < 2) throw ContractViolation("sphere ambient dimension must be >= 2");
  return {Type::Sphere, ambient_dim};
}

ManifoldKind ManifoldKind::spd(int order) {
  if (order < 1) throw ContractViolation("SPD matrix order must be >= 1");
  return {Type::Spd, order};
}

std::string ManifoldKind::name() const { return is_sphere() ? "sphere" : "spd"; }

double injectivity_radius(const ManifoldKind& kind) {
  return kind.is_sphere() ? std::numbers::pi : std::numeric_limits<double>::infinity();
}

ManifoldPoint ManifoldPoint::sphere(const Eigen::VectorXd& x) {
  const auto kind = ManifoldKind::sphere(static_cast<int>(x.size()));
  if (!x.allFinite() || std::abs(x.norm() - 1.0) > kUnitNormTol) {
    throw ContractViolation("sphere point must have unit norm");
  }
  State s{kind, x, {}, {}, {}};
  return ManifoldPoint(std::make_shared<const State>(std::move(s)));
}

ManifoldPoint ManifoldPoint::spd(const Eigen::MatrixXd& x) {
  if (x.rows() != x.cols()) throw ContractViolation("SPD point must be square");
  const auto kind = ManifoldKind::spd(static_cast<int>(x.rows()));
  if (!x.allFinite()) throw ContractViolation("SPD point has non-finite entries");
  if (spd::max_asymmetry(x) > kSymmetryTol * entry_scale(x)) {
    throw ContractViolation("SPD point must be symmetric");
  }
  Eigen::MatrixXd sym = spd::symmetrize(x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::VectorXd& ev = es.eigenvalues();
  if (!(ev.minCoeff() > 0.0)) throw ContractViolation("SPD point must be positive definite");
  const Eigen::MatrixXd& v = es.eigenvectors();
  const Eigen::VectorXd root = ev.cwiseSqrt();
  State s{kind, std::move(sym),
          spd::symmetrize(v * root.asDiagonal() * v.transpose()),
          spd::symmetrize(v * root.cwiseInverse().asDiagonal() * v.transpose()),
          spd::symmetrize(v * ev.cwiseInverse().asDiagonal() * v.transpose())};
  return ManifoldPoint(std::make_shared<const State>(std::move(s)));
}

bool ManifoldPoint::same_as(const ManifoldPoint& other, double tol) const {
  if (state_ == other.state_) return true;
  if (!(kind() == other.kind())) return false;
  return (data() - other.data()).cwiseAbs().maxCoeff() <= tol;
}

TangentVector::TangentVector(ManifoldPoint base, Eigen::MatrixXd data)
    : base_(std::move(base)), data_(std::move(data)) {
  if (data_.rows() != base_.data().rows() || data_.cols() != base_.data().cols()) {
    throw ContractViolation("tangent vector shape does not match its base point");
  }
}

TangentVector TangentVector::zero(const ManifoldPoint& base) {
  return {base, Eigen::MatrixXd::Zero(base.data().rows(), base.data().cols())};
}

TangentVector TangentVector::operator-() const { return {base_, -data_}; }

TangentVector& TangentVector::operator+=(const TangentVector& other) {
  require_same_base(*this, other);
  data_ += other.data_;
  return *this;
}

TangentVector& TangentVector::operator-=(const TangentVector& other) {
  require_same_base(*this, other);
  data_ -= other.data_;
  return *this;
}

TangentVector& TangentVector::operator*=(double s) {
  data_ *= s;
  return *this;
}

void require_same_base(const TangentVector& a, const TangentVector& b) {
  if (!a.base().same_as(b.base())) {
    throw ContractViolation("tangent vectors live at different base points");
  }
}

TangentVector project_tangent(const ManifoldPoint& x, const Eigen::MatrixXd& ambient) {
  if (x.kind().is_sphere()) {
    const Eigen::MatrixXd& p = x.data();
    const double c = (p.transpose() * ambient)(0, 0);
    return {x, ambient - c * p};
  }
  return {x, spd::symmetrize(ambient)};
}

double inner(const TangentVector& xi, const TangentVector& zeta) {
  require_same_base(xi, zeta);
  if (xi.base().kind().is_sphere()) {
    return (xi.data().transpose() * zeta.data())(0, 0);
  }
  const Eigen::MatrixXd& inv = xi.base().inverse();
  const Eigen::MatrixXd a = inv * xi.data();
  const Eigen::MatrixXd b = inv * zeta.data();
  // tr(A B) without forming the product.
  return (a.transpose().array() * b.array()).sum();
}

double norm(const TangentVector& xi) { return std::sqrt(std::max(inner(xi, xi), 0.0)); }

ManifoldPoint retract(const ManifoldPoint& x, const TangentVector& eta) {
  if (!eta.base().same_as(x)) throw ContractViolation("retract: eta is not tangent at x");
  if (is_zero(eta)) return x;
  if (x.kind().is_sphere()) {
    const Eigen::VectorXd y = x.data() + eta.data();
    const double r = y.norm();
    if (!(r >= kAntipodalTol) || !std::isfinite(r)) {
      throw DegenerateRetraction("sphere retraction of a degenerate point");
    }
    return ManifoldPoint::sphere(y / r);
  }
  const Eigen::MatrixXd s = spd::symmetrize(x.inv_sqrt() * eta.data() * x.inv_sqrt());
  const Eigen::MatrixXd y = spd::symmetrize(x.sqrt() * spd::expm(s) * x.sqrt());
  if (!y.allFinite()) throw DegenerateRetraction("SPD exponential overflowed");
  try {
    return ManifoldPoint::spd(y);
  } catch (const ContractViolation&) {
    throw DegenerateRetraction("SPD exponential lost positive definiteness");
  }
}

ManifoldPoint exponential(const ManifoldPoint& x, const TangentVector& eta) {
  if (!eta.base().same_as(x)) throw ContractViolation("exponential: eta is not tangent at x");
  if (x.kind().is_spd()) return retract(x, eta);
  if (is_zero(eta)) return x;
  const double len = eta.data().norm();
  const Eigen::VectorXd y = std::cos(len) * x.data() + (std::sin(len) / len) * eta.data();
  return ManifoldPoint::sphere(y / y.norm());
}

TangentVector retraction_velocity(const ManifoldPoint& x, const TangentVector& eta, double t) {
  if (!eta.base().same_as(x)) throw ContractViolation("retraction_velocity: eta is not tangent at x");
  if (t == 0.0 || is_zero(eta)) return eta;
  const ManifoldPoint y = retract(x, t * eta);
  if (x.kind().is_sphere()) {
    const double r = (x.data() + t * eta.data()).norm();
    const Eigen::VectorXd& yd = y.data();
    const double c = yd.dot(eta.data().col(0));
    return {y, (eta.data() - c * yd) / r};
  }
  const Eigen::MatrixXd s = spd::symmetrize(x.inv_sqrt() * eta.data() * x.inv_sqrt());
  const Eigen::MatrixXd e = x.sqrt() * spd::expm(0.5 * t * s) * x.inv_sqrt();
  return {y, spd::symmetrize(e * eta.data() * e.transpose())};
}

TangentVector parallel_transport(const TangentVector& xi, const ManifoldPoint& to) {
  const ManifoldPoint& from = xi.base();
  if (!(from.kind() == to.kind())) throw ContractViolation("parallel_transport: kind mismatch");
  if (from.same_as(to, 0.0)) return {to, xi.data()};
  if (from.kind().is_sphere()) {
    const Eigen::VectorXd& p = from.data();
    const Eigen::VectorXd& q = to.data();
    const double c = std::clamp(p.dot(q), -1.0, 1.0);
    const Eigen::VectorXd w = q - c * p;
    const double s = w.norm();
    if (s == 0.0) {
      if (c < 0.0) throw DegenerateTransport("transport between antipodal points");
      return project_tangent(to, xi.data());
    }
    const double theta = std::atan2(s, c);
    if (std::numbers::pi - theta <= kAntipodalTol) {
      throw DegenerateTransport("transport between antipodal points");
    }
    const Eigen::VectorXd u = w / s;
    const double a = u.dot(xi.data().col(0));
    // Component along the geodesic direction rotates in the (p, u) plane;
    // the orthogonal complement is unchanged.
    const Eigen::VectorXd out = xi.data().col(0) + a * ((c - 1.0) * u - s * p);
    return {to, out};
  }
  const Eigen::MatrixXd mid = spd::symmetrize(from.inv_sqrt() * to.data() * from.inv_sqrt());
  const Eigen::MatrixXd e = from.sqrt() * spd::sqrtm(mid) * from.inv_sqrt();
  return {to, spd::symmetrize(e * xi.data() * e.transpose())};
}

TangentVector transport(const ManifoldPoint& x, const TangentVector& eta, const TangentVector& xi) {
  if (!eta.base().same_as(x) || !xi.base().same_as(x)) {
    throw ContractViolation("transport: vectors are not tangent at x");
  }
  if (is_zero(eta)) return xi;
  if (x.kind().is_spd()) {
    // Along the exponential geodesic E = X^{1/2} expm(S/2) X^{-1/2}.
    const ManifoldPoint y = retract(x, eta);
    const Eigen::MatrixXd s = spd::symmetrize(x.inv_sqrt() * eta.data() * x.inv_sqrt());
    const Eigen::MatrixXd e = x.sqrt() * spd::expm(0.5 * s) * x.inv_sqrt();
    return {y, spd::symmetrize(e * xi.data() * e.transpose())};
  }
  return parallel_transport(xi, retract(x, eta));
}

double distance(const ManifoldPoint& x, const ManifoldPoint& y) {
  if (!(x.kind() == y.kind())) throw ContractViolation("distance: kind mismatch");
  if (x.kind().is_sphere()) {
    return std::acos(std::clamp(x.data().col(0).dot(y.data().col(0)), -1.0, 1.0));
  }
  const Eigen::MatrixXd mid = spd::symmetrize(x.inv_sqrt() * y.data() * x.inv_sqrt());
  return std::sqrt(spd::logm_norm_squared(mid));
}

bool is_valid_point(const ManifoldPoint& x) {
  if (!x.data().allFinite()) return false;
  if (x.kind().is_sphere()) return std::abs(x.data().norm() - 1.0) <= kUnitNormTol;
  return spd::max_asymmetry(x.data()) <= kSymmetryTol * entry_scale(x.data()) &&
         spd::min_eigenvalue(x.data()) > 0.0;
}

bool is_tangent(const TangentVector& xi) {
  if (!xi.data().allFinite()) return false;
  if (xi.base().kind().is_sphere()) {
    return std::abs(xi.data().col(0).dot(xi.base().data().col(0))) <= kTangencyTol;
  }
  return spd::max_asymmetry(xi.data()) <= kSymmetryTol * entry_scale(xi.data());
}

ManifoldPoint random_point(const ManifoldKind& kind, std::mt19937_64& rng) {
  if (kind.is_sphere()) {
    Eigen::VectorXd g = gaussian(kind.dim, 1, rng);
    return ManifoldPoint::sphere(g / g.norm());
  }
  // Q D Q^T with Haar-distributed Q and D uniform in [0.1, 10].
  const Eigen::MatrixXd g = gaussian(kind.dim, kind.dim, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR();
  for (int j = 0; j < kind.dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  std::uniform_real_distribution<double> uni(0.1, 10.0);
  Eigen::VectorXd d(kind.dim);
  for (int i = 0; i < kind.dim; ++i) d(i) = uni(rng);
  return ManifoldPoint::spd(spd::symmetrize(q * d.asDiagonal() * q.transpose()));
}

TangentVector random_unit_tangent(const ManifoldPoint& x, std::mt19937_64& rng) {
  const auto& kind = x.kind();
  TangentVector v = TangentVector::zero(x);
  if (kind.is_sphere()) {
    v = project_tangent(x, gaussian(kind.dim, 1, rng));
  } else {
    const Eigen::MatrixXd b = spd::symmetrize(gaussian(kind.dim, kind.dim, rng));
    v = TangentVector(x, spd::symmetrize(x.sqrt() * b * x.sqrt()));
  }
  return (1.0 / norm(v)) * v;
}

}  // namespace rsscsm

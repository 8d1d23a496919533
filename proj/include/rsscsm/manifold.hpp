#pragma once

// Geometry of the unit sphere S^n (embedded in R^{n+1}) and of the manifold
// of symmetric positive definite matrices with the affine-invariant metric.
//
// Points and tangent vectors are immutable values. A point holds its data
// behind a shared pointer, so copying points and tangent vectors that refer
// to the same base is cheap and base-identity checks are usually a pointer
// comparison.

#include <Eigen/Dense>

#include <memory>
#include <random>
#include <string>

namespace rsscsm {

struct ManifoldKind {
  enum class Type { Sphere, Spd };

  Type type = Type::Sphere;
  /// Ambient dimension n+1 for S^n, matrix order n for SPD(n).
  int dim = 0;

  static ManifoldKind sphere(int ambient_dim);
  static ManifoldKind spd(int order);

  bool is_sphere() const { return type == Type::Sphere; }
  bool is_spd() const { return type == Type::Spd; }
  std::string name() const;

  friend bool operator==(const ManifoldKind&, const ManifoldKind&) = default;
};

/// Injectivity radius of the retraction: pi on the sphere, +inf on SPD.
double injectivity_radius(const ManifoldKind& kind);

class ManifoldPoint {
 public:
  /// Validates unit norm within 1e-12.
  static ManifoldPoint sphere(const Eigen::VectorXd& x);
  /// Validates symmetry within 1e-12 and a strictly positive spectrum.
  static ManifoldPoint spd(const Eigen::MatrixXd& x);

  const ManifoldKind& kind() const { return state_->kind; }
  /// Column vector (sphere) or square matrix (SPD).
  const Eigen::MatrixXd& data() const { return state_->data; }

  // SPD factor cache, computed once at construction. Empty on the sphere.
  const Eigen::MatrixXd& sqrt() const { return state_->sqrt; }
  const Eigen::MatrixXd& inv_sqrt() const { return state_->inv_sqrt; }
  const Eigen::MatrixXd& inverse() const { return state_->inverse; }

  /// Same kind and entrywise equal within `tol`.
  bool same_as(const ManifoldPoint& other, double tol = 1e-14) const;

 private:
  struct State {
    ManifoldKind kind;
    Eigen::MatrixXd data;
    Eigen::MatrixXd sqrt;
    Eigen::MatrixXd inv_sqrt;
    Eigen::MatrixXd inverse;
  };
  explicit ManifoldPoint(std::shared_ptr<const State> s) : state_(std::move(s)) {}

  std::shared_ptr<const State> state_;
};

class TangentVector {
 public:
  /// Stores `data` as given; use project_tangent() for untrusted input.
  TangentVector(ManifoldPoint base, Eigen::MatrixXd data);

  static TangentVector zero(const ManifoldPoint& base);

  const ManifoldPoint& base() const { return base_; }
  const Eigen::MatrixXd& data() const { return data_; }

  TangentVector operator-() const;
  TangentVector& operator+=(const TangentVector& other);
  TangentVector& operator-=(const TangentVector& other);
  TangentVector& operator*=(double s);

  friend TangentVector operator+(TangentVector a, const TangentVector& b) { return a += b; }
  friend TangentVector operator-(TangentVector a, const TangentVector& b) { return a -= b; }
  friend TangentVector operator*(double s, TangentVector a) { return a *= s; }
  friend TangentVector operator*(TangentVector a, double s) { return a *= s; }

 private:
  ManifoldPoint base_;
  Eigen::MatrixXd data_;
};

/// Throws ContractViolation unless both vectors live at the same point.
void require_same_base(const TangentVector& a, const TangentVector& b);

/// Orthogonal projection of an ambient vector onto T_x (sphere: remove the
/// normal component; SPD: symmetrize).
TangentVector project_tangent(const ManifoldPoint& x, const Eigen::MatrixXd& ambient);

/// Riemannian metric: dot product on the sphere, tr(X^-1 xi X^-1 zeta) on SPD.
double inner(const TangentVector& xi, const TangentVector& zeta);
double norm(const TangentVector& xi);

/// Sphere: (x + eta) / |x + eta|. SPD: exponential map.
ManifoldPoint retract(const ManifoldPoint& x, const TangentVector& eta);

/// Exponential map. Coincides with retract() on SPD.
ManifoldPoint exponential(const ManifoldPoint& x, const TangentVector& eta);

/// D R_x(t eta)[eta], the velocity of t -> retract(x, t eta), as a tangent
/// vector at retract(x, t eta).
TangentVector retraction_velocity(const ManifoldPoint& x, const TangentVector& eta, double t);

/// Parallel transport of xi along the geodesic joining xi.base() to `to`.
TangentVector parallel_transport(const TangentVector& xi, const ManifoldPoint& to);

/// Vector transport along eta: parallel transport of xi from x to
/// retract(x, eta) along the connecting geodesic. Isometric.
TangentVector transport(const ManifoldPoint& x, const TangentVector& eta, const TangentVector& xi);

/// Riemannian distance.
double distance(const ManifoldPoint& x, const ManifoldPoint& y);

/// Validity checks with the tolerances the point and vector types promise.
bool is_valid_point(const ManifoldPoint& x);
bool is_tangent(const TangentVector& xi);

// Random sampling for tests and instance generation.
ManifoldPoint random_point(const ManifoldKind& kind, std::mt19937_64& rng);
/// Random tangent vector at x with unit Riemannian norm.
TangentVector random_unit_tangent(const ManifoldPoint& x, std::mt19937_64& rng);

}  // namespace rsscsm

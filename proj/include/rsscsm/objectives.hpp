#pragma once

// Objective oracles for the three benchmark families:
//
//   Rayleigh  f(x) = max_i 1/2 x^T A_i x                    on S^n
//   Median    f(x) = sum_i w_i arccos(x_i^T x)              on S^n
//   RCM       f(X) = 1/2 sum_i |logm(X^-1/2 A_i X^-1/2)|_F^2 on SPD(n)
//
// Each oracle returns values, Riemannian directional derivatives f'(x; xi)
// and directionally active Clarke subgradients, i.e. g in the Clarke
// subdifferential with <g, xi> = f'(x; xi).

#include "rsscsm/manifold.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rsscsm {

/// Caller-owned evaluation counters. Oracles never mutate themselves.
struct EvalStats {
  std::int64_t nf = 0;  ///< objective values
  std::int64_t ng = 0;  ///< subgradient / directional-derivative queries
};

struct ActiveSubgradient {
  double deriv;       ///< f'(x; d)
  TangentVector g;    ///< <g, d> == deriv
};

/// Both one-sided quantities along a direction d:
///   plus:  f'(x; d)   with its active subgradient,
///   minus: -f'(x; -d) with the subgradient active for -d.
struct DirectionalProbe {
  ActiveSubgradient plus;
  ActiveSubgradient minus;
};

/// f restricted to the curve y(t) = retract(x, t eta), prepared once so that
/// repeated evaluations along one line search are cheap.
class RayOracle {
 public:
  virtual ~RayOracle() = default;
  virtual double value(double t) const = 0;
  /// Same contract as Objective::probe at y = retract(x, t eta).
  virtual DirectionalProbe probe(double t, const ManifoldPoint& y, const TangentVector& d) const = 0;
};

class Objective {
 public:
  virtual ~Objective() = default;

  virtual ManifoldKind manifold() const = 0;
  virtual std::string name() const = 0;

  double value(const ManifoldPoint& x, EvalStats* stats = nullptr) const {
    if (stats != nullptr) ++stats->nf;
    return evaluate(x);
  }

  virtual double dir_deriv(const ManifoldPoint& x, const TangentVector& xi) const = 0;

  /// Throws AmbiguousDirection for xi == 0 at a nonsmooth point.
  virtual TangentVector active_subgrad(const ManifoldPoint& x, const TangentVector& xi) const = 0;

  /// Default implementation issues two active_subgrad queries; families
  /// override it to share the work.
  virtual DirectionalProbe probe(const ManifoldPoint& x, const TangentVector& d,
                                 EvalStats* stats = nullptr) const;

  /// Global Lipschitz bound with respect to the Riemannian distance, when
  /// one is available in closed form.
  virtual std::optional<double> lipschitz_bound() const { return std::nullopt; }

  /// Optional fast path for line searches; nullptr means evaluate pointwise.
  /// Does not touch evaluation counters.
  virtual std::unique_ptr<RayOracle> ray(const ManifoldPoint& /*x*/, const TangentVector& /*eta*/) const {
    return nullptr;
  }

 protected:
  virtual double evaluate(const ManifoldPoint& x) const = 0;
};

// ---------------------------------------------------------------------------
// Instances

enum class ProblemKind { Rayleigh, Median, CenterOfMass };

std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& s);

struct RayleighInstance {
  int n = 0;  ///< sphere dimension; matrices are (n+1) x (n+1)
  int m = 0;
  std::vector<Eigen::MatrixXd> a;
};

struct MedianInstance {
  int n = 0;
  int m = 0;
  Eigen::MatrixXd points;   ///< (n+1) x m, unit columns
  Eigen::VectorXd weights;  ///< positive, summing to one
};

struct CenterOfMassInstance {
  int n = 0;  ///< matrix order
  int m = 0;
  std::vector<Eigen::MatrixXd> a;
};

using Instance = std::variant<RayleighInstance, MedianInstance, CenterOfMassInstance>;

ProblemKind kind_of(const Instance& inst);

/// Throws ContractViolation if the instance breaks its invariants.
void validate(const Instance& inst);

/// Deterministic in (kind, n, m, seed).
///   Rayleigh: A_i = (B + B^T)/2, B standard normal.
///   Median:   x_i uniform on S^n, w_i = 1/m.
///   RCM:      A_i = Q D Q^T, Q Haar orthogonal, D uniform in [0.1, 10].
Instance generate_instance(ProblemKind kind, int n, int m, std::uint64_t seed);

/// Manifold on which the instance's objective is posed.
ManifoldKind manifold_of(const Instance& inst);

std::unique_ptr<Objective> make_objective(const Instance& inst);

// Family oracles, exposed for direct construction in tests.

class RayleighObjective final : public Objective {
 public:
  explicit RayleighObjective(RayleighInstance inst);

  ManifoldKind manifold() const override { return ManifoldKind::sphere(inst_.n + 1); }
  std::string name() const override { return "rayleigh"; }
  double dir_deriv(const ManifoldPoint& x, const TangentVector& xi) const override;
  TangentVector active_subgrad(const ManifoldPoint& x, const TangentVector& xi) const override;
  DirectionalProbe probe(const ManifoldPoint& x, const TangentVector& d,
                         EvalStats* stats) const override;
  std::optional<double> lipschitz_bound() const override;
  /// Along the qf ray every quadratic is a ratio of quadratics in t.
  std::unique_ptr<RayOracle> ray(const ManifoldPoint& x, const TangentVector& eta) const override;

  /// Index set {i : f_i(x) >= f(x) - delta} with delta = 1e-10 (1 + |f(x)|).
  std::vector<int> active_set(const ManifoldPoint& x) const;
  /// Riemannian gradient of the i-th quadratic: A_i x - (x^T A_i x) x.
  Eigen::VectorXd component_gradient(const ManifoldPoint& x, int i) const;

  const RayleighInstance& instance() const { return inst_; }

 protected:
  double evaluate(const ManifoldPoint& x) const override;

 private:
  struct Pieces {
    Eigen::VectorXd values;   // 1/2 x^T A_i x
    double f;
    std::vector<int> active;
    Eigen::MatrixXd ax;       // A_i x for active[j] in column j
  };
  Pieces pieces(const ManifoldPoint& x) const;
  /// Fills `active` from `values` and `f`.
  void mark_active(Pieces& p) const;
  /// Best active component for direction d; smallest index on ties.
  ActiveSubgradient best(const ManifoldPoint& x, const Pieces& p, const Eigen::VectorXd& d,
                         double sign) const;

  Eigen::VectorXd quadratic_monomials(const Eigen::VectorXd& x) const;

  RayleighInstance inst_;
  // Column i holds the upper triangle of A_i, scaled so that
  // packed_.col(i).dot(monomials(x)) == 1/2 x^T A_i x.
  Eigen::MatrixXd packed_;
  // [A_1 | ... | A_m], so x^T stacked_ holds every A_i x.
  Eigen::MatrixXd stacked_;

  friend class RayleighRay;
};

class MedianObjective final : public Objective {
 public:
  explicit MedianObjective(MedianInstance inst);

  ManifoldKind manifold() const override { return ManifoldKind::sphere(inst_.n + 1); }
  std::string name() const override { return "median"; }
  double dir_deriv(const ManifoldPoint& x, const TangentVector& xi) const override;
  TangentVector active_subgrad(const ManifoldPoint& x, const TangentVector& xi) const override;
  DirectionalProbe probe(const ManifoldPoint& x, const TangentVector& d,
                         EvalStats* stats) const override;
  std::optional<double> lipschitz_bound() const override { return inst_.weights.sum(); }

  const MedianInstance& instance() const { return inst_; }

 protected:
  double evaluate(const ManifoldPoint& x) const override;

 private:
  struct Split {
    Eigen::VectorXd smooth_grad;  // sum of regular-term gradients
    double coincident_weight;     // singular terms with x == x_i
    double antipodal_weight;      // singular terms with x == -x_i
  };
  Split split(const ManifoldPoint& x) const;

  MedianInstance inst_;
};

class CenterOfMassObjective final : public Objective {
 public:
  explicit CenterOfMassObjective(CenterOfMassInstance inst);

  ManifoldKind manifold() const override { return ManifoldKind::spd(inst_.n); }
  std::string name() const override { return "rcm"; }
  double dir_deriv(const ManifoldPoint& x, const TangentVector& xi) const override;
  TangentVector active_subgrad(const ManifoldPoint& x, const TangentVector& xi) const override;
  DirectionalProbe probe(const ManifoldPoint& x, const TangentVector& d,
                         EvalStats* stats) const override;

  /// -sum_i X^{1/2} logm(X^{-1/2} A_i X^{-1/2}) X^{1/2}.
  TangentVector gradient(const ManifoldPoint& x) const;

  const CenterOfMassInstance& instance() const { return inst_; }

 protected:
  double evaluate(const ManifoldPoint& x) const override;

 private:
  CenterOfMassInstance inst_;
};

// ---------------------------------------------------------------------------
// JSON serialization: {kind, n, m, seed, data?}. Without `data` the instance
// is regenerated from (kind, n, m, seed).

struct InstanceSpec {
  ProblemKind kind = ProblemKind::Rayleigh;
  int n = 0;
  int m = 0;
  std::uint64_t seed = 0;
  std::optional<Instance> data;
};

std::string instance_to_json(const InstanceSpec& spec, bool include_data);
InstanceSpec instance_from_json(const std::string& text);
/// Inline data when present, otherwise regenerate.
Instance materialize(const InstanceSpec& spec);

}  // namespace rsscsm

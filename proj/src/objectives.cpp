#include "rsscsm/objectives.hpp"

#include "rsscsm/errors.hpp"
#include "rsscsm/spd_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rsscsm {

namespace {

// Rayleigh active-set tolerance relative to 1 + |f(x)|.
constexpr double kActiveSetTol = 1e-10;
// Median: terms with |<x_i, x>| above 1 - kSingularBand are singular; in the
// outer band the gradient denominator is floored.
constexpr double kSingularBand = 1e-12;
constexpr double kFlooredBand = 1e-8;
constexpr double kDenominatorFloor = 1e-6;

bool is_zero(const TangentVector& v) { return v.data().isZero(0.0); }

}  // namespace

DirectionalProbe Objective::probe(const ManifoldPoint& x, const TangentVector& d,
                                  EvalStats* stats) const {
  if (stats != nullptr) stats->ng += 2;
  TangentVector gp = active_subgrad(x, d);
  TangentVector gm = active_subgrad(x, -d);
  const double dp = inner(gp, d);
  const double dm = inner(gm, d);
  return {{dp, std::move(gp)}, {dm, std::move(gm)}};
}

// ---------------------------------------------------------------------------
// Rayleigh

RayleighObjective::RayleighObjective(RayleighInstance inst) : inst_(std::move(inst)) {
  validate(Instance{inst_});
  const int dim = inst_.n + 1;
  packed_.resize(static_cast<Eigen::Index>(dim) * (dim + 1) / 2, inst_.m);
  for (int i = 0; i < inst_.m; ++i) {
    Eigen::Index r = 0;
    for (int k = 0; k < dim; ++k) {
      for (int j = 0; j <= k; ++j) packed_(r++, i) = (j == k ? 0.5 : 1.0) * inst_.a[i](j, k);
    }
  }
  stacked_.resize(dim, static_cast<Eigen::Index>(dim) * inst_.m);
  for (int i = 0; i < inst_.m; ++i) stacked_.middleCols(static_cast<Eigen::Index>(i) * dim, dim) = inst_.a[i];
}

Eigen::VectorXd RayleighObjective::quadratic_monomials(const Eigen::VectorXd& x) const {
  const int dim = inst_.n + 1;
  Eigen::VectorXd w(packed_.rows());
  Eigen::Index r = 0;
  for (int k = 0; k < dim; ++k) {
    for (int j = 0; j <= k; ++j) w(r++) = x(j) * x(k);
  }
  return w;
}

RayleighObjective::Pieces RayleighObjective::pieces(const ManifoldPoint& x) const {
  const Eigen::VectorXd xv = x.data().col(0);
  Pieces p;
  p.values = packed_.transpose() * quadratic_monomials(xv);
  p.f = p.values.maxCoeff();
  mark_active(p);
  p.ax.resize(xv.size(), static_cast<Eigen::Index>(p.active.size()));
  for (std::size_t j = 0; j < p.active.size(); ++j) {
    p.ax.col(static_cast<Eigen::Index>(j)) = inst_.a[p.active[j]] * xv;
  }
  return p;
}

void RayleighObjective::mark_active(Pieces& p) const {
  const double delta = kActiveSetTol * (1.0 + std::abs(p.f));
  for (int i = 0; i < inst_.m; ++i) {
    if (p.values(i) >= p.f - delta) p.active.push_back(i);
  }
}

double RayleighObjective::evaluate(const ManifoldPoint& x) const {
  return (packed_.transpose() * quadratic_monomials(x.data().col(0))).maxCoeff();
}

std::vector<int> RayleighObjective::active_set(const ManifoldPoint& x) const {
  return pieces(x).active;
}

Eigen::VectorXd RayleighObjective::component_gradient(const ManifoldPoint& x, int i) const {
  const Eigen::VectorXd xv = x.data().col(0);
  const Eigen::VectorXd ax = inst_.a.at(i) * xv;
  return ax - xv.dot(ax) * xv;
}

ActiveSubgradient RayleighObjective::best(const ManifoldPoint& x, const Pieces& p,
                                          const Eigen::VectorXd& d, double sign) const {
  const Eigen::VectorXd xv = x.data().col(0);
  const double xd = xv.dot(d);
  Eigen::Index best_j = -1;
  double best_score = 0.0;
  for (Eigen::Index j = 0; j < p.ax.cols(); ++j) {
    // <A_i x - (x^T A_i x) x, d>
    const double s = p.ax.col(j).dot(d) - 2.0 * p.values(p.active[j]) * xd;
    if (best_j < 0 || sign * s > sign * best_score) {
      best_j = j;
      best_score = s;
    }
  }
  Eigen::VectorXd g = p.ax.col(best_j) - 2.0 * p.values(p.active[best_j]) * xv;
  return {best_score, TangentVector(x, std::move(g))};
}

double RayleighObjective::dir_deriv(const ManifoldPoint& x, const TangentVector& xi) const {
  if (!xi.base().same_as(x)) throw ContractViolation("dir_deriv: xi is not tangent at x");
  if (is_zero(xi)) return 0.0;
  return best(x, pieces(x), xi.data().col(0), 1.0).deriv;
}

TangentVector RayleighObjective::active_subgrad(const ManifoldPoint& x,
                                                const TangentVector& xi) const {
  if (!xi.base().same_as(x)) throw ContractViolation("active_subgrad: xi is not tangent at x");
  const Pieces p = pieces(x);
  if (is_zero(xi) && p.active.size() > 1) {
    throw AmbiguousDirection("zero direction at a point with several active quadratics");
  }
  return best(x, p, xi.data().col(0), 1.0).g;
}

DirectionalProbe RayleighObjective::probe(const ManifoldPoint& x, const TangentVector& d,
                                          EvalStats* stats) const {
  if (stats != nullptr) ++stats->ng;
  const Pieces p = pieces(x);
  const Eigen::VectorXd dv = d.data().col(0);
  // minus: -f'(x; -d) = min over active of <grad_i, d>.
  return {best(x, p, dv, 1.0), best(x, p, dv, -1.0)};
}

// With u = x + t eta and y = u / |u|:
//   1/2 y^T A_i y = (a_i + 2 t b_i + t^2 c_i) / (2 |u|^2),
//   A_i y = (A_i x + t A_i eta) / |u|.
class RayleighRay final : public RayOracle {
 public:
  RayleighRay(const RayleighObjective& f, const ManifoldPoint& x, const TangentVector& eta)
      : f_(f), x_(x.data().col(0)), e_(eta.data().col(0)) {
    const Eigen::Index dim = x_.size();
    const Eigen::Index m = f.inst_.m;
    const Eigen::RowVectorXd xs = x_.transpose() * f.stacked_;
    const Eigen::RowVectorXd es = e_.transpose() * f.stacked_;
    ax_ = Eigen::Map<const Eigen::MatrixXd>(xs.data(), dim, m);
    ae_ = Eigen::Map<const Eigen::MatrixXd>(es.data(), dim, m);
    a_ = ax_.transpose() * x_;
    b_ = ax_.transpose() * e_;
    c_ = ae_.transpose() * e_;
    xx_ = x_.squaredNorm();
    xe_ = x_.dot(e_);
    ee_ = e_.squaredNorm();
  }

  double value(double t) const override { return values(t).maxCoeff(); }

  DirectionalProbe probe(double t, const ManifoldPoint& y, const TangentVector& d) const override {
    RayleighObjective::Pieces p;
    p.values = values(t);
    p.f = p.values.maxCoeff();
    f_.mark_active(p);
    const double s = std::sqrt(norm2(t));
    p.ax.resize(x_.size(), static_cast<Eigen::Index>(p.active.size()));
    for (std::size_t j = 0; j < p.active.size(); ++j) {
      const int i = p.active[j];
      p.ax.col(static_cast<Eigen::Index>(j)) = (ax_.col(i) + t * ae_.col(i)) / s;
    }
    const Eigen::VectorXd dv = d.data().col(0);
    return {f_.best(y, p, dv, 1.0), f_.best(y, p, dv, -1.0)};
  }

 private:
  double norm2(double t) const { return xx_ + 2.0 * t * xe_ + t * t * ee_; }
  Eigen::VectorXd values(double t) const {
    return (a_ + 2.0 * t * b_ + (t * t) * c_) / (2.0 * norm2(t));
  }

  const RayleighObjective& f_;
  Eigen::VectorXd x_, e_;
  Eigen::MatrixXd ax_, ae_;
  Eigen::VectorXd a_, b_, c_;
  double xx_, xe_, ee_;
};

std::unique_ptr<RayOracle> RayleighObjective::ray(const ManifoldPoint& x,
                                                  const TangentVector& eta) const {
  if (!eta.base().same_as(x)) throw ContractViolation("ray: eta is not tangent at x");
  return std::make_unique<RayleighRay>(*this, x, eta);
}

std::optional<double> RayleighObjective::lipschitz_bound() const {
  double l = 0.0;
  for (const auto& a : inst_.a) l = std::max(l, a.norm());
  return l;
}

// ---------------------------------------------------------------------------
// Median

MedianObjective::MedianObjective(MedianInstance inst) : inst_(std::move(inst)) {
  validate(Instance{inst_});
}

double MedianObjective::evaluate(const ManifoldPoint& x) const {
  const Eigen::VectorXd u = inst_.points.transpose() * x.data().col(0);
  double f = 0.0;
  for (int i = 0; i < inst_.m; ++i) f += inst_.weights(i) * std::acos(std::clamp(u(i), -1.0, 1.0));
  return f;
}

MedianObjective::Split MedianObjective::split(const ManifoldPoint& x) const {
  const Eigen::VectorXd xv = x.data().col(0);
  const Eigen::VectorXd u = inst_.points.transpose() * xv;
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(inst_.m);
  Split s{Eigen::VectorXd::Zero(xv.size()), 0.0, 0.0};
  double along_x = 0.0;
  for (int i = 0; i < inst_.m; ++i) {
    const double ui = std::clamp(u(i), -1.0, 1.0);
    const double w = inst_.weights(i);
    if (ui > 1.0 - kSingularBand) {
      s.coincident_weight += w;
    } else if (ui < -1.0 + kSingularBand) {
      s.antipodal_weight += w;
    } else {
      double denom = std::sqrt(1.0 - ui * ui);
      if (std::abs(ui) > 1.0 - kFlooredBand) denom = std::max(denom, kDenominatorFloor);
      coef(i) = w / denom;
      along_x += coef(i) * ui;
    }
  }
  // sum_i -c_i (x_i - u_i x)
  s.smooth_grad = -(inst_.points * coef) + along_x * xv;
  return s;
}

double MedianObjective::dir_deriv(const ManifoldPoint& x, const TangentVector& xi) const {
  if (!xi.base().same_as(x)) throw ContractViolation("dir_deriv: xi is not tangent at x");
  if (is_zero(xi)) return 0.0;
  const Split s = split(x);
  const Eigen::VectorXd v = xi.data().col(0);
  return s.smooth_grad.dot(v) + (s.coincident_weight - s.antipodal_weight) * v.norm();
}

TangentVector MedianObjective::active_subgrad(const ManifoldPoint& x,
                                              const TangentVector& xi) const {
  if (!xi.base().same_as(x)) throw ContractViolation("active_subgrad: xi is not tangent at x");
  const Split s = split(x);
  const double cone = s.coincident_weight - s.antipodal_weight;
  if (is_zero(xi)) {
    if (s.coincident_weight > 0.0 || s.antipodal_weight > 0.0) {
      throw AmbiguousDirection("zero direction at a data point");
    }
    return {x, s.smooth_grad};
  }
  const Eigen::VectorXd v = xi.data().col(0);
  return {x, s.smooth_grad + (cone / v.norm()) * v};
}

DirectionalProbe MedianObjective::probe(const ManifoldPoint& x, const TangentVector& d,
                                        EvalStats* stats) const {
  if (stats != nullptr) ++stats->ng;
  const Split s = split(x);
  const Eigen::VectorXd v = d.data().col(0);
  const double len = v.norm();
  const double cone = s.coincident_weight - s.antipodal_weight;
  const double base = s.smooth_grad.dot(v);
  if (len == 0.0) {
    TangentVector g(x, s.smooth_grad);
    return {{0.0, g}, {0.0, g}};
  }
  const Eigen::VectorXd unit = v / len;
  return {{base + cone * len, TangentVector(x, s.smooth_grad + cone * unit)},
          {base - cone * len, TangentVector(x, s.smooth_grad - cone * unit)}};
}

// ---------------------------------------------------------------------------
// Riemannian center of mass

CenterOfMassObjective::CenterOfMassObjective(CenterOfMassInstance inst) : inst_(std::move(inst)) {
  validate(Instance{inst_});
}

double CenterOfMassObjective::evaluate(const ManifoldPoint& x) const {
  double f = 0.0;
  for (const auto& a : inst_.a) {
    f += spd::logm_norm_squared(spd::symmetrize(x.inv_sqrt() * a * x.inv_sqrt()));
  }
  return 0.5 * f;
}

TangentVector CenterOfMassObjective::gradient(const ManifoldPoint& x) const {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(inst_.n, inst_.n);
  for (const auto& a : inst_.a) acc += spd::logm(spd::symmetrize(x.inv_sqrt() * a * x.inv_sqrt()));
  return {x, spd::symmetrize(-(x.sqrt() * acc * x.sqrt()))};
}

double CenterOfMassObjective::dir_deriv(const ManifoldPoint& x, const TangentVector& xi) const {
  if (!xi.base().same_as(x)) throw ContractViolation("dir_deriv: xi is not tangent at x");
  if (is_zero(xi)) return 0.0;
  return inner(gradient(x), xi);
}

TangentVector CenterOfMassObjective::active_subgrad(const ManifoldPoint& x,
                                                    const TangentVector& xi) const {
  if (!xi.base().same_as(x)) throw ContractViolation("active_subgrad: xi is not tangent at x");
  return gradient(x);
}

DirectionalProbe CenterOfMassObjective::probe(const ManifoldPoint& x, const TangentVector& d,
                                              EvalStats* stats) const {
  if (stats != nullptr) ++stats->ng;
  TangentVector g = gradient(x);
  const double dd = inner(g, d);
  return {{dd, g}, {dd, g}};
}

// ---------------------------------------------------------------------------
// Instances

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Rayleigh: return "rayleigh";
    case ProblemKind::Median: return "median";
    case ProblemKind::CenterOfMass: return "rcm";
  }
  return "unknown";
}

ProblemKind problem_kind_from_string(const std::string& s) {
  if (s == "rayleigh") return ProblemKind::Rayleigh;
  if (s == "median") return ProblemKind::Median;
  if (s == "rcm") return ProblemKind::CenterOfMass;
  throw ContractViolation("unknown problem kind '" + s + "'");
}

ProblemKind kind_of(const Instance& inst) {
  return std::visit(
      [](const auto& i) {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, RayleighInstance>) return ProblemKind::Rayleigh;
        else if constexpr (std::is_same_v<T, MedianInstance>) return ProblemKind::Median;
        else return ProblemKind::CenterOfMass;
      },
      inst);
}

ManifoldKind manifold_of(const Instance& inst) {
  return std::visit(
      [](const auto& i) {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, CenterOfMassInstance>) return ManifoldKind::spd(i.n);
        else return ManifoldKind::sphere(i.n + 1);
      },
      inst);
}

void validate(const Instance& inst) {
  std::visit(
      [](const auto& i) {
        using T = std::decay_t<decltype(i)>;
        if (i.n < 1 || i.m < 1) throw ContractViolation("instance needs n, m >= 1");
        if constexpr (std::is_same_v<T, MedianInstance>) {
          if (i.points.rows() != i.n + 1 || i.points.cols() != i.m || i.weights.size() != i.m) {
            throw ContractViolation("median instance has inconsistent shapes");
          }
          if ((i.weights.array() <= 0.0).any() || std::abs(i.weights.sum() - 1.0) > 1e-12) {
            throw ContractViolation("median weights must be positive and sum to one");
          }
          for (int k = 0; k < i.m; ++k) {
            if (std::abs(i.points.col(k).norm() - 1.0) > 1e-12) {
              throw ContractViolation("median data points must have unit norm");
            }
          }
        } else {
          const int dim = std::is_same_v<T, RayleighInstance> ? i.n + 1 : i.n;
          if (static_cast<int>(i.a.size()) != i.m) throw ContractViolation("instance needs m matrices");
          for (const auto& a : i.a) {
            if (a.rows() != dim || a.cols() != dim) throw ContractViolation("matrix has wrong order");
            if (spd::max_asymmetry(a) > 1e-12 * (1.0 + a.cwiseAbs().maxCoeff())) {
              throw ContractViolation("instance matrix is not symmetric");
            }
            if constexpr (std::is_same_v<T, CenterOfMassInstance>) {
              if (!(spd::min_eigenvalue(a) > 0.0)) {
                throw ContractViolation("RCM matrix is not positive definite");
              }
            }
          }
        }
      },
      inst);
}

Instance generate_instance(ProblemKind kind, int n, int m, std::uint64_t seed) {
  if (n < 1 || m < 1) throw ContractViolation("generate_instance needs n, m >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  switch (kind) {
    case ProblemKind::Rayleigh: {
      RayleighInstance inst{n, m, {}};
      inst.a.reserve(m);
      for (int i = 0; i < m; ++i) {
        Eigen::MatrixXd b(n + 1, n + 1);
        for (Eigen::Index c = 0; c < b.cols(); ++c) {
          for (Eigen::Index r = 0; r < b.rows(); ++r) b(r, c) = normal(rng);
        }
        inst.a.push_back(spd::symmetrize(b));
      }
      return inst;
    }
    case ProblemKind::Median: {
      MedianInstance inst{n, m, Eigen::MatrixXd(n + 1, m), Eigen::VectorXd::Constant(m, 1.0 / m)};
      const auto sphere = ManifoldKind::sphere(n + 1);
      for (int i = 0; i < m; ++i) inst.points.col(i) = random_point(sphere, rng).data().col(0);
      // 1/m summed m times can miss 1 by a few ulps; renormalize exactly.
      inst.weights /= inst.weights.sum();
      return inst;
    }
    case ProblemKind::CenterOfMass: {
      CenterOfMassInstance inst{n, m, {}};
      const auto kind_spd = ManifoldKind::spd(n);
      for (int i = 0; i < m; ++i) inst.a.push_back(random_point(kind_spd, rng).data());
      return inst;
    }
  }
  throw ContractViolation("unknown problem kind");
}

std::unique_ptr<Objective> make_objective(const Instance& inst) {
  return std::visit(
      [](const auto& i) -> std::unique_ptr<Objective> {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, RayleighInstance>) return std::make_unique<RayleighObjective>(i);
        else if constexpr (std::is_same_v<T, MedianInstance>) return std::make_unique<MedianObjective>(i);
        else return std::make_unique<CenterOfMassObjective>(i);
      },
      inst);
}

}  // namespace rsscsm

#include "pkld/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pkld {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

bool is_positive_definite(const Matrix& m) {
  if (!is_symmetric(m)) return false;
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success && symmetric_eigenvalues(m)[0] > 0.0;
}

double lq_norm(const Vector& x, double q) {
  // Scaled to avoid overflow of |x_i|^q.
  const double amax = x.cwiseAbs().maxCoeff();
  if (amax == 0.0) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]) / amax, q);
  return amax * std::pow(s, 1.0 / q);
}

// Unclamped Minkowski functional of K (0 at the origin).
double minkowski(const ConstraintSet& set, const Vector& theta) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return theta.norm() / s.radius;
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          return std::sqrt(std::max(0.0, theta.dot(s.a * theta)));
        } else if constexpr (std::is_same_v<T, LqBall>) {
          return lq_norm(theta, s.q) / s.radius;
        } else if constexpr (std::is_same_v<T, Box>) {
          double g = 0.0;
          for (Eigen::Index i = 0; i < theta.size(); ++i) {
            g = std::max(g, theta[i] / s.lower[i]);
            g = std::max(g, theta[i] / s.upper[i]);
          }
          return g;
        } else {
          double g = 0.0;
          for (Eigen::Index i = 0; i < s.a.rows(); ++i) g = std::max(g, s.a.row(i).dot(theta) / s.b[i]);
          return g;
        }
      },
      set.shape());
}

// Gradient of the Minkowski functional at θ ∉ K. On polyhedral sets the
// lowest-index facet attaining the maximum supplies the subgradient.
Vector minkowski_grad(const ConstraintSet& set, const Vector& theta) {
  return std::visit(
      [&](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return theta / (theta.norm() * s.radius);
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          const Vector at = s.a * theta;
          return at / std::sqrt(theta.dot(at));
        } else if constexpr (std::is_same_v<T, LqBall>) {
          const double nq = lq_norm(theta, s.q);
          Vector g(theta.size());
          for (Eigen::Index i = 0; i < theta.size(); ++i) {
            const double r = std::abs(theta[i]) / nq;
            g[i] = (theta[i] < 0 ? -1.0 : (theta[i] > 0 ? 1.0 : 0.0)) * std::pow(r, s.q - 1.0) / s.radius;
          }
          return g;
        } else {
          const auto [a, b] = set.halfspaces();
          Eigen::Index best = 0;
          double best_val = -kInf;
          for (Eigen::Index i = 0; i < a.rows(); ++i) {
            const double v = a.row(i).dot(theta) / b[i];
            if (v > best_val) {
              best_val = v;
              best = i;
            }
          }
          return a.row(best).transpose() / b[best];
        }
      },
      set.shape());
}

// argmin (x−θ)ᵀQ(x−θ) s.t. xᵀAx ≤ 1, for θ outside. Uses the generalized
// eigenbasis QV = AVD, VᵀAV = I, where the constraint becomes the secular
// equation Σ c_i²/(d_i+μ)² = 1 with c = VᵀQθ.
Vector project_quadratic(const Matrix& amat, const Matrix& q, const Vector& theta) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(q, amat);
  const Vector d = ges.eigenvalues();
  const Matrix& v = ges.eigenvectors();
  const Vector c = v.transpose() * (q * theta);

  auto secular = [&](double mu) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) s += c[i] * c[i] / ((d[i] + mu) * (d[i] + mu));
    return s;
  };
  // g(μ) = 1 − 1/√S(μ) is positive at μ = 0 (θ outside) and decreasing;
  // Newton on it is safeguarded by bisection on [lo, hi].
  double lo = 0.0;
  double hi = c.norm() + 1.0;
  double mu = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double s = secular(mu);
    const double g = 1.0 - 1.0 / std::sqrt(s);
    if (g > 0.0) lo = mu; else hi = mu;
    if (std::abs(g) <= 1e-16) break;
    double ds = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) ds += -2.0 * c[i] * c[i] / std::pow(d[i] + mu, 3);
    const double dg = 0.5 * ds / std::pow(s, 1.5);
    double next = mu - g / dg;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - mu) <= 1e-17 * std::max(1.0, mu)) {
      mu = next;
      break;
    }
    mu = next;
  }
  Vector y(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) y[i] = c[i] / (d[i] + mu);
  Vector x = v * y;
  const double val = x.dot(amat * x);
  if (val > 1.0) x /= std::sqrt(val);
  return x;
}

// FISTA with adaptive restart on min ½(x−θ)ᵀQ(x−θ) over K, given the exact
// Euclidean projection onto K.
template <class Proj>
Vector projected_gradient(const Matrix& q, const Vector& theta, Proj&& euclid,
                          detail::SolveStats* stats) {
  const double lmax = symmetric_eigenvalues(q).maxCoeff();
  const double step = 1.0 / lmax;
  const double tol = detail::kProjectionTolerance * std::max(1.0, theta.norm());
  Vector x = euclid(theta);
  Vector y = x;
  double t = 1.0;
  double res = kInf;
  int it = 0;
  for (; it < detail::kProjectionMaxIterations; ++it) {
    const Vector x_new = euclid(Vector(y - step * (q * (y - theta))));
    const Vector mapped = euclid(Vector(x_new - step * (q * (x_new - theta))));
    res = (x_new - mapped).norm();
    if (res <= tol) {
      x = x_new;
      break;
    }
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if ((y - x_new).dot(x_new - x) > 0.0) {
      y = x_new;
      t = 1.0;
    } else {
      y = x_new + ((t - 1.0) / t_new) * (x_new - x);
      t = t_new;
    }
    x = x_new;
  }
  if (stats) *stats = {it, res};
  if (res > tol) {
    throw ProjectionError("Bregman projection did not converge", it, res);
  }
  return x;
}

double log_gamma(double x) { return std::lgamma(x); }

}  // namespace

// ---------------------------------------------------------------------------

ConstraintSet::ConstraintSet(Shape shape, Eigen::Index dim) : shape_(std::move(shape)), dim_(dim) {}

ConstraintSet ConstraintSet::ball(Eigen::Index p, double radius) {
  if (p < 1) throw InvalidArgument("ball: dimension must be positive");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("ball: radius must be positive");
  ConstraintSet s(Ball{radius}, p);
  s.compute_radii();
  return s;
}

ConstraintSet ConstraintSet::ellipsoid(Matrix a) {
  if (a.rows() < 1 || !is_positive_definite(a)) {
    throw InvalidArgument("ellipsoid: matrix must be symmetric positive definite");
  }
  const Eigen::Index p = a.rows();
  ConstraintSet s(Ellipsoid{std::move(a)}, p);
  s.ellipsoid_eigs_ = symmetric_eigenvalues(std::get<Ellipsoid>(s.shape_).a);
  s.compute_radii();
  return s;
}

ConstraintSet ConstraintSet::lq_ball(Eigen::Index p, double q, double radius) {
  if (p < 1) throw InvalidArgument("lq_ball: dimension must be positive");
  if (!(q > 2.0) || !std::isfinite(q)) throw InvalidArgument("lq_ball: q must exceed 2");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("lq_ball: radius must be positive");
  ConstraintSet s(LqBall{q, radius}, p);
  s.compute_radii();
  return s;
}

ConstraintSet ConstraintSet::box(Vector lower, Vector upper) {
  if (lower.size() < 1 || lower.size() != upper.size()) {
    throw InvalidArgument("box: bound vectors must be nonempty and of equal length");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] < 0.0 && upper[i] > 0.0) || !std::isfinite(lower[i]) || !std::isfinite(upper[i])) {
      throw InvalidArgument("box: origin must be strictly interior (lower < 0 < upper)");
    }
  }
  const Eigen::Index p = lower.size();
  ConstraintSet s(Box{std::move(lower), std::move(upper)}, p);
  s.compute_radii();
  return s;
}

ConstraintSet ConstraintSet::polytope(Matrix a, Vector b) {
  if (a.rows() < 1 || a.cols() < 1 || a.rows() != b.size()) {
    throw InvalidArgument("polytope: need one offset per facet row");
  }
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    if (!(b[i] > 0.0) || !std::isfinite(b[i])) {
      throw InvalidArgument("polytope: offsets must be positive (origin strictly interior)");
    }
    if (a.row(i).norm() == 0.0) throw InvalidArgument("polytope: zero facet normal");
  }
  // Bounded iff the facet normals positively span R^p.
  const Eigen::Index p = a.cols();
  const Matrix at = a.transpose();
  for (Eigen::Index j = 0; j < p; ++j) {
    for (double sign : {1.0, -1.0}) {
      Vector e = Vector::Zero(p);
      e[j] = sign;
      const Vector mu = detail::nnls(at, e);
      if ((at * mu - e).norm() > 1e-9) throw InvalidArgument("polytope: set is unbounded");
    }
  }
  ConstraintSet s(Polytope{std::move(a), std::move(b)}, p);
  s.compute_radii();
  return s;
}

std::string ConstraintSet::type_name() const {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) return "ball";
        else if constexpr (std::is_same_v<T, Ellipsoid>) return "ellipsoid";
        else if constexpr (std::is_same_v<T, LqBall>) return "lq_ball";
        else if constexpr (std::is_same_v<T, Box>) return "box";
        else return "polytope";
      },
      shape_);
}

std::pair<Matrix, Vector> ConstraintSet::halfspaces() const {
  if (const auto* poly = std::get_if<Polytope>(&shape_)) return {poly->a, poly->b};
  if (const auto* box = std::get_if<Box>(&shape_)) {
    const Eigen::Index p = box->lower.size();
    Matrix a = Matrix::Zero(2 * p, p);
    Vector b(2 * p);
    // Lower faces first (−θ_i ≤ −l_i), then upper faces (θ_i ≤ u_i).
    for (Eigen::Index i = 0; i < p; ++i) {
      a(i, i) = -1.0;
      b[i] = -box->lower[i];
      a(p + i, i) = 1.0;
      b[p + i] = box->upper[i];
    }
    return {a, b};
  }
  throw InvalidArgument("halfspaces: set is not polyhedral");
}

void ConstraintSet::compute_radii() {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          inner_ = outer_ = s.radius;
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          inner_ = 1.0 / std::sqrt(ellipsoid_eigs_.maxCoeff());
          outer_ = 1.0 / std::sqrt(ellipsoid_eigs_.minCoeff());
        } else if constexpr (std::is_same_v<T, LqBall>) {
          // ‖x‖_q ≤ ‖x‖_2 ≤ p^{1/2−1/q}‖x‖_q for q ≥ 2.
          inner_ = s.radius;
          outer_ = s.radius * std::pow(static_cast<double>(dim_), 0.5 - 1.0 / s.q);
        } else if constexpr (std::is_same_v<T, Box>) {
          inner_ = std::min(s.lower.cwiseAbs().minCoeff(), s.upper.minCoeff());
          outer_ = s.lower.cwiseAbs().cwiseMax(s.upper).norm();
        } else {
          inner_ = kInf;
          for (Eigen::Index i = 0; i < s.a.rows(); ++i) inner_ = std::min(inner_, s.b[i] / s.a.row(i).norm());
          outer_ = 0.0;
          for (const auto& v : vertices(*this)) outer_ = std::max(outer_, v.norm());
        }
      },
      shape_);
}

// ---------------------------------------------------------------------------

ProjectionKind bregman(Matrix q) {
  if (q.rows() < 1 || !is_positive_definite(q)) {
    throw InvalidArgument("bregman: Q must be symmetric positive definite");
  }
  return Bregman{std::move(q)};
}

std::string kind_name(const ProjectionKind& kind) {
  return std::visit(
      [](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Euclidean>) return "euclidean";
        else if constexpr (std::is_same_v<T, Bregman>) return "bregman";
        else return "gauge";
      },
      kind);
}

std::pair<double, double> sandwich_constants(const ConstraintSet& set, const ProjectionKind& kind) {
  if (const auto* b = std::get_if<Bregman>(&kind)) {
    const Vector ev = symmetric_eigenvalues(b->q);
    return {ev.minCoeff(), ev.maxCoeff()};
  }
  if (std::holds_alternative<Gauge>(kind)) {
    const double ratio = set.outer_radius() / set.inner_radius();
    return {1.0, ratio * ratio};
  }
  return {1.0, 1.0};
}

PenaltyParams make_penalty_params(const ConstraintSet& set, const ProjectionKind& kind, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("penalty: lambda must be positive");
  const auto [c1, c2] = sandwich_constants(set, kind);
  return {lambda, c1, c2};
}

bool contains(const ConstraintSet& set, const Vector& theta) {
  require_dim(set.dim(), theta.size(), "contains");
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return theta.squaredNorm() <= s.radius * s.radius;
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          return theta.dot(s.a * theta) <= 1.0;
        } else if constexpr (std::is_same_v<T, LqBall>) {
          double sum = 0.0;
          for (Eigen::Index i = 0; i < theta.size(); ++i) sum += std::pow(std::abs(theta[i]), s.q);
          return sum <= std::pow(s.radius, s.q);
        } else if constexpr (std::is_same_v<T, Box>) {
          return (theta.array() >= s.lower.array()).all() && (theta.array() <= s.upper.array()).all();
        } else {
          return ((s.a * theta).array() <= s.b.array()).all();
        }
      },
      set.shape());
}

double gauge(const ConstraintSet& set, const Vector& theta) {
  if (contains(set, theta)) return 1.0;
  return std::max(minkowski(set, theta), std::nextafter(1.0, 2.0));
}

Vector project(const ConstraintSet& set, const ProjectionKind& kind, const Vector& theta) {
  if (contains(set, theta)) return theta;

  if (std::holds_alternative<Gauge>(kind)) return theta / gauge(set, theta);

  const Bregman* breg = std::get_if<Bregman>(&kind);
  if (breg) require_dim(set.dim(), breg->q.rows(), "project (Bregman Q)");
  const Matrix identity = Matrix::Identity(set.dim(), set.dim());
  const Matrix& q = breg ? breg->q : identity;

  return std::visit(
      [&](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          if (!breg) return theta * (s.radius / theta.norm());
          const Matrix a = identity / (s.radius * s.radius);
          return project_quadratic(a, q, theta);
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          return project_quadratic(s.a, q, theta);
        } else if constexpr (std::is_same_v<T, LqBall>) {
          auto euclid = [&](const Vector& x) { return detail::project_lq_euclidean(s.q, s.radius, x); };
          if (!breg) return euclid(theta);
          return projected_gradient(q, theta, euclid, nullptr);
        } else if constexpr (std::is_same_v<T, Box>) {
          if (!breg) return theta.cwiseMax(s.lower).cwiseMin(s.upper);
          const auto [a, b] = set.halfspaces();
          return detail::project_halfspaces(a, b, q, theta);
        } else {
          return detail::project_halfspaces(s.a, s.b, q, theta);
        }
      },
      set.shape());
}

double distance_sq(const ConstraintSet& set, const ProjectionKind& kind, const Vector& theta) {
  if (contains(set, theta)) return 0.0;
  const Vector r = theta - project(set, kind, theta);
  if (const auto* b = std::get_if<Bregman>(&kind)) return r.dot(b->q * r);
  return r.squaredNorm();
}

double penalty_value(const ConstraintSet& set, const ProjectionKind& kind, const PenaltyParams& params,
                     const Vector& theta) {
  return distance_sq(set, kind, theta) / (2.0 * params.lambda * params.lambda);
}

Vector penalty_grad(const ConstraintSet& set, const ProjectionKind& kind, const PenaltyParams& params,
                    const Vector& theta) {
  if (!(params.lambda > 0.0)) throw InvalidArgument("penalty_grad: lambda must be positive");
  if (contains(set, theta)) return Vector::Zero(theta.size());
  const double inv_l2 = 1.0 / (params.lambda * params.lambda);

  if (std::holds_alternative<Gauge>(kind)) {
    // d = ‖θ‖²(1 − 1/g)², differentiated through g.
    const double g = gauge(set, theta);
    const double w = 1.0 - 1.0 / g;
    const Vector dg = minkowski_grad(set, theta);
    const Vector dd = 2.0 * w * w * theta + (2.0 * theta.squaredNorm() * w / (g * g)) * dg;
    return 0.5 * inv_l2 * dd;
  }
  const Vector r = theta - project(set, kind, theta);
  if (const auto* b = std::get_if<Bregman>(&kind)) return inv_l2 * (b->q * r);
  return inv_l2 * r;
}

Radii radii(const ConstraintSet& set) { return {set.inner_radius(), set.outer_radius()}; }

std::vector<Vector> vertices(const ConstraintSet& set) {
  const auto [a, b] = set.halfspaces();
  const Eigen::Index m = a.rows();
  const Eigen::Index p = a.cols();
  if (p > m) return {};
  std::vector<Vector> out;
  // Iterate over p-subsets of facets via a selection mask.
  std::vector<bool> mask(static_cast<std::size_t>(m), false);
  std::fill(mask.begin(), mask.begin() + p, true);
  long combos = 0;
  do {
    if (++combos > 2000000) throw InvalidArgument("vertices: too many facet combinations");
    Matrix sub(p, p);
    Vector rhs(p);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (mask[static_cast<std::size_t>(i)]) {
        sub.row(k) = a.row(i);
        rhs[k] = b[i];
        ++k;
      }
    }
    Eigen::FullPivLU<Matrix> lu(sub);
    if (lu.rank() < p) continue;
    const Vector x = lu.solve(rhs);
    const Vector slack = a * x - b;
    bool feasible = true;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (slack[i] > 1e-10 * (1.0 + std::abs(b[i]))) feasible = false;
    }
    if (!feasible) continue;
    bool dup = false;
    for (const auto& v : out) {
      if ((v - x).norm() <= 1e-9) dup = true;
    }
    if (!dup) out.push_back(x);
  } while (std::prev_permutation(mask.begin(), mask.end()));

  if (p == 2) {
    std::sort(out.begin(), out.end(), [](const Vector& u, const Vector& v) {
      return std::atan2(u[1], u[0]) < std::atan2(v[1], v[0]);
    });
  }
  return out;
}

std::vector<Vector> boundary_polyline(const ConstraintSet& set, int segments) {
  if (set.dim() != 2) throw DimensionError("boundary_polyline: set must be two-dimensional");
  if (set.is_polyhedral()) return vertices(set);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(segments));
  for (int k = 0; k < segments; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / segments;
    Vector u(2);
    u << std::cos(phi), std::sin(phi);
    out.push_back(u / minkowski(set, u));
  }
  return out;
}

double volume(const ConstraintSet& set) {
  const double p = static_cast<double>(set.dim());
  const double unit_ball = std::exp(0.5 * p * std::log(std::numbers::pi) - log_gamma(0.5 * p + 1.0));
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return unit_ball * std::pow(s.radius, p);
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          return unit_ball / std::sqrt(s.a.determinant());
        } else if constexpr (std::is_same_v<T, LqBall>) {
          const double lv = p * std::log(2.0) + p * log_gamma(1.0 + 1.0 / s.q) - log_gamma(1.0 + p / s.q);
          return std::exp(lv) * std::pow(s.radius, p);
        } else if constexpr (std::is_same_v<T, Box>) {
          return (s.upper - s.lower).prod();
        } else {
          if (set.dim() > 3) throw InvalidArgument("volume: grid estimate limited to p <= 3");
          const double step = set.inner_radius() / 100.0;
          const double r_out = set.outer_radius();
          const int n = static_cast<int>(std::ceil(r_out / step));
          const Eigen::Index dim = set.dim();
          long count = 0;
          std::vector<int> idx(static_cast<std::size_t>(dim), -n);
          Vector x(dim);
          while (true) {
            for (Eigen::Index i = 0; i < dim; ++i) x[i] = (idx[static_cast<std::size_t>(i)] + 0.5) * step;
            if (contains(set, x)) ++count;
            std::size_t k = 0;
            while (k < idx.size() && ++idx[k] >= n) idx[k++] = -n;
            if (k == idx.size()) break;
          }
          return static_cast<double>(count) * std::pow(step, p);
        }
      },
      set.shape());
}

// ---------------------------------------------------------------------------

namespace detail {

Vector nnls(const Matrix& c, const Vector& d) {
  const Eigen::Index m = c.cols();
  Vector x = Vector::Zero(m);
  std::vector<bool> passive(static_cast<std::size_t>(m), false);
  const double tol = 1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff()) * std::max(1.0, d.norm());

  auto solve_passive = [&]() {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    }
    Matrix cp(c.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) cp.col(static_cast<Eigen::Index>(k)) = c.col(idx[k]);
    const Vector sp = cp.completeOrthogonalDecomposition().solve(d);
    Vector s = Vector::Zero(m);
    for (std::size_t k = 0; k < idx.size(); ++k) s[idx[k]] = sp[static_cast<Eigen::Index>(k)];
    return s;
  };

  for (int outer = 0; outer < 3 * static_cast<int>(m) + 10; ++outer) {
    const Vector w = c.transpose() * (d - c * x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;
    for (int inner = 0; inner < 3 * static_cast<int>(m) + 10; ++inner) {
      const Vector s = solve_passive();
      double alpha = 1.0;
      bool clipped = false;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s[j] <= 0.0) {
          const double denom = x[j] - s[j];
          if (denom > 0.0) alpha = std::min(alpha, x[j] / denom);
          clipped = true;
        }
      }
      if (!clipped) {
        x = s;
        break;
      }
      x += alpha * (s - x);
      for (Eigen::Index j = 0; j < m; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x[j] <= 1e-15) {
          passive[static_cast<std::size_t>(j)] = false;
          x[j] = 0.0;
        }
      }
    }
  }
  return x;
}

Vector project_halfspaces(const Matrix& a, const Vector& b, const Matrix& q, const Vector& theta,
                          SolveStats* stats) {
  Eigen::LLT<Matrix> qllt(q);
  const Matrix qinv_at = qllt.solve(a.transpose());  // Q⁻¹Aᵀ
  const Matrix g = a * qinv_at;                       // A Q⁻¹ Aᵀ
  const Vector r = a * theta - b;
  const Eigen::Index m = a.rows();
  const double scale = std::max(1.0, std::max(theta.norm(), b.cwiseAbs().maxCoeff()));
  const double tol = kProjectionTolerance * scale;

  auto primal = [&](const Vector& mu) -> Vector { return theta - qinv_at * mu; };
  auto natural_residual = [&](const Vector& mu) {
    const Vector slack = a * primal(mu) - b;
    return (mu - (mu + slack).cwiseMax(0.0)).cwiseAbs().maxCoeff();
  };
  // Equality-constrained solve on a guessed active set; accepted only if it
  // satisfies KKT to near machine precision.
  auto polish = [&](const std::vector<Eigen::Index>& active, Vector& mu_out) {
    if (active.empty()) return false;
    const auto k = static_cast<Eigen::Index>(active.size());
    Matrix gs(k, k);
    Vector rs(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      rs[i] = r[active[static_cast<std::size_t>(i)]];
      for (Eigen::Index j = 0; j < k; ++j) gs(i, j) = g(active[static_cast<std::size_t>(i)], active[static_cast<std::size_t>(j)]);
    }
    const Vector ms = gs.completeOrthogonalDecomposition().solve(rs);
    Vector mu = Vector::Zero(m);
    for (Eigen::Index i = 0; i < k; ++i) {
      if (ms[i] < 0.0) return false;
      mu[active[static_cast<std::size_t>(i)]] = ms[i];
    }
    if (natural_residual(mu) > 1e-13 * scale) return false;
    mu_out = mu;
    return true;
  };

  Vector mu = Vector::Zero(m);
  {
    std::vector<Eigen::Index> violated;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (r[i] > 0.0) violated.push_back(i);
    }
    Vector polished;
    if (polish(violated, polished)) {
      if (stats) *stats = {0, natural_residual(polished)};
      return primal(polished);
    }
  }

  const double lmax = symmetric_eigenvalues(g).maxCoeff();
  const double step = 1.0 / lmax;
  Vector y = mu;
  double t = 1.0;
  double res = kInf;
  int it = 0;
  for (; it < kProjectionMaxIterations; ++it) {
    const Vector mu_new = (y + step * (r - g * y)).cwiseMax(0.0);
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    // Restart when the dual objective −½μᵀGμ + μᵀr stops increasing.
    const double obj_new = -0.5 * mu_new.dot(g * mu_new) + mu_new.dot(r);
    const double obj_old = -0.5 * mu.dot(g * mu) + mu.dot(r);
    if (obj_new < obj_old) {
      y = mu;
      t = 1.0;
      continue;
    }
    y = mu_new + ((t - 1.0) / t_new) * (mu_new - mu);
    t = t_new;
    mu = mu_new;
    res = natural_residual(mu);
    if (it % 10 == 0) {
      std::vector<Eigen::Index> active;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (mu[i] > 0.0) active.push_back(i);
      }
      Vector polished;
      if (polish(active, polished)) {
        mu = polished;
        res = natural_residual(mu);
        break;
      }
    }
    if (res <= tol) break;
  }
  if (stats) *stats = {it, res};
  if (res > tol) throw ProjectionError("polyhedral projection did not converge", it, res);
  return primal(mu);
}

Vector project_lq_euclidean(double q, double radius, const Vector& theta) {
  if (lq_norm(theta, q) <= radius) return theta;
  const Vector s = theta.cwiseAbs();
  // For a multiplier c = μq, each |x_i| solves y + c·y^{q−1} = s_i. The left
  // side is convex increasing in y ≥ 0 (q ≥ 2), so Newton from y = s_i
  // decreases monotonically onto the root.
  auto coord = [q](double si, double c) {
    if (si == 0.0) return 0.0;
    double y = si;
    for (int it = 0; it < 200; ++it) {
      const double f = y + c * std::pow(y, q - 1.0) - si;
      const double df = 1.0 + c * (q - 1.0) * std::pow(y, q - 2.0);
      const double next = std::max(0.0, y - f / df);
      if (std::abs(next - y) <= 1e-17 * si) {
        y = next;
        break;
      }
      y = next;
    }
    return y;
  };
  auto solve = [&](double c) {
    Vector y(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) y[i] = coord(s[i], c);
    return y;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (lq_norm(solve(hi), q) > radius) hi *= 2.0;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (lq_norm(solve(mid), q) > radius) lo = mid; else hi = mid;
  }
  Vector y = solve(hi);
  const double n = lq_norm(y, q);
  if (n > radius) y *= radius / n;
  Vector x(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) x[i] = theta[i] < 0.0 ? -y[i] : y[i];
  return x;
}

}  // namespace detail

}  // namespace pkld

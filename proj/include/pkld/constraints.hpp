#pragma once

// Convex compact constraint sets, their projections and the quadratic
// distance penalty ℓ^λ_K(θ) = d_K(θ) / (2λ²).

#include "pkld/common.hpp"

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace pkld {

struct Ball {
  double radius;
};

/// {θ : θᵀAθ ≤ 1}, A symmetric positive definite.
struct Ellipsoid {
  Matrix a;
};

/// {θ : ‖θ‖_q ≤ radius}, q > 2.
struct LqBall {
  double q;
  double radius;
};

/// {θ : lower ≤ θ ≤ upper} with lower < 0 < upper componentwise.
struct Box {
  Vector lower;
  Vector upper;
};

/// {θ : a_iᵀθ ≤ b_i for every row i}, b_i > 0, bounded.
struct Polytope {
  Matrix a;
  Vector b;
};

/// A convex compact set with the origin strictly inside. Built only through
/// the named constructors, which validate the geometry and cache the radii.
class ConstraintSet {
 public:
  using Shape = std::variant<Ball, Ellipsoid, LqBall, Box, Polytope>;

  static ConstraintSet ball(Eigen::Index p, double radius);
  static ConstraintSet ellipsoid(Matrix a);
  static ConstraintSet lq_ball(Eigen::Index p, double q, double radius);
  static ConstraintSet box(Vector lower, Vector upper);
  static ConstraintSet polytope(Matrix a, Vector b);

  Eigen::Index dim() const { return dim_; }
  const Shape& shape() const { return shape_; }
  std::string type_name() const;

  /// Largest r with B(r) ⊂ K and smallest R with K ⊂ B(R).
  double inner_radius() const { return inner_; }
  double outer_radius() const { return outer_; }

  /// Halfspace form (rows a_i, offsets b_i). Only for Box and Polytope.
  std::pair<Matrix, Vector> halfspaces() const;

  bool is_polyhedral() const {
    return std::holds_alternative<Box>(shape_) || std::holds_alternative<Polytope>(shape_);
  }

 private:
  ConstraintSet(Shape shape, Eigen::Index dim);
  void compute_radii();

  Shape shape_;
  Eigen::Index dim_;
  double inner_ = 0.0;
  double outer_ = 0.0;
  // Eigenvalues of the ellipsoid matrix, increasing.
  Vector ellipsoid_eigs_;
};

struct Euclidean {};

/// argmin_{θ'∈K} (θ−θ')ᵀQ(θ−θ'), Q symmetric positive definite.
struct Bregman {
  Matrix q;
};

struct Gauge {};

using ProjectionKind = std::variant<Euclidean, Bregman, Gauge>;

/// Validates Q (symmetric, positive definite) and wraps it.
ProjectionKind bregman(Matrix q);

std::string kind_name(const ProjectionKind& kind);

struct PenaltyParams {
  double lambda = 1.0;
  // Distance-equivalence constants: c1‖θ−P_E(θ)‖² ≤ d_K(θ) ≤ c2‖θ−P_E(θ)‖².
  double c1 = 1.0;
  double c2 = 1.0;
};

/// Penalty parameters with the analytic (c1, c2) for this set/kind pair.
PenaltyParams make_penalty_params(const ConstraintSet& set, const ProjectionKind& kind,
                                  double lambda);

/// (c1, c2) relative to the Euclidean projection residual.
std::pair<double, double> sandwich_constants(const ConstraintSet& set, const ProjectionKind& kind);

bool contains(const ConstraintSet& set, const Vector& theta);

/// inf{t ≥ 1 : θ ∈ tK}.
double gauge(const ConstraintSet& set, const Vector& theta);

Vector project(const ConstraintSet& set, const ProjectionKind& kind, const Vector& theta);

/// d_K(θ). Bregman distances are measured in the Q-norm.
double distance_sq(const ConstraintSet& set, const ProjectionKind& kind, const Vector& theta);

/// ℓ^λ_K(θ) = d_K(θ) / (2λ²).
double penalty_value(const ConstraintSet& set, const ProjectionKind& kind,
                     const PenaltyParams& params, const Vector& theta);

/// ∇ℓ^λ_K(θ). Zero whenever contains(θ).
Vector penalty_grad(const ConstraintSet& set, const ProjectionKind& kind,
                    const PenaltyParams& params, const Vector& theta);

struct Radii {
  double inner;
  double outer;
};

Radii radii(const ConstraintSet& set);

/// Vertices of a Box or Polytope (any dimension; enumerated from facet
/// p-subsets). For two-dimensional sets the result is ordered by angle.
std::vector<Vector> vertices(const ConstraintSet& set);

/// Closed boundary polyline of a two-dimensional set: exact vertices for
/// polyhedral sets, `segments` gauge-scaled directions otherwise.
std::vector<Vector> boundary_polyline(const ConstraintSet& set, int segments = 256);

/// Volume of K: closed form for balls, ellipsoids and boxes, otherwise a grid
/// count with spacing inner_radius/100 (p ≤ 3).
double volume(const ConstraintSet& set);

namespace detail {

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;
};

inline constexpr int kProjectionMaxIterations = 10000;
inline constexpr double kProjectionTolerance = 1e-10;

/// Nonnegative least squares min ‖Cx − d‖, x ≥ 0 (Lawson–Hanson).
Vector nnls(const Matrix& c, const Vector& d);

/// Minimizer of ½(x−θ)ᵀQ(x−θ) over {Ax ≤ b}. Dual accelerated projected
/// gradient followed by an active-set polish.
Vector project_halfspaces(const Matrix& a, const Vector& b, const Matrix& q, const Vector& theta,
                          SolveStats* stats = nullptr);

/// Euclidean projection onto the ℓq ball (separable KKT solve).
Vector project_lq_euclidean(double q, double radius, const Vector& theta);

}  // namespace detail

}  // namespace pkld

#pragma once

// Empirical Wasserstein distances, constraint satisfaction, exact sampling of
// truncated Gaussian targets, and order/contraction estimation.

#include "pkld/common.hpp"
#include "pkld/constraints.hpp"
#include "pkld/integrators.hpp"
#include "pkld/potentials.hpp"

#include <functional>
#include <string>
#include <vector>

namespace pkld {

using SampleSet = std::vector<Vector>;

inline constexpr std::size_t kAssignmentCap = 4096;

/// Minimum-cost perfect matching on a square cost matrix; returns the column
/// assigned to each row.
std::vector<int> solve_assignment(const Matrix& cost);

/// Pairwise ‖a_i − b_j‖^q. The parallel and serial versions agree exactly.
Matrix cost_matrix(const SampleSet& a, const SampleSet& b, int q);
Matrix cost_matrix_serial(const SampleSet& a, const SampleSet& b, int q);

/// Empirical W_q between equally weighted samples of equal size. Exact:
/// sorted quantiles in one dimension, optimal assignment otherwise.
double wasserstein(const SampleSet& a, const SampleSet& b, int q);

double inside_fraction(const SampleSet& s, const ConstraintSet& set);

struct RejectionResult {
  SampleSet samples;
  long proposals = 0;
  double acceptance = 0.0;
};

inline constexpr double kMinAcceptance = 1e-4;
inline constexpr long kAcceptanceProbe = 100000;

/// Exact draws from e^{−f}·1_K for a Gaussian f by proposing from N(0, Σ).
RejectionResult rejection_sample_target(const Potential& pot, const ConstraintSet& set, std::size_t n, Rng& rng);

struct OrderFit {
  std::vector<double> steps;
  std::vector<double> errors;
  std::vector<double> unstable_steps;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
};

/// Least-squares fit of log(error) against log(step); at least 3 points.
OrderFit fit_order(const std::vector<double>& steps, const std::vector<double>& errors);

/// One-step map of a linear (Gaussian-target) scheme: given the state and the
/// step's standard normals, return the next state.
using LinearStep = std::function<KineticState(const KineticState&, double h, const Vector& normals)>;

/// Which stationary moments the bias is read from.
enum class BiasObservable {
  joint,     // max |Σ_ij − δ_ij| over the joint (θ, v) covariance
  position,  // |Var θ − 1|
};

/// Stationary covariance of x' = M x + B ξ, solved from (I − M⊗M) vec Σ = vec BBᵀ.
/// Throws if the spectral radius of M is ≥ 1.
Matrix stationary_covariance(const Matrix& m, const Matrix& b);

/// Exact discrete stationary covariance of a linear scheme on the 1-D target
/// f = ½kθ², obtained by probing `step` with basis states and noises.
Matrix scheme_stationary_covariance(const LinearStep& step, int noise_width, double h);

LinearStep linear_step(Scheme s, double precision, double gamma);

OrderFit weak_bias_ladder(Scheme s, double precision, double gamma, const std::vector<double>& hs,
                          BiasObservable obs = BiasObservable::joint);
OrderFit weak_bias_ladder(const LinearStep& step, int noise_width, const std::vector<double>& hs,
                          BiasObservable obs = BiasObservable::joint);

struct StrongOptions {
  double horizon = 1.0;
  int refinement = 16;
  int paths = 1000;
  std::uint64_t seed = 1;
};

/// RMS terminal (θ, v) error against a reference run at h/refinement on the
/// same Brownian path. Every h must be an integer multiple of the smallest.
OrderFit strong_error_ladder(Scheme s, const PenalizedPotential& u, double gamma, const std::vector<double>& hs,
                             const StrongOptions& opt);
OrderFit strong_error_ladder_serial(Scheme s, const PenalizedPotential& u, double gamma,
                                    const std::vector<double>& hs, const StrongOptions& opt);

/// Negated least-squares slope of log d_k against k (zero distances skipped).
double contraction_fit(const std::vector<double>& distances);

}  // namespace pkld

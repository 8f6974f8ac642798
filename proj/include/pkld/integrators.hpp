#pragma once

// Kinetic Langevin splitting integrators. Operators: B (gradient kick),
// A (free drift), O (velocity Ornstein-Uhlenbeck) and U (exact joint OU
// flow of the gradient-free dynamics). Compositions: CUBU = U B U,
// CBAOAB = B A O A B, CKLMC = Euler-Maruyama.

#include "pkld/common.hpp"
#include "pkld/potentials.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pkld {

struct KineticState {
  Vector theta;
  Vector v;
};

enum class Scheme { cubu, cbaoab, cklmc };
enum class GradientMode { full, stochastic };

std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& name);

/// h_k = h · factor^⌊k/period⌋.
struct StepSchedule {
  double factor = 1.0;
  long period = 1;
};

struct IntegratorConfig {
  Scheme scheme = Scheme::cubu;
  GradientMode mode = GradientMode::full;
  double h = 0.1;
  double gamma = 2.0;
  std::optional<StepSchedule> schedule;

  /// η = exp(−γh/2).
  double eta() const;
  double step_at(long k) const;
  void validate() const;
};

/// Correlated Gaussian pair over a duration t:
///   Z1 = ∫₀ᵗ dW_s,   Z2 = ∫₀ᵗ e^{−γ(t−s)} dW_s.
struct OuIncrement {
  Vector z1;
  Vector z2;
};

/// Noise consumed by one step. CUBU uses both half-step increments, CBAOAB
/// and CKLMC use the single standard normal `xi`.
struct NoiseBlock {
  OuIncrement first;
  OuIncrement second;
  Vector xi;
};

/// Standard normals needed per coordinate per step.
int noise_width(Scheme s);

/// Exact (Z1, Z2) over duration t from two independent standard normals.
OuIncrement ou_increment(double t, double gamma, const Vector& xi1, const Vector& xi2);

/// (Var Z1, Var Z2, Cov(Z1, Z2)) per coordinate for duration t.
struct OuMoments {
  double var_z1;
  double var_z2;
  double cov;
};
OuMoments ou_moments(double t, double gamma);

/// Increment over [0, a+b] from consecutive increments over [0, a] and [a, a+b].
OuIncrement ou_concat(const OuIncrement& first, const OuIncrement& second, double second_duration,
                      double gamma);

/// Assemble a step's noise block from `noise_width(s)·p` standard normals.
NoiseBlock noise_from_normals(Scheme s, double h, double gamma, const Vector& normals, Eigen::Index p);

/// Noise block for scheme s from two half-step OU increments of one path.
NoiseBlock noise_from_path(Scheme s, double h, double gamma, const OuIncrement& first,
                           const OuIncrement& second);

using GradientFn = std::function<Vector(const Vector&)>;

KineticState op_U(const KineticState& x, double t, const OuIncrement& z, double gamma);
KineticState op_U(const KineticState& x, double t, const Vector& xi1, const Vector& xi2, double gamma);
KineticState op_B(const KineticState& x, double h, const Vector& gradient);
KineticState op_B(const KineticState& x, double h, const GradientFn& grad);
KineticState op_A(const KineticState& x, double t);
KineticState op_O(const KineticState& x, double t, const Vector& xi, double gamma);

KineticState step_cubu(const KineticState& x, double h, double gamma, const GradientFn& grad,
                       const NoiseBlock& noise);

/// `cache` holds ∇U(θ) at the incoming position and is replaced by the
/// gradient at the outgoing position.
KineticState step_cbaoab(const KineticState& x, double h, double gamma, const GradientFn& grad,
                         const NoiseBlock& noise, Vector& cache);

KineticState step_cklmc(const KineticState& x, double h, double gamma, const GradientFn& grad,
                        const NoiseBlock& noise);

/// Gradient of U^λ for a chain: exact, or with ∇f replaced by a stochastic
/// estimate drawn from `rng`.
GradientFn make_gradient(const PenalizedPotential& u, const StochasticGradient* sg, Rng& rng);

struct Trace {
  std::vector<KineticState> states;
  IntegratorConfig config;
  std::uint64_t seed = 0;
  long gradient_calls = 0;
  double wall_seconds = 0.0;
};

inline constexpr double kDivergenceThreshold = 1e8;

/// θ₀ = 0, v₀ ~ N(0, I) drawn from the seed's initialization stream.
KineticState default_initial(Eigen::Index p, std::uint64_t seed);

/// n steps from `initial`. Step noise, gradient noise and initialization use
/// separate streams of `seed`. `sg` is required in stochastic mode.
Trace run_chain(const KineticState& initial, long n, const IntegratorConfig& config,
                const PenalizedPotential& u, const StochasticGradient* sg, std::uint64_t seed,
                bool keep_states = true);

struct CoupledTrace {
  Trace a;
  Trace b;
  std::vector<double> distances;  // ‖(θ_a, v_a) − (θ_b, v_b)‖ at steps 0..n
};

/// Two chains driven by identical step and gradient noise.
CoupledTrace run_coupled(const KineticState& initial_a, const KineticState& initial_b, long n,
                         const IntegratorConfig& config, const PenalizedPotential& u,
                         const StochasticGradient* sg, std::uint64_t seed);

/// Seed of chain i in an ensemble rooted at `root`.
std::uint64_t chain_seed(std::uint64_t root, std::uint64_t i);

/// Final states of `chains` independent chains (default initialization).
/// Parallel over chains; results are identical to the serial version.
std::vector<KineticState> run_ensemble(long n, const IntegratorConfig& config, const PenalizedPotential& u,
                                       const StochasticGradient* sg, std::uint64_t root, int chains);
std::vector<KineticState> run_ensemble_serial(long n, const IntegratorConfig& config,
                                              const PenalizedPotential& u, const StochasticGradient* sg,
                                              std::uint64_t root, int chains);

/// Fine Brownian path stored as OU increments of width dt, for coupling chains
/// run at different step sizes.
class BrownianPath {
 public:
  BrownianPath(Eigen::Index p, double dt, long steps, double gamma, Rng& rng);

  double dt() const { return dt_; }
  long steps() const { return static_cast<long>(increments_.size()); }

  /// Aggregate of fine increments [begin, begin + count).
  OuIncrement aggregate(long begin, long count) const;

  /// Noise block of step k at step size h (h/2 must be a multiple of dt).
  NoiseBlock block(Scheme s, long k, double h) const;

 private:
  double dt_;
  double gamma_;
  std::vector<OuIncrement> increments_;
};

/// Run `n` steps at size h driven by a Brownian path (no gradient noise).
KineticState run_on_path(const KineticState& initial, long n, Scheme s, double h, double gamma,
                         const PenalizedPotential& u, const BrownianPath& path);

void write_trace_csv(const Trace& trace, std::ostream& out);

}  // namespace pkld

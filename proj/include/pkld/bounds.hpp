#pragma once

// Closed-form convergence bounds, admissibility windows and complexity
// schedules for the constrained kinetic samplers. Unspecified universal
// constants are taken as 1 and reported as such.

#include "pkld/potentials.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pkld {

struct ProblemConstants {
  double m = 1.0;
  double L = 1.0;
  double L1 = 0.0;
  double M = 1.0;   // M^λ
  double M1 = 0.0;  // M₁^λ
  double c1 = 1.0;
  double r = 1.0;
  double R = 1.0;
  double p = 1.0;
  double osc = 0.0;  // sup_K f − inf_K f
  double vol = 1.0;  // Vol(K)
  double sigma1 = 0.0;
  double sigma2 = 0.0;

  double kappa() const { return M / m; }
};

/// Constants of a constrained problem. osc_K(f) is exact for Gaussians on
/// balls and boxes and a grid estimate (spacing r/100, p ≤ 3) otherwise.
/// M₁^λ falls back to 0 when no formula exists (see `penalized_constants`).
ProblemConstants problem_constants(const PenalizedPotential& u, const StochasticGradient* sg = nullptr);

struct Oscillation {
  double inf;
  double sup;
  bool exact;
};
Oscillation oscillation(const Potential& f, const ConstraintSet& set);

/// Largest admissible penalty scale for W_q:
/// min(√c1·r/(p+q), √c1·r·e^{osc}/(3√π·Vol·p)).
double lambda_admissible(const ProblemConstants& c, double q);

enum class GapRegime { linear, logarithmic, power };

struct GapRate {
  GapRegime regime;
  std::string tag;
  double exponent;  // λ-exponent of the rate
};

/// Phase transition by the sign of 1/p + 1/q − 1.
GapRate surrogate_gap_rate(double p, double q);

/// C(p,q) = C0·[p·e^{4 osc}/√c1·(max(R,1)/min(r,1))^{2p+1}]^{1/p+1/q}.
double surrogate_gap_constant(const ProblemConstants& c, double q, double c0 = 1.0);

/// C(p,q) times the regime's rate in λ.
double surrogate_gap_bound(const ProblemConstants& c, double q, double lambda, double c0 = 1.0);

/// Per-step contraction factor 1 − mh/(3M^λ).
double cubu_contraction(double m, double M, double h);

/// (1/√M^λ + C1·M₁^λ/(M^λ)²)·κ·√p·h².
double cubu_bias(double M, double M1, double kappa, double p, double h, double c1_const = 1.0);

struct BoundTerms {
  double decay = 0.0;
  double bias = 0.0;
  double noise = 0.0;
  bool admissible = true;
  std::string reason;
};

/// 21·e^{−mh(n−1)/(4γ)}·W0 and 66000·(√M/m)(4√(Mp) + 3M₁p/M)·γh². Requires
/// γ ≥ 2√M and h < (1 − e^{−γh})/(4√M) ∧ 4γ/m; violations are flagged.
BoundTerms cbaoab_bound_terms(double m, double M, double M1, double p, double gamma, double h, long n,
                              double w0 = 1.0);

/// SG-CUBU W2 terms: (1 − mh/(8γ))^{n/2}·W0, the gradient-noise term and
/// √p(√M + γ)h². Requires γ ≥ √(8M) and h < mM/(4γσ2²) ∧ 1/(2γ).
BoundTerms sg_cubu_bound_terms(double m, double M, double L, double sigma1, double sigma2, double p, double gamma,
                               double h, long n, double w0 = 1.0);

struct SgCklmcConstants {
  double tau = 0.0;
  double k1 = 0.0;
  double h_max = 0.0;
  bool admissible = true;
  std::string reason;
};

SgCklmcConstants sg_cklmc_constants(double m, double M, double gamma, double sigma1, double L);

/// C_V = E_μ0[V] + (4/τ)(p + m·f(0)/(2M + γ²)).
double sg_cklmc_cv(double expected_v0, double tau, double p, double m, double f0, double M, double gamma);

/// (1 − 0.75mh/γ)^n·W0, √2·M·h·√p/m and 8√2·σ1·L/(mγ)·√(C_V/(1 − 2τ)).
BoundTerms sg_cklmc_bound_terms(double m, double M, double L, double sigma1, double p, double gamma, double h,
                                long n, double cv, double tau, double w0 = 1.0);

struct SgCbaoabConstants {
  double rho = 0.0;
  double c_bias = 0.0;
  double c_v = 0.0;
  double d_v = 0.0;
  double lambda_fg = 0.0;
  double c_fg = 0.0;
  double lambda_sg = 0.0;
  double c_sg = 0.0;
  double c_mom = 0.0;
  double k_noise = 0.0;
  bool noise_small = true;  // σ1² ≤ λ_fg²/(20 M² C_V)
};

SgCbaoabConstants sg_cbaoab_constants(double m, double M, double M1, double gamma, double h, double sigma1, double p,
                                      double initial_moment);

/// 4(1 − e^{−γh})/m·K_noise, (1 − ρ)^n(W0 + C_bias·h(1 − e^{−γh})) and C_bias·h(1 − e^{−γh}).
BoundTerms sg_cbaoab_bound_terms(const SgCbaoabConstants& k, double m, double gamma, double h, long n, double w0 = 1.0);

enum class Metric { w1, w2 };

struct Schedule {
  std::string id;
  Metric metric = Metric::w2;
  double epsilon = 0.0;
  double p = 0.0;
  double h = 0.0;
  double lambda = 0.0;
  double n = 0.0;                // ε-power, before log factors
  long iterations = 0;           // ⌈n⌉
  std::optional<double> batch;   // stochastic-gradient rows only
  double h_exponent = 0.0;       // h = ε^{h_exponent}
  double n_exponent = 0.0;       // n = ε^{−n_exponent}
  double b_exponent = 0.0;       // b = ε^{−b_exponent}
  double lambda_power = 0.0;     // λ = h^{lambda_power}
  std::string annotation;
};

std::vector<std::string> schedule_ids();

/// Step size, penalty, iteration count and batch size with unit leading
/// constants. Requires ε ∈ (0, 1) and p > 2.
Schedule schedule(const std::string& id, double epsilon, double p);

}  // namespace pkld

#pragma once

// Target potentials f, the penalized surrogate U^λ = f + ℓ^λ_K, and
// stochastic gradient estimators of ∇f.

#include "pkld/common.hpp"
#include "pkld/constraints.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace pkld {

/// Linear-regression data: rows of `a` are the features a_j, `y` the responses.
struct RegressionData {
  Matrix a;
  Vector y;

  Eigen::Index count() const { return a.rows(); }
  Eigen::Index dim() const { return a.cols(); }
};

/// f(θ) = ½ θᵀ Σ⁻¹ θ, minimum at the origin.
struct Quadratic {
  Matrix precision;
};

/// f(θ) = Σ_j ½(y_j − a_jᵀθ)². Sufficient statistics are cached so full
/// evaluations cost O(p²) instead of O(np).
struct SumOfLosses {
  RegressionData data;
  Matrix gram;     // AᵀA
  Vector moment;   // Aᵀy
  double yy = 0.0; // yᵀy
};

class Potential {
 public:
  using Form = std::variant<Quadratic, SumOfLosses>;

  static Potential quadratic(Matrix precision);
  static Potential isotropic(Eigen::Index p, double precision = 1.0);
  static Potential sum_of_losses(RegressionData data);

  Eigen::Index dim() const { return dim_; }
  const Form& form() const { return form_; }
  bool is_quadratic() const { return std::holds_alternative<Quadratic>(form_); }

  /// Strong convexity, smoothness and Hessian-Lipschitz constants.
  double m() const { return m_; }
  double L() const { return l_; }
  double L1() const { return l1_; }

  /// Hessian (constant for both forms).
  const Matrix& hessian() const { return hessian_; }

 private:
  Potential(Form form, Eigen::Index dim, Matrix hessian);

  Form form_;
  Eigen::Index dim_;
  Matrix hessian_;
  double m_ = 0.0;
  double l_ = 0.0;
  double l1_ = 0.0;
};

double eval(const Potential& pot, const Vector& theta);
Vector grad(const Potential& pot, const Vector& theta);

/// U^λ = f + ℓ^λ_K. Without a constraint the penalty is absent and U^λ = f.
class PenalizedPotential {
 public:
  explicit PenalizedPotential(Potential base);
  PenalizedPotential(Potential base, ConstraintSet set, ProjectionKind kind, double lambda);

  const Potential& base() const { return base_; }
  const std::optional<ConstraintSet>& set() const { return set_; }
  const ProjectionKind& kind() const { return kind_; }
  const PenaltyParams& params() const { return params_; }
  Eigen::Index dim() const { return base_.dim(); }
  bool constrained() const { return set_.has_value(); }

  /// Lipschitz factor of the penalty gradient before the 1/λ² scaling.
  double c_proj() const;
  /// M^λ = L + C_proj/λ².
  double smoothness() const;

 private:
  Potential base_;
  std::optional<ConstraintSet> set_;
  ProjectionKind kind_ = Euclidean{};
  PenaltyParams params_;
};

double eval_penalized(const PenalizedPotential& u, const Vector& theta);
Vector grad_penalized(const PenalizedPotential& u, const Vector& theta);

struct PenalizedConstants {
  double m_lambda = 0.0;                 // M^λ
  std::optional<double> m1_lambda;       // M₁^λ when a formula exists
  std::string note;                      // reason when M₁^λ is unavailable
};

PenalizedConstants penalized_constants(const PenalizedPotential& u);

enum class Sampling { with_replacement, without_replacement };

/// Unbiased estimator G(θ, ω) of ∇f. Either a minibatch over a SumOfLosses
/// dataset, scaled by n/b, or ∇f plus Gaussian noise whose total variance is
/// σ1²L²‖θ‖² (for targets without a dataset).
class StochasticGradient {
 public:
  static StochasticGradient minibatch(Potential pot, Eigen::Index batch,
                                      Sampling sampling = Sampling::without_replacement);
  static StochasticGradient additive_noise(Potential pot, double sigma1);

  const Potential& potential() const { return pot_; }
  Eigen::Index batch() const { return batch_; }
  Sampling sampling() const { return sampling_; }
  bool is_minibatch() const { return minibatch_; }
  double sigma1() const { return sigma1_; }
  double sigma2() const { return sigma2_; }

 private:
  StochasticGradient(Potential pot) : pot_(std::move(pot)) {}

  Potential pot_;
  bool minibatch_ = false;
  Eigen::Index batch_ = 0;
  Sampling sampling_ = Sampling::without_replacement;
  double sigma1_ = 0.0;
  double sigma2_ = 0.0;
};

Vector stoch_grad(const StochasticGradient& sg, const Vector& theta, Rng& rng);

/// n draws a_j ~ N(0, I), y_j = θ⋆ᵀa_j + η_j with η_j ~ N(0, noise_var).
RegressionData generate_regression_data(Eigen::Index n, const Vector& theta_star, double noise_var,
                                        Rng& rng);

/// CSV with header a_1,…,a_p,y.
void write_regression_csv(const RegressionData& data, std::ostream& out);
RegressionData read_regression_csv(std::istream& in);

}  // namespace pkld

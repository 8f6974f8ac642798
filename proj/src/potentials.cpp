#include "pkld/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace pkld {

Potential::Potential(Form form, Eigen::Index dim, Matrix hessian)
    : form_(std::move(form)), dim_(dim), hessian_(std::move(hessian)) {
  const Vector ev = symmetric_eigenvalues(hessian_);
  m_ = std::max(0.0, ev.minCoeff());
  l_ = ev.maxCoeff();
  l1_ = 0.0;  // both forms are quadratic in θ
}

Potential Potential::quadratic(Matrix precision) {
  if (precision.rows() < 1 || precision.rows() != precision.cols()) {
    throw InvalidArgument("quadratic: precision must be square");
  }
  if ((precision - precision.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, precision.cwiseAbs().maxCoeff())) {
    throw InvalidArgument("quadratic: precision must be symmetric");
  }
  if (symmetric_eigenvalues(precision).minCoeff() <= 0.0) {
    throw InvalidArgument("quadratic: precision must be positive definite");
  }
  const Eigen::Index p = precision.rows();
  Matrix h = precision;
  return Potential(Quadratic{std::move(precision)}, p, std::move(h));
}

Potential Potential::isotropic(Eigen::Index p, double precision) {
  if (p < 1) throw InvalidArgument("isotropic: dimension must be positive");
  return quadratic(precision * Matrix::Identity(p, p));
}

Potential Potential::sum_of_losses(RegressionData data) {
  if (data.count() < 1) throw InvalidArgument("sum_of_losses: empty dataset");
  if (data.y.size() != data.count()) throw InvalidArgument("sum_of_losses: features and responses differ in length");
  if (!data.a.allFinite() || !data.y.allFinite()) throw InvalidArgument("sum_of_losses: non-finite entries");
  SumOfLosses s;
  s.gram = data.a.transpose() * data.a;
  s.moment = data.a.transpose() * data.y;
  s.yy = data.y.squaredNorm();
  const Eigen::Index p = data.dim();
  Matrix h = s.gram;
  s.data = std::move(data);
  return Potential(std::move(s), p, std::move(h));
}

double eval(const Potential& pot, const Vector& theta) {
  require_dim(pot.dim(), theta.size(), "eval");
  if (const auto* q = std::get_if<Quadratic>(&pot.form())) return 0.5 * theta.dot(q->precision * theta);
  const auto& s = std::get<SumOfLosses>(pot.form());
  return 0.5 * theta.dot(s.gram * theta) - theta.dot(s.moment) + 0.5 * s.yy;
}

Vector grad(const Potential& pot, const Vector& theta) {
  require_dim(pot.dim(), theta.size(), "grad");
  if (const auto* q = std::get_if<Quadratic>(&pot.form())) return q->precision * theta;
  const auto& s = std::get<SumOfLosses>(pot.form());
  return s.gram * theta - s.moment;
}

// ---------------------------------------------------------------------------

PenalizedPotential::PenalizedPotential(Potential base) : base_(std::move(base)) {}

PenalizedPotential::PenalizedPotential(Potential base, ConstraintSet set, ProjectionKind kind, double lambda)
    : base_(std::move(base)), set_(std::move(set)), kind_(std::move(kind)) {
  require_dim(base_.dim(), set_->dim(), "PenalizedPotential (constraint)");
  if (const auto* b = std::get_if<Bregman>(&kind_)) require_dim(base_.dim(), b->q.rows(), "PenalizedPotential (Q)");
  params_ = make_penalty_params(*set_, kind_, lambda);
}

double PenalizedPotential::c_proj() const {
  if (!set_) return 0.0;
  if (const auto* b = std::get_if<Bregman>(&kind_)) return symmetric_eigenvalues(b->q).maxCoeff();
  return 1.0;
}

double PenalizedPotential::smoothness() const {
  if (!set_) return base_.L();
  return base_.L() + c_proj() / (params_.lambda * params_.lambda);
}

double eval_penalized(const PenalizedPotential& u, const Vector& theta) {
  double v = eval(u.base(), theta);
  if (u.set()) v += penalty_value(*u.set(), u.kind(), u.params(), theta);
  return v;
}

Vector grad_penalized(const PenalizedPotential& u, const Vector& theta) {
  Vector g = grad(u.base(), theta);
  if (u.set()) g += penalty_grad(*u.set(), u.kind(), u.params(), theta);
  return g;
}

PenalizedConstants penalized_constants(const PenalizedPotential& u) {
  PenalizedConstants out;
  out.m_lambda = u.smoothness();
  const double l1 = u.base().L1();
  if (!u.set()) {
    out.m1_lambda = l1;
    return out;
  }
  const double inv_l2 = 1.0 / (u.params().lambda * u.params().lambda);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          out.m1_lambda = l1 + 4.0 * inv_l2;
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          const Vector ev = symmetric_eigenvalues(s.a);
          out.m1_lambda = l1 + 4.0 * inv_l2 * std::pow(ev.maxCoeff() / ev.minCoeff(), 3);
        } else if constexpr (std::is_same_v<T, LqBall>) {
          const double p = static_cast<double>(u.dim());
          out.m1_lambda = l1 + 8.0 * inv_l2 * std::pow(p, 1.5) * (s.q - 1.0) * (s.q - 1.0);
        } else {
          out.note = "constant unavailable: polyhedral boundary is not twice differentiable";
        }
      },
      u.set()->shape());
  return out;
}

// ---------------------------------------------------------------------------

StochasticGradient StochasticGradient::minibatch(Potential pot, Eigen::Index batch, Sampling sampling) {
  const auto* s = std::get_if<SumOfLosses>(&pot.form());
  if (!s) throw InvalidArgument("minibatch: potential has no dataset");
  const Eigen::Index n = s->data.count();
  if (batch < 1 || batch > n) throw InvalidArgument("minibatch: batch size must lie in [1, n]");

  // Variance of the minibatch Hessian estimator (n/b)Σ a_j a_jᵀ in Frobenius
  // norm: single-draw variance n·Σ‖a_j‖⁴ − ‖AᵀA‖²_F, divided by b, with the
  // finite-population correction when sampling without replacement.
  const double nn = static_cast<double>(n);
  const double bb = static_cast<double>(batch);
  const double fourth = s->data.a.rowwise().squaredNorm().array().square().sum();
  double var = std::max(0.0, nn * fourth - s->gram.squaredNorm()) / bb;
  if (sampling == Sampling::without_replacement) var *= n > 1 ? (nn - bb) / (nn - 1.0) : 0.0;

  StochasticGradient sg(std::move(pot));
  sg.minibatch_ = true;
  sg.batch_ = batch;
  sg.sampling_ = sampling;
  sg.sigma2_ = std::sqrt(var);
  sg.sigma1_ = sg.sigma2_ / sg.pot_.L();
  return sg;
}

StochasticGradient StochasticGradient::additive_noise(Potential pot, double sigma1) {
  if (!(sigma1 >= 0.0) || !std::isfinite(sigma1)) throw InvalidArgument("additive_noise: sigma1 must be nonnegative");
  StochasticGradient sg(std::move(pot));
  sg.sigma1_ = sigma1;
  sg.sigma2_ = sigma1 * sg.pot_.L();
  return sg;
}

Vector stoch_grad(const StochasticGradient& sg, const Vector& theta, Rng& rng) {
  const Potential& pot = sg.potential();
  require_dim(pot.dim(), theta.size(), "stoch_grad");
  if (!sg.is_minibatch()) {
    const double p = static_cast<double>(theta.size());
    const double scale = sg.sigma1() * pot.L() * theta.norm() / std::sqrt(p);
    Vector g = grad(pot, theta);
    if (scale > 0.0) g += scale * standard_normal(rng, theta.size());
    return g;
  }
  const auto& data = std::get<SumOfLosses>(pot.form()).data;
  const Eigen::Index n = data.count();
  const Eigen::Index b = sg.batch();
  if (b == n && sg.sampling() == Sampling::without_replacement) return grad(pot, theta);

  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(b));
  if (sg.sampling() == Sampling::with_replacement) {
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    for (Eigen::Index k = 0; k < b; ++k) idx.push_back(pick(rng));
  } else {
    // Floyd's algorithm: a uniform b-subset in O(b) draws.
    for (Eigen::Index j = n - b; j < n; ++j) {
      std::uniform_int_distribution<Eigen::Index> pick(0, j);
      const Eigen::Index t = pick(rng);
      idx.push_back(std::find(idx.begin(), idx.end(), t) == idx.end() ? t : j);
    }
  }
  Vector g = Vector::Zero(theta.size());
  for (Eigen::Index j : idx) {
    const double resid = data.y[j] - data.a.row(j).dot(theta);
    g.noalias() -= resid * data.a.row(j).transpose();
  }
  return (static_cast<double>(n) / static_cast<double>(b)) * g;
}

RegressionData generate_regression_data(Eigen::Index n, const Vector& theta_star, double noise_var, Rng& rng) {
  if (n < 1) throw InvalidArgument("generate_regression_data: n must be positive");
  if (!(noise_var >= 0.0)) throw InvalidArgument("generate_regression_data: noise variance must be nonnegative");
  const Eigen::Index p = theta_star.size();
  RegressionData d;
  d.a.resize(n, p);
  d.y.resize(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(noise_var);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) d.a(j, i) = normal(rng);
    d.y[j] = d.a.row(j).dot(theta_star) + sd * normal(rng);
  }
  return d;
}

void write_regression_csv(const RegressionData& data, std::ostream& out) {
  for (Eigen::Index i = 0; i < data.dim(); ++i) out << "a_" << (i + 1) << ',';
  out << "y\n";
  out.precision(17);
  for (Eigen::Index j = 0; j < data.count(); ++j) {
    for (Eigen::Index i = 0; i < data.dim(); ++i) out << data.a(j, i) << ',';
    out << data.y[j] << '\n';
  }
}

RegressionData read_regression_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("regression csv: missing header");
  const auto cols = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',')) + 1;
  if (cols < 2) throw InvalidArgument("regression csv: need at least one feature column");
  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Eigen::Index c = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(std::stod(cell));
      ++c;
    }
    if (c != cols) throw InvalidArgument("regression csv: row " + std::to_string(rows + 1) + " has wrong width");
    ++rows;
  }
  RegressionData d;
  d.a.resize(rows, cols - 1);
  d.y.resize(rows);
  for (Eigen::Index j = 0; j < rows; ++j) {
    for (Eigen::Index i = 0; i + 1 < cols; ++i) d.a(j, i) = values[static_cast<std::size_t>(j * cols + i)];
    d.y[j] = values[static_cast<std::size_t>(j * cols + cols - 1)];
  }
  return d;
}

}  // namespace pkld

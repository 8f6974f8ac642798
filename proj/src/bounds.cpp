#include "pkld/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pkld {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// inf/sup of a convex f over a grid of spacing r/100 inside K (p ≤ 3).
Oscillation grid_oscillation(const Potential& f, const ConstraintSet& set) {
  const Eigen::Index p = set.dim();
  if (p > 3) throw InvalidArgument("oscillation: grid estimate limited to p <= 3");
  const double step = set.inner_radius() / 100.0;
  const int n = static_cast<int>(std::ceil(set.outer_radius() / step));
  std::vector<int> idx(static_cast<std::size_t>(p), -n);
  Vector x(p);
  Oscillation o{kInf, -kInf, false};
  while (true) {
    for (Eigen::Index i = 0; i < p; ++i) x[i] = idx[static_cast<std::size_t>(i)] * step;
    if (contains(set, x)) {
      const double v = eval(f, x);
      o.inf = std::min(o.inf, v);
      o.sup = std::max(o.sup, v);
    }
    std::size_t k = 0;
    while (k < idx.size() && ++idx[k] > n) idx[k++] = -n;
    if (k == idx.size()) break;
  }
  return o;
}

}  // namespace

Oscillation oscillation(const Potential& f, const ConstraintSet& set) {
  require_dim(f.dim(), set.dim(), "oscillation");
  if (const auto* q = std::get_if<Quadratic>(&f.form())) {
    // Minimum 0 at the interior origin; a convex maximum sits on the boundary.
    if (const auto* ball = std::get_if<Ball>(&set.shape())) {
      const double lmax = symmetric_eigenvalues(q->precision).maxCoeff();
      return {0.0, 0.5 * lmax * ball->radius * ball->radius, true};
    }
    if (set.is_polyhedral() && std::holds_alternative<Box>(set.shape())) {
      double sup = 0.0;
      for (const auto& v : vertices(set)) sup = std::max(sup, eval(f, v));
      return {0.0, sup, true};
    }
  }
  return grid_oscillation(f, set);
}

ProblemConstants problem_constants(const PenalizedPotential& u, const StochasticGradient* sg) {
  ProblemConstants c;
  const Potential& f = u.base();
  c.m = f.m();
  c.L = f.L();
  c.L1 = f.L1();
  c.p = static_cast<double>(u.dim());
  const PenalizedConstants pc = penalized_constants(u);
  c.M = pc.m_lambda;
  c.M1 = pc.m1_lambda.value_or(0.0);
  if (u.set()) {
    c.c1 = u.params().c1;
    c.r = u.set()->inner_radius();
    c.R = u.set()->outer_radius();
    c.vol = volume(*u.set());
    const Oscillation o = oscillation(f, *u.set());
    c.osc = o.sup - o.inf;
  }
  if (sg) {
    c.sigma1 = sg->sigma1();
    c.sigma2 = sg->sigma2();
  }
  return c;
}

double lambda_admissible(const ProblemConstants& c, double q) {
  const double sc1 = std::sqrt(c.c1);
  const double first = sc1 * c.r / (c.p + q);
  const double second = sc1 * c.r * std::exp(c.osc) / (3.0 * std::sqrt(std::numbers::pi) * c.vol * c.p);
  return std::min(first, second);
}

GapRate surrogate_gap_rate(double p, double q) {
  if (!(p >= 1.0) || !(q >= 1.0)) throw InvalidArgument("surrogate_gap_rate: need p, q >= 1");
  const double s = 1.0 / p + 1.0 / q;
  // Exact rational comparisons for the integer cases that sit on the boundary.
  const double diff = s - 1.0;
  if (std::abs(diff) <= 1e-15) return {GapRegime::logarithmic, "lambda*log^(1/q)(1/lambda)", 1.0};
  if (diff > 0.0) return {GapRegime::linear, "lambda", 1.0};
  return {GapRegime::power, "lambda^(1/p+1/q)", s};
}

double surrogate_gap_constant(const ProblemConstants& c, double q, double c0) {
  const double s = 1.0 / c.p + 1.0 / q;
  const double ratio = std::max(c.R, 1.0) / std::min(c.r, 1.0);
  const double inner = c.p * std::exp(4.0 * c.osc) / std::sqrt(c.c1) * std::pow(ratio, 2.0 * c.p + 1.0);
  return c0 * std::pow(inner, s);
}

double surrogate_gap_bound(const ProblemConstants& c, double q, double lambda, double c0) {
  const GapRate rate = surrogate_gap_rate(c.p, q);
  double shape = lambda;
  if (rate.regime == GapRegime::logarithmic) shape = lambda * std::pow(std::log(1.0 / lambda), 1.0 / q);
  if (rate.regime == GapRegime::power) shape = std::pow(lambda, rate.exponent);
  return surrogate_gap_constant(c, q, c0) * shape;
}

double cubu_contraction(double m, double M, double h) { return 1.0 - m * h / (3.0 * M); }

double cubu_bias(double M, double M1, double kappa, double p, double h, double c1_const) {
  return (1.0 / std::sqrt(M) + c1_const * M1 / (M * M)) * kappa * std::sqrt(p) * h * h;
}

BoundTerms cbaoab_bound_terms(double m, double M, double M1, double p, double gamma, double h, long n, double w0) {
  BoundTerms t;
  t.decay = 21.0 * std::exp(-m * h * static_cast<double>(n - 1) / (4.0 * gamma)) * w0;
  t.bias = 66000.0 * (std::sqrt(M) / m) * (4.0 * std::sqrt(M * p) + 3.0 * M1 * p / M) * gamma * h * h;
  const double window = std::min(-std::expm1(-gamma * h) / (4.0 * std::sqrt(M)), 4.0 * gamma / m);
  if (gamma < 2.0 * std::sqrt(M)) {
    t.admissible = false;
    t.reason = "gamma below 2*sqrt(M)";
  } else if (!(h < window)) {
    t.admissible = false;
    t.reason = "h outside (1-exp(-gamma h))/(4 sqrt(M)) ^ 4 gamma/m";
  }
  return t;
}

BoundTerms sg_cubu_bound_terms(double m, double M, double L, double sigma1, double sigma2, double p, double gamma,
                               double h, long n, double w0) {
  BoundTerms t;
  t.decay = std::pow(1.0 - m * h / (8.0 * gamma), 0.5 * static_cast<double>(n)) * w0;
  t.noise = 2.0 * gamma * std::sqrt(h) / m *
            std::sqrt(sigma1 * sigma1 * L * L / std::sqrt(M) * (h * h * M * M * p / (m * m) + p / m));
  t.bias = std::sqrt(p) * (std::sqrt(M) + gamma) * h * h;
  const double window = std::min(sigma2 > 0.0 ? m * M / (4.0 * gamma * sigma2 * sigma2) : kInf, 1.0 / (2.0 * gamma));
  if (gamma < std::sqrt(8.0 * M)) {
    t.admissible = false;
    t.reason = "gamma below sqrt(8M)";
  } else if (!(h < window)) {
    t.admissible = false;
    t.reason = "h outside mM/(4 gamma sigma2^2) ^ 1/(2 gamma)";
  }
  return t;
}

SgCklmcConstants sg_cklmc_constants(double m, double M, double gamma, double sigma1, double L) {
  SgCklmcConstants k;
  k.tau = 0.5 * std::min(0.25, m / (M + 0.5 * gamma * gamma));
  const double g2 = gamma * gamma;
  const double first = 16.0 * (M * M + 2.0 * gamma * M * M + sigma1 * sigma1 * L * L) / ((1.0 - 2.0 * k.tau) * g2);
  const double second = (4.0 * M + 2.0 * g2 * (1.0 - k.tau) + 8.0 * gamma) / (1.0 - 2.0 * k.tau);
  k.k1 = std::max(first, second);
  k.h_max = std::min({gamma * k.tau / (2.0 * k.k1), 2.0 / (gamma * k.tau), 1.0 / (10.0 * gamma), m / (4.0 * gamma * M)});
  if (gamma < std::sqrt(m + M)) {
    k.admissible = false;
    k.reason = "gamma below sqrt(m + M)";
  }
  return k;
}

double sg_cklmc_cv(double expected_v0, double tau, double p, double m, double f0, double M, double gamma) {
  return expected_v0 + 4.0 / tau * (p + m * f0 / (2.0 * M + gamma * gamma));
}

BoundTerms sg_cklmc_bound_terms(double m, double M, double L, double sigma1, double p, double gamma, double h, long n,
                                double cv, double tau, double w0) {
  BoundTerms t;
  t.decay = std::pow(1.0 - 0.75 * m * h / gamma, static_cast<double>(n)) * w0;
  t.bias = std::sqrt(2.0) * M * h * std::sqrt(p) / m;
  t.noise = 8.0 * std::sqrt(2.0) * sigma1 * L / (m * gamma) * std::sqrt(cv / (1.0 - 2.0 * tau));
  return t;
}

SgCbaoabConstants sg_cbaoab_constants(double m, double M, double M1, double gamma, double h, double sigma1, double p,
                                      double initial_moment) {
  SgCbaoabConstants k;
  const double a = -std::expm1(-gamma * h);
  const double s2 = sigma1 * sigma1;
  k.rho = m * h * h / (4.0 * a);
  k.c_bias = std::sqrt(M) / m * (std::sqrt(M * p) + M1 / M * p);
  k.c_v = 3.0 * (2.0 + 0.25 * M * M * (1.0 + s2));
  k.d_v = a / 16.0;
  k.lambda_fg = std::min(m, gamma) / 16.0;
  k.c_fg = (10.0 + 8.0 * M / m + 4.0 * M1 * M1 / (m * m) + 8.0 / gamma) * p;
  k.noise_small = s2 <= k.lambda_fg * k.lambda_fg / (20.0 * M * M * k.c_v);
  k.lambda_sg = 0.5 * k.lambda_fg;
  k.c_sg = 2.0 * k.c_fg + 5.0 * s2 * M * M * k.d_v * p / (k.lambda_fg * h);
  k.c_mom = initial_moment + k.c_sg / k.lambda_sg;
  k.k_noise = std::sqrt(s2 * M * M * (k.c_v * k.c_mom + k.d_v * p));
  return k;
}

BoundTerms sg_cbaoab_bound_terms(const SgCbaoabConstants& k, double m, double gamma, double h, long n, double w0) {
  BoundTerms t;
  const double a = -std::expm1(-gamma * h);
  t.noise = 4.0 * a / m * k.k_noise;
  t.bias = k.c_bias * h * a;
  t.decay = std::pow(1.0 - k.rho, static_cast<double>(n)) * (w0 + t.bias);
  if (!k.noise_small) {
    t.admissible = false;
    t.reason = "noise smallness condition violated";
  }
  return t;
}

// ---------------------------------------------------------------------------

std::vector<std::string> schedule_ids() {
  return {"3.1a", "3.1b", "3.2a", "3.2b", "3.3a", "3.3b", "3.4a", "3.4b", "3.5a", "3.5b"};
}

Schedule schedule(const std::string& id, double epsilon, double p) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("schedule: epsilon must lie in (0, 1)");
  if (!(p > 2.0)) throw InvalidArgument("schedule: p must exceed 2");
  Schedule s;
  s.id = id;
  s.epsilon = epsilon;
  s.p = p;
  bool stochastic = false;
  // Exponents: h = ε^{he}, λ = h^{lp}, n = ε^{−ne}, b = ε^{−be}.
  double he = 0, lp = 0, ne = 0, be = 0;
  if (id == "3.1a") {
    he = (3 * p + 2) / (2 * p + 4), lp = 4 * p / (3 * p + 2), ne = (11 * p + 2) / (2 * p + 4);
  } else if (id == "3.1b") {
    he = 1, lp = 1, ne = 3;
  } else if (id == "3.2a") {
    he = 2 * p / (p + 2), lp = 1, ne = 4 * p / (p + 2), be = (6 * p + 4) / (p + 2), stochastic = true;
  } else if (id == "3.2b") {
    he = 1, lp = 1, ne = 2, be = 4, stochastic = true;
  } else if (id == "3.3a") {
    he = (7 * p + 2) / (2 * p + 4), lp = 4 * p / (7 * p + 2), ne = (11 * p + 2) / (2 * p + 4);
  } else if (id == "3.3b") {
    he = 2, lp = 0.5, ne = 3;
  } else if (id == "3.4a") {
    he = (7 * p + 2) / (2 * p + 4), lp = 4 * p / (7 * p + 2), ne = (11 * p + 2) / (2 * p + 4),
    be = (7 * p + 2) / (p + 2), stochastic = true;
  } else if (id == "3.4b") {
    he = 2, lp = 0.5, ne = 3, be = 4, stochastic = true;
  } else if (id == "3.5a") {
    he = 8 * p / (p + 2), lp = 0.25, ne = 10 * p / (p + 2), be = 8 * p / (p + 2), stochastic = true;
  } else if (id == "3.5b") {
    he = 4, lp = 0.25, ne = 5, be = 4, stochastic = true;
  } else {
    throw InvalidArgument("schedule: unknown schedule id '" + id + "'");
  }
  s.metric = id.back() == 'a' ? Metric::w2 : Metric::w1;
  s.h_exponent = he;
  s.lambda_power = lp;
  s.n_exponent = ne;
  s.b_exponent = be;
  s.h = std::pow(epsilon, he);
  s.lambda = std::pow(s.h, lp);
  s.n = std::pow(epsilon, -ne);
  s.iterations = static_cast<long>(std::ceil(s.n - 1e-9 * s.n));
  if (stochastic) s.batch = std::pow(epsilon, -be);
  s.annotation = "n carries an unspecified polylogarithmic factor in 1/epsilon; constants set to 1";
  return s;
}

}  // namespace pkld

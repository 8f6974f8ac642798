#include "pkld/metrics.hpp"

#include "doctest.h"

#include <algorithm>
#include <numbers>
#include <numeric>

using namespace pkld;

namespace {

Vector v1(double a) { return (Vector(1) << a).finished(); }
Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

SampleSet random_set(Rng& rng, int n, Eigen::Index p) {
  SampleSet s;
  for (int i = 0; i < n; ++i) s.push_back(standard_normal(rng, p));
  return s;
}

// Minimum over all N! matchings.
double brute_force(const SampleSet& a, const SampleSet& b, int q) {
  std::vector<int> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double c = 0;
    for (std::size_t i = 0; i < a.size(); ++i) c += std::pow((a[i] - b[static_cast<std::size_t>(perm[i])]).norm(), q);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best / static_cast<double>(a.size()), 1.0 / q);
}

// Exact solution of the linear SDE for f = ½θ² over h: x' = E x + C ξ with
// E = exp(hA) and CCᵀ = I − EEᵀ.
LinearStep exact_ou_step(double gamma) {
  return [gamma](const KineticState& x, double h, const Vector& normals) {
    Matrix a(2, 2);
    a << 0, 1, -1, -gamma;
    Matrix e = Matrix::Identity(2, 2), term = Matrix::Identity(2, 2);
    for (int k = 1; k < 40; ++k) {
      term = term * (h * a) / k;
      e += term;
    }
    const Matrix cov = Matrix::Identity(2, 2) - e * e.transpose();
    const Matrix c = cov.llt().matrixL();
    const Vector z = e * v2(x.theta[0], x.v[0]) + c * normals;
    return KineticState{v1(z[0]), v1(z[1])};
  };
}

}  // namespace

TEST_CASE("Wasserstein examples") {
  Rng rng = make_stream(1, 0);
  const SampleSet a = random_set(rng, 50, 2);
  CHECK(wasserstein(a, a, 2) == doctest::Approx(0.0));
  CHECK(wasserstein({v1(0)}, {v1(3)}, 2) == doctest::Approx(3.0));
  CHECK(wasserstein({v2(0, 0), v2(1, 0)}, {v2(0, 1), v2(1, 1)}, 2) == doctest::Approx(1.0));
  CHECK_THROWS_AS(wasserstein(a, random_set(rng, 49, 2), 2), InvalidArgument);
  CHECK_THROWS_AS(wasserstein(a, a, 3), InvalidArgument);
}

TEST_CASE("assignment matches brute force") {
  Rng rng = make_stream(2, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 8;
    const Eigen::Index p = 1 + trial % 3;
    const SampleSet a = random_set(rng, n, p), b = random_set(rng, n, p);
    for (int q : {1, 2}) CHECK(wasserstein(a, b, q) == doctest::Approx(brute_force(a, b, q)).epsilon(1e-10));
  }
}

TEST_CASE("Wasserstein metric axioms") {
  Rng rng = make_stream(3, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const SampleSet a = random_set(rng, 12, 2), b = random_set(rng, 12, 2), c = random_set(rng, 12, 2);
    for (int q : {1, 2}) {
      const double ab = wasserstein(a, b, q), ba = wasserstein(b, a, q);
      CHECK(ab >= 0.0);
      CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
      CHECK(ab <= wasserstein(a, c, q) + wasserstein(c, b, q) + 1e-12);
      SampleSet shuffled = a;
      std::reverse(shuffled.begin(), shuffled.end());
      CHECK(wasserstein(a, shuffled, q) == doctest::Approx(0.0).epsilon(1e-12));
    }
    // W1 ≤ W2 for uniform empirical measures.
    CHECK(wasserstein(a, b, 1) <= wasserstein(a, b, 2) + 1e-12);
  }
}

TEST_CASE("cost matrices agree and cap is enforced") {
  Rng rng = make_stream(4, 0);
  const SampleSet a = random_set(rng, 300, 3), b = random_set(rng, 300, 3);
  CHECK(cost_matrix(a, b, 2) == cost_matrix_serial(a, b, 2));
  CHECK(cost_matrix(a, b, 1) == cost_matrix_serial(a, b, 1));
  const SampleSet big(kAssignmentCap + 1, v2(0, 0));
  CHECK_THROWS_WITH_AS(wasserstein(big, big, 2), doctest::Contains("subsampl"), InvalidArgument);
}

TEST_CASE("inside fraction") {
  const auto ball = ConstraintSet::ball(2, 0.5);
  CHECK(inside_fraction(SampleSet(10, v2(0, 0)), ball) == 1.0);
  CHECK(inside_fraction(SampleSet(10, v2(10, 10)), ball) == 0.0);
  Rng rng = make_stream(5, 0);
  std::uniform_real_distribution<double> u(-1, 1);
  SampleSet s;
  for (int i = 0; i < 1000000; ++i) s.push_back(v2(u(rng), u(rng)));
  CHECK(std::abs(inside_fraction(s, ConstraintSet::ball(2, 1)) - std::numbers::pi / 4) <= 0.002);
}

TEST_CASE("rejection sampler") {
  const Potential f = Potential::isotropic(2);
  Rng rng = make_stream(6, 0);
  const auto r = rejection_sample_target(f, ConstraintSet::ball(2, 0.5), 11750, rng);
  for (const auto& x : r.samples) CHECK(x.norm() <= 0.5);
  CHECK(r.proposals > 90000);
  CHECK(std::abs(r.acceptance - (1 - std::exp(-0.125))) <= 0.003);

  // Radial law inside the ball: P(‖θ‖² ≤ s | ‖θ‖² ≤ 0.25) = (1 − e^{−s/2})/(1 − e^{−1/8}). KS test.
  std::vector<double> rad;
  for (const auto& x : r.samples) rad.push_back(x.squaredNorm());
  std::sort(rad.begin(), rad.end());
  double ks = 0;
  const double n = static_cast<double>(rad.size());
  for (std::size_t i = 0; i < rad.size(); ++i) {
    const double cdf = -std::expm1(-rad[i] / 2) / -std::expm1(-0.125);
    ks = std::max({ks, std::abs(cdf - i / n), std::abs(cdf - (i + 1) / n)});
  }
  CHECK(ks < 1.63 / std::sqrt(n));  // 1% level

  // Large set: covariance recovers Σ.
  const Potential g = Potential::quadratic((Matrix(2, 2) << 2, 0.5, 0.5, 1).finished());
  Rng r2 = make_stream(7, 0);
  const auto wide = rejection_sample_target(g, ConstraintSet::ball(2, 1e6), 100000, r2);
  Matrix cov = Matrix::Zero(2, 2);
  for (const auto& x : wide.samples) cov += x * x.transpose();
  cov /= 100000.0;
  const Matrix sigma = (Matrix(2, 2) << 2, 0.5, 0.5, 1).finished().inverse();
  CHECK((cov - sigma).cwiseAbs().maxCoeff() <= 0.02 * sigma.cwiseAbs().maxCoeff());

  Rng r3 = make_stream(8, 0);
  CHECK_THROWS_AS(rejection_sample_target(Potential::isotropic(2), ConstraintSet::ball(2, 1e-3), 10, r3), Error);
}

TEST_CASE("stationary covariance solve") {
  // Scalar AR(1): x' = a x + b ξ has variance b²/(1 − a²).
  const Matrix m = (Matrix(1, 1) << 0.6).finished(), b = (Matrix(1, 1) << 2.0).finished();
  CHECK(stationary_covariance(m, b)(0, 0) == doctest::Approx(4.0 / 0.64));
  CHECK_THROWS_AS(stationary_covariance((Matrix(1, 1) << 1.0).finished(), b), InvalidArgument);
}

TEST_CASE("weak bias ladders") {
  const std::vector<double> hs{0.4, 0.2, 0.1};
  const OrderFit b = weak_bias_ladder(Scheme::cbaoab, 1.0, 2.0, hs);
  CHECK(b.slope >= 1.7);
  CHECK(b.slope <= 2.3);
  const OrderFit e = weak_bias_ladder(Scheme::cklmc, 1.0, 2.0, hs);
  CHECK(e.slope >= 0.7);
  CHECK(e.slope <= 1.3);
  const OrderFit u = weak_bias_ladder(Scheme::cubu, 1.0, 2.0, {0.4, 0.2, 0.1, 0.05});
  CHECK(u.slope >= 1.7);
  CHECK(u.slope <= 2.3);
  // Position variance of BAOAB is exact on Gaussians.
  const OrderFit pos = weak_bias_ladder(Scheme::cbaoab, 1.0, 2.0, hs, BiasObservable::position);
  for (double err : pos.errors) CHECK(err < 1e-12);
  // An exact integrator has no bias at any step.
  const OrderFit ex = weak_bias_ladder(exact_ou_step(2.0), 2, hs);
  REQUIRE(ex.errors.size() == 3);
  for (double err : ex.errors) CHECK(err < 1e-12);
  // Unstable rungs are excluded, not fitted.
  const OrderFit big = weak_bias_ladder(Scheme::cklmc, 1.0, 2.0, {3.0, 0.4, 0.2, 0.1});
  CHECK(big.unstable_steps == std::vector<double>{3.0});
  CHECK(big.errors.size() == 3);
}

TEST_CASE("discrete stationary covariance of CUBU is close to the identity") {
  const Matrix s = scheme_stationary_covariance(linear_step(Scheme::cubu, 1.0, 2.0), 4, 0.1);
  CHECK(std::abs(s(0, 0) - 1.0) < 0.01);
  CHECK(std::abs(s(1, 1) - 1.0) < 0.01);
}

TEST_CASE("strong error ladders") {
  const PenalizedPotential u(Potential::isotropic(1));
  StrongOptions opt;
  opt.paths = 200;
  const OrderFit a = strong_error_ladder(Scheme::cubu, u, 2.0, {0.2, 0.1, 0.05}, opt);
  const OrderFit b = strong_error_ladder_serial(Scheme::cubu, u, 2.0, {0.2, 0.1, 0.05}, opt);
  CHECK(a.errors == b.errors);
  CHECK(a.slope > 1.6);
  CHECK(a.slope < 2.4);
  opt.refinement = 1;
  const OrderFit zero = strong_error_ladder(Scheme::cklmc, u, 2.0, {0.2, 0.1, 0.05}, opt);
  for (double e : zero.errors) CHECK(e == 0.0);
  CHECK_THROWS_AS(strong_error_ladder(Scheme::cubu, u, 2.0, {0.3, 0.7}, opt), InvalidArgument);
}

TEST_CASE("order and contraction fits") {
  const OrderFit f = fit_order({0.1, 0.2, 0.4}, {0.03, 0.12, 0.48});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(std::log(3.0)));
  CHECK_THROWS_AS(fit_order({0.1, 0.2}, {1, 2}), InvalidArgument);
  std::vector<double> geo, flat(20, 2.5);
  for (int k = 0; k < 20; ++k) geo.push_back(std::pow(0.9, k));
  CHECK(contraction_fit(geo) == doctest::Approx(-std::log(0.9)));
  CHECK(contraction_fit(flat) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(contraction_fit({1, 0.5}), InvalidArgument);
}

TEST_CASE("coupled CUBU chains contract at least at half the theoretical rate") {
  const PenalizedPotential u(Potential::isotropic(1));
  IntegratorConfig ic;
  const CoupledTrace ct = run_coupled({v1(0), v1(0)}, {v1(1), v1(1)}, 100, ic, u, nullptr, 2);
  CHECK(contraction_fit(ct.distances) >= 0.5 * (0.1 / 3));
}

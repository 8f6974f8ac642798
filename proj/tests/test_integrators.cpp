#include "pkld/integrators.hpp"

#include "doctest.h"

#include <sstream>

using namespace pkld;

namespace {

Vector v1(double a) { return (Vector(1) << a).finished(); }
Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

// Covariance of the (Z1, Z2) pair read off the linear map from the normals.
struct PairCov {
  double var1, var2, cov;
};
PairCov probe_pair(double t, double gamma) {
  const OuIncrement e1 = ou_increment(t, gamma, v1(1), v1(0));
  const OuIncrement e2 = ou_increment(t, gamma, v1(0), v1(1));
  return {e1.z1[0] * e1.z1[0] + e2.z1[0] * e2.z1[0], e1.z2[0] * e1.z2[0] + e2.z2[0] * e2.z2[0],
          e1.z1[0] * e1.z2[0] + e2.z1[0] * e2.z2[0]};
}

PenalizedPotential gaussian(Eigen::Index p) { return PenalizedPotential(Potential::isotropic(p)); }

}  // namespace

TEST_CASE("OU pair covariance identities") {
  for (double gamma : {0.5, 2.0, 8.0, 1e-3, 50.0}) {
    for (double t : {1e-6, 0.01, 0.1, 0.5, 3.0}) {
      const PairCov c = probe_pair(t, gamma);
      const double var2 = (1 - std::exp(-2 * gamma * t)) / (2 * gamma);
      const double cov = (1 - std::exp(-gamma * t)) / gamma;
      CHECK(c.var1 == doctest::Approx(t).epsilon(1e-12));
      CHECK(c.var2 == doctest::Approx(var2).epsilon(1e-9));
      CHECK(c.cov == doctest::Approx(cov).epsilon(1e-9));
    }
  }
}

TEST_CASE("OU concatenation preserves the law") {
  const double gamma = 2.0, a = 0.03, b = 0.05;
  // Concatenated pair is a linear map of four normals; its covariance must
  // equal the direct pair over a + b.
  double var1 = 0, var2 = 0, cov = 0;
  for (int k = 0; k < 4; ++k) {
    Vector n = Vector::Zero(4);
    n[k] = 1;
    const OuIncrement z = ou_concat(ou_increment(a, gamma, v1(n[0]), v1(n[1])), ou_increment(b, gamma, v1(n[2]), v1(n[3])), b, gamma);
    var1 += z.z1[0] * z.z1[0];
    var2 += z.z2[0] * z.z2[0];
    cov += z.z1[0] * z.z2[0];
  }
  const OuMoments m = ou_moments(a + b, gamma);
  CHECK(var1 == doctest::Approx(m.var_z1).epsilon(1e-12));
  CHECK(var2 == doctest::Approx(m.var_z2).epsilon(1e-12));
  CHECK(cov == doctest::Approx(m.cov).epsilon(1e-12));
}

TEST_CASE("U mean map with zero noise") {
  const KineticState x{v2(1, -1), v2(0.5, 2)};
  const double gamma = 2.0, t = 0.3;
  const KineticState y = op_U(x, t, v2(0, 0), v2(0, 0), gamma);
  const double eta = std::exp(-gamma * t);
  CHECK((y.theta - (x.theta + (1 - eta) / gamma * x.v)).norm() < 1e-15);
  CHECK((y.v - eta * x.v).norm() < 1e-15);
  const KineticState z = op_U(x, 0.1, v2(0, 0), v2(0, 0), 1e6);
  CHECK(z.v.norm() < 1e-12);
  CHECK((z.theta - x.theta - x.v / 1e6).norm() < 1e-12);
}

TEST_CASE("B, A and O operators") {
  const PenalizedPotential f = gaussian(2);
  const GradientFn g = [&](const Vector& t) { return grad_penalized(f, t); };
  const KineticState at_min{v2(0, 0), v2(0.3, 0.1)};
  CHECK((op_B(at_min, 0.1, g).v - at_min.v).norm() == 0.0);
  CHECK((op_B(KineticState{v2(1, 0), v2(0, 0)}, 0.1, g).v - v2(-0.1, 0)).norm() < 1e-15);
  const PenalizedPotential pen(Potential::isotropic(2), ConstraintSet::ball(2, 1), Euclidean{}, 1.0);
  const GradientFn gp = [&](const Vector& t) { return grad_penalized(pen, t); };
  CHECK((op_B(KineticState{v2(2, 0), v2(0, 0)}, 0.1, gp).v - v2(-0.3, 0)).norm() < 1e-14);
  const KineticState still{v2(1, 2), v2(0, 0)};
  CHECK((op_A(still, 0.7).theta - still.theta).norm() == 0.0);
  CHECK(op_O(KineticState{v2(0, 0), v2(5, 5)}, 100.0, v2(0, 0), 2.0).v.norm() < 1e-80);
}

TEST_CASE("one step equals hand-composed linear maps") {
  // 1-D f = ½kθ², zero noise: every scheme is an explicit 2×2 map.
  const double k = 1.5, gamma = 2.0, h = 0.2;
  const PenalizedPotential u(Potential::isotropic(1, k));
  const GradientFn g = [&](const Vector& t) { return grad_penalized(u, t); };
  const KineticState x{v1(0.7), v1(-0.4)};
  const double th = 0.7, v = -0.4;

  NoiseBlock zero;
  zero.first = {v1(0), v1(0)};
  zero.second = {v1(0), v1(0)};
  zero.xi = v1(0);

  // CKLMC
  const KineticState e = step_cklmc(x, h, gamma, g, zero);
  CHECK(e.theta[0] == doctest::Approx(th + h * v));
  CHECK(e.v[0] == doctest::Approx(v - h * k * th - h * gamma * v));

  // CUBU: half U, kick, half U.
  const double eh = std::exp(-gamma * h / 2), ah = (1 - eh) / gamma;
  double t1 = th + ah * v, w1 = eh * v;
  w1 -= h * k * t1;
  const double t2 = t1 + ah * w1, w2 = eh * w1;
  const KineticState c = step_cubu(x, h, gamma, g, zero);
  CHECK(c.theta[0] == doctest::Approx(t2).epsilon(1e-14));
  CHECK(c.v[0] == doctest::Approx(w2).epsilon(1e-14));

  // CBAOAB
  Vector cache = g(x.theta);
  double vb = v - 0.5 * h * k * th;
  double tb = th + 0.5 * h * vb;
  vb *= std::exp(-gamma * h);
  tb += 0.5 * h * vb;
  vb -= 0.5 * h * k * tb;
  const KineticState b = step_cbaoab(x, h, gamma, g, zero, cache);
  CHECK(b.theta[0] == doctest::Approx(tb).epsilon(1e-14));
  CHECK(b.v[0] == doctest::Approx(vb).epsilon(1e-14));
  CHECK(cache[0] == doctest::Approx(k * tb).epsilon(1e-14));
}

TEST_CASE("limits of single steps") {
  const PenalizedPotential u = gaussian(2);
  const KineticState x{v2(0.4, -0.2), v2(1, 2)};
  IntegratorConfig ic;
  for (Scheme s : {Scheme::cubu, Scheme::cbaoab, Scheme::cklmc}) {
    ic.scheme = s;
    ic.h = 1e-10;
    const Trace t = run_chain(x, 1, ic, u, nullptr, 3);
    CHECK((t.states[1].theta - x.theta).norm() < 1e-8);
  }
  // Free flight of Euler-Maruyama as γ → 0 with no force.
  const PenalizedPotential flat(Potential::isotropic(2, 1e-300));
  const GradientFn g = [&](const Vector& t) { return grad_penalized(flat, t); };
  NoiseBlock zero;
  zero.xi = v2(0, 0);
  const KineticState y = step_cklmc(x, 0.1, 1e-300, g, zero);
  CHECK((y.theta - (x.theta + 0.1 * x.v)).norm() < 1e-15);
  CHECK((y.v - x.v).norm() < 1e-15);
}

TEST_CASE("run_chain: determinism, gradient calls and n = 0") {
  const PenalizedPotential u(Potential::isotropic(2), ConstraintSet::ball(2, 0.5), Gauge{}, 0.3);
  IntegratorConfig ic;
  const KineticState x0 = default_initial(2, 5);
  CHECK(x0.theta.norm() == 0.0);
  for (Scheme s : {Scheme::cubu, Scheme::cbaoab, Scheme::cklmc}) {
    ic.scheme = s;
    const Trace a = run_chain(x0, 50, ic, u, nullptr, 5);
    const Trace b = run_chain(x0, 50, ic, u, nullptr, 5);
    REQUIRE(a.states.size() == 51);
    for (std::size_t i = 0; i < a.states.size(); ++i) {
      CHECK(a.states[i].theta == b.states[i].theta);
      CHECK(a.states[i].v == b.states[i].v);
    }
    CHECK(a.gradient_calls == (s == Scheme::cbaoab ? 51 : 50));
    const Trace z = run_chain(x0, 0, ic, u, nullptr, 5);
    REQUIRE(z.states.size() == 1);
    CHECK(z.states[0].theta == x0.theta);
    const Trace last = run_chain(x0, 50, ic, u, nullptr, 5, false);
    REQUIRE(last.states.size() == 1);
    CHECK(last.states[0].theta == a.states.back().theta);
  }
}

TEST_CASE("stochastic mode needs an estimator and uses its own stream") {
  const PenalizedPotential u(Potential::isotropic(2), ConstraintSet::ball(2, 0.5), Gauge{}, 0.3);
  IntegratorConfig ic;
  ic.mode = GradientMode::stochastic;
  CHECK_THROWS_AS(run_chain(default_initial(2, 1), 5, ic, u, nullptr, 1), InvalidArgument);
  const auto sg = StochasticGradient::additive_noise(Potential::isotropic(2), 0.125);
  const Trace a = run_chain(default_initial(2, 1), 20, ic, u, &sg, 1);
  const Trace b = run_chain(default_initial(2, 1), 20, ic, u, &sg, 1);
  CHECK(a.states.back().theta == b.states.back().theta);
  ic.mode = GradientMode::full;
  const Trace c = run_chain(default_initial(2, 1), 20, ic, u, &sg, 1);
  CHECK(a.states.back().theta != c.states.back().theta);
}

TEST_CASE("divergence is reported") {
  const PenalizedPotential u(Potential::isotropic(1, 1e4));
  IntegratorConfig ic;
  ic.scheme = Scheme::cklmc;
  ic.h = 0.5;
  CHECK_THROWS_AS(run_chain(default_initial(1, 0), 1000, ic, u, nullptr, 0), DivergenceError);
  ic.h = -1;
  CHECK_THROWS_AS(run_chain(default_initial(1, 0), 10, ic, u, nullptr, 0), InvalidArgument);
}

TEST_CASE("step schedule") {
  IntegratorConfig ic;
  ic.h = 1.0;
  ic.schedule = StepSchedule{0.5, 10};
  CHECK(ic.step_at(0) == 1.0);
  CHECK(ic.step_at(9) == 1.0);
  CHECK(ic.step_at(10) == 0.5);
  CHECK(ic.step_at(25) == 0.25);
}

TEST_CASE("O step keeps N(0, 1) velocities stationary") {
  Rng rng = make_stream(21, 0);
  const int n = 200000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const KineticState x{v1(0), standard_normal(rng, 1)};
    const double v = op_O(x, 0.3, standard_normal(rng, 1), 2.0).v[0];
    s1 += v;
    s2 += v * v;
  }
  CHECK(std::abs(s1 / n) < 4 / std::sqrt(double(n)));
  CHECK(std::abs(s2 / n - 1) < 4 * std::sqrt(2.0 / n));
}

TEST_CASE("coupled chains") {
  const PenalizedPotential u = gaussian(2);
  IntegratorConfig ic;
  const KineticState a = default_initial(2, 3);
  const CoupledTrace same = run_coupled(a, a, 30, ic, u, nullptr, 3);
  for (double d : same.distances) CHECK(d == 0.0);
  const KineticState b{v2(1, 1), v2(-1, 0)};
  const CoupledTrace ct = run_coupled(a, b, 100, ic, u, nullptr, 3);
  REQUIRE(ct.distances.size() == 101);
  CHECK(ct.distances.back() < 0.5 * ct.distances.front());
}

TEST_CASE("parallel ensemble equals the serial reference") {
  const PenalizedPotential u(Potential::isotropic(2), ConstraintSet::box(v2(-0.3, -0.3), v2(0.6, 0.6)), Euclidean{}, 0.3);
  for (Scheme s : {Scheme::cubu, Scheme::cbaoab, Scheme::cklmc}) {
    IntegratorConfig ic;
    ic.scheme = s;
    const auto a = run_ensemble(40, ic, u, nullptr, 9, 17);
    const auto b = run_ensemble_serial(40, ic, u, nullptr, 9, 17);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].theta == b[i].theta);
      CHECK(a[i].v == b[i].v);
    }
    CHECK(b[0].theta == run_chain(default_initial(2, chain_seed(9, 0)), 40, ic, u, nullptr, chain_seed(9, 0)).states.back().theta);
  }
}

TEST_CASE("Brownian path aggregation is consistent across step sizes") {
  Rng rng = make_stream(4, 0);
  const BrownianPath path(1, 0.01, 40, 2.0, rng);
  const OuIncrement whole = path.aggregate(0, 40);
  const OuIncrement left = path.aggregate(0, 20), right = path.aggregate(20, 20);
  const OuIncrement joined = ou_concat(left, right, 0.2, 2.0);
  CHECK(std::abs(whole.z1[0] - joined.z1[0]) < 1e-14);
  CHECK(std::abs(whole.z2[0] - joined.z2[0]) < 1e-14);
  CHECK_THROWS(path.block(Scheme::cubu, 0, 0.015));
}

TEST_CASE("trace CSV is byte-identical across runs") {
  const PenalizedPotential u = gaussian(2);
  IntegratorConfig ic;
  std::ostringstream a, b;
  write_trace_csv(run_chain(default_initial(2, 8), 10, ic, u, nullptr, 8), a);
  write_trace_csv(run_chain(default_initial(2, 8), 10, ic, u, nullptr, 8), b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("step,theta_1,theta_2,v_1,v_2\n", 0) == 0);
}

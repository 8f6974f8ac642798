#include "pkld/bounds.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <numbers>

using namespace pkld;

namespace {

bool close(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("admissible penalty scale") {
  ProblemConstants c;
  c.c1 = 1, c.r = 1, c.p = 2, c.osc = 0, c.vol = std::numbers::pi;
  const double expect = std::min(0.25, 1.0 / (6.0 * std::pow(std::numbers::pi, 1.5)));
  CHECK(close(lambda_admissible(c, 2), expect));
  CHECK(close(lambda_admissible(c, 2), oracle::lambda_admissible(1, 1, 2, 2, 0, std::numbers::pi)));
  ProblemConstants d = c;
  d.r = 2;
  CHECK(close(lambda_admissible(d, 2), 2 * lambda_admissible(c, 2)));
  double last = 1e300;
  for (double p : {2.0, 4.0, 8.0, 1e3, 1e9}) {
    d = c;
    d.p = p;
    const double v = lambda_admissible(d, 2);
    CHECK(v <= last);
    last = v;
  }
  CHECK(last < 1e-9);
}

TEST_CASE("surrogate gap regimes") {
  CHECK(surrogate_gap_rate(2, 1).regime == GapRegime::linear);
  CHECK(surrogate_gap_rate(2, 1).tag == "lambda");
  CHECK(surrogate_gap_rate(2, 2).regime == GapRegime::logarithmic);
  const GapRate r = surrogate_gap_rate(4, 2);
  CHECK(r.regime == GapRegime::power);
  CHECK(r.exponent == doctest::Approx(0.75));
  ProblemConstants c;
  c.p = 4;
  CHECK(close(surrogate_gap_bound(c, 2, 0.01) / surrogate_gap_bound(c, 2, 0.04), std::pow(0.25, 0.75)));
}

TEST_CASE("CUBU contraction and bias") {
  CHECK(close(cubu_contraction(1, 1, 0.1), 1 - 0.1 / 3));
  const double M = 1 + 1 / (0.1 * 0.1);
  CHECK(close(M, 101));
  CHECK(close(cubu_contraction(1, M, 0.01), 1 - 0.01 / 303));
  CHECK(close(cubu_bias(101, 400, 101, 2, 0.05) / cubu_bias(101, 400, 101, 2, 0.1), 0.25));
  CHECK(close(cubu_bias(101, 400, 101, 2, 0.1), oracle::cubu_bias(101, 400, 101, 2, 0.1)));
  CHECK(cubu_contraction(1, 50, 0.1) <= cubu_contraction(1, 100, 0.1));
}

TEST_CASE("CBAOAB terms") {
  const double M = 101, M1 = 400, g = 2 * std::sqrt(M), h = 1e-3;
  const BoundTerms t = cbaoab_bound_terms(1, M, M1, 2, g, h, 1, 0.7);
  CHECK(close(t.decay, 21 * 0.7));
  CHECK(close(t.bias, oracle::cbaoab_bias(1, M, M1, 2, g, h)));
  CHECK(close(cbaoab_bound_terms(1, M, M1, 2, g, h / 2, 1).bias, t.bias / 4));
  CHECK_FALSE(t.admissible);  // window empty at γ = 2√M for small h
  CHECK_FALSE(t.reason.empty());
  const BoundTerms ok = cbaoab_bound_terms(1, M, M1, 2, 10 * std::sqrt(M), 1e-3, 50, 1.0);
  CHECK(ok.admissible);
  CHECK(close(ok.decay, oracle::cbaoab_decay(1, 1e-3, 10 * std::sqrt(M), 50, 1.0)));
}

TEST_CASE("SG-CUBU terms") {
  const double M = 101, g = std::sqrt(8 * M);
  const BoundTerms t = sg_cubu_bound_terms(1, M, 1, 0.1, 0.2, 3, g, 1e-3, 200, 1.5);
  CHECK(close(t.decay, oracle::sg_cubu_decay(1, 1e-3, g, 200, 1.5)));
  CHECK(close(t.noise, oracle::sg_cubu_noise(1, M, 1, 0.1, 3, g, 1e-3)));
  CHECK(close(t.bias, oracle::sg_cubu_bias(M, 3, g, 1e-3)));
  CHECK(t.admissible);
  CHECK_FALSE(sg_cubu_bound_terms(1, M, 1, 0.1, 0.2, 3, 1.0, 1e-3, 200).admissible);
}

TEST_CASE("SG-CKLMC constants") {
  const SgCklmcConstants k = sg_cklmc_constants(1, 1, std::sqrt(2.0), 0.0, 1);
  CHECK(close(k.tau, 0.125));
  CHECK(k.admissible);
  for (double s1 : {0.0, 0.3}) {
    const SgCklmcConstants a = sg_cklmc_constants(1, 101, 25, s1, 1);
    const oracle::Cklmc o = oracle::sg_cklmc(1, 101, 25, s1, 1);
    CHECK(close(a.tau, o.tau));
    CHECK(close(a.k1, o.k1));
    CHECK(close(a.h_max, o.h_max));
    CHECK(a.tau < 0.125);
  }
  CHECK_FALSE(sg_cklmc_constants(1, 101, 2, 0, 1).admissible);
}

TEST_CASE("SG-CBAOAB constants") {
  const SgCbaoabConstants z = sg_cbaoab_constants(1, 101, 400, std::sqrt(808.0), 1e-3, 0.0, 2, 2);
  CHECK(z.k_noise == 0.0);
  CHECK(close(sg_cbaoab_constants(1, 2, 0, 4, 0.1, 0, 3, 1).lambda_fg, 1.0 / 16));
  const SgCbaoabConstants k = sg_cbaoab_constants(1, 101, 400, std::sqrt(808.0), 1e-3, 1e-3, 2, 2);
  const oracle::Cbaoab o = oracle::sg_cbaoab(1, 101, 400, std::sqrt(808.0L), 1e-3, 1e-3, 2, 2);
  CHECK(close(k.rho, o.rho));
  CHECK(close(k.c_bias, o.c_bias));
  CHECK(close(k.c_v, o.c_v));
  CHECK(close(k.d_v, o.d_v));
  CHECK(close(k.lambda_fg, o.lambda_fg));
  CHECK(close(k.c_fg, o.c_fg));
  CHECK(close(k.lambda_sg, o.lambda_sg));
  CHECK(close(k.c_sg, o.c_sg));
  CHECK(close(k.c_mom, o.c_mom));
  CHECK(close(k.k_noise, o.k_noise));
}

TEST_CASE("schedules") {
  const Schedule a = schedule("3.1b", 0.1, 3);
  CHECK(close(a.h, 0.1));
  CHECK(close(a.lambda, 0.1));
  CHECK(close(a.n, 1000));
  CHECK(a.iterations == 1000);
  CHECK(a.metric == Metric::w1);
  const Schedule b = schedule("3.4b", 0.1, 3);
  CHECK(close(b.h, 0.01));
  CHECK(close(b.lambda, 0.1));
  CHECK(close(*b.batch, 1e4));
  CHECK(close(b.n, 1e3));
  CHECK(close(schedule("3.1b", 0.05, 3).n / a.n, 8));
  CHECK_THROWS_AS(schedule("9.9", 0.1, 3), InvalidArgument);
  CHECK_THROWS_AS(schedule("3.1b", 1.5, 3), InvalidArgument);
  CHECK_THROWS_AS(schedule("3.1b", 0.1, 2), InvalidArgument);
}

TEST_CASE("problem constants for the circle preset geometry") {
  const PenalizedPotential u(Potential::isotropic(2), ConstraintSet::ball(2, 0.5), Gauge{}, 0.3);
  const ProblemConstants c = problem_constants(u);
  CHECK(close(c.osc, 0.125));
  CHECK(close(c.vol, std::numbers::pi / 4));
  CHECK(close(c.M, 1 + 1 / 0.09));
  CHECK(close(c.r, 0.5));
  const auto box = ConstraintSet::box((Vector(2) << -0.3, -0.3).finished(), (Vector(2) << 0.6, 0.6).finished());
  const Oscillation o = oscillation(Potential::isotropic(2), box);
  CHECK(o.exact);
  CHECK(close(o.sup, 0.36));
  Matrix a(3, 2);
  a << -1, 0, 0, -1, 1, 1;
  const Oscillation t = oscillation(Potential::isotropic(2), ConstraintSet::polytope(a, (Vector(3) << 0.3, 0.3, 0.6).finished()));
  CHECK_FALSE(t.exact);
  CHECK(std::abs(t.sup - 0.5 * (0.9 * 0.9 + 0.3 * 0.3)) < 0.01);
}

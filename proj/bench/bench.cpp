// Wall-clock comparison of the OpenMP kernels against their serial
// references: chain ensembles, strong-order path replicas and the
// Wasserstein cost matrix. Also checks that both paths agree.

#include "pkld/metrics.hpp"

#include <chrono>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace pkld;

namespace {

double seconds(const std::function<void()>& fn, int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel, bool same) {
  std::printf("%-22s serial %8.4fs  parallel %8.4fs  speedup %5.2fx  %s\n", name, serial, parallel, serial / parallel,
              same ? "identical" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif
  const PenalizedPotential u(Potential::isotropic(2), ConstraintSet::ball(2, 0.5), Gauge{}, 0.1);
  IntegratorConfig ic;
  ic.h = 0.025;

  std::vector<KineticState> a, b;
  const double te_s = seconds([&] { a = run_ensemble_serial(500, ic, u, nullptr, 7, 256); }, 3);
  const double te_p = seconds([&] { b = run_ensemble(500, ic, u, nullptr, 7, 256); }, 3);
  bool same = a.size() == b.size();
  for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].theta == b[i].theta && a[i].v == b[i].v;
  row("ensemble (256x500)", te_s, te_p, same);

  const PenalizedPotential q1(Potential::isotropic(1));
  StrongOptions opt;
  opt.paths = 200;
  OrderFit fs, fp;
  const double ts_s = seconds([&] { fs = strong_error_ladder_serial(Scheme::cubu, q1, 2.0, {0.2, 0.1, 0.05}, opt); }, 3);
  const double ts_p = seconds([&] { fp = strong_error_ladder(Scheme::cubu, q1, 2.0, {0.2, 0.1, 0.05}, opt); }, 3);
  const bool same_ladder = fs.errors == fp.errors;
  row("strong ladder (200)", ts_s, ts_p, same_ladder);

  Rng rng = make_stream(3, 0);
  SampleSet x, y;
  for (int i = 0; i < 2000; ++i) {
    x.push_back(standard_normal(rng, 2));
    y.push_back(standard_normal(rng, 2));
  }
  Matrix cs, cp;
  const double tc_s = seconds([&] { cs = cost_matrix_serial(x, y, 2); }, 5);
  const double tc_p = seconds([&] { cp = cost_matrix(x, y, 2); }, 5);
  const bool same_cost = cs == cp;
  row("cost matrix (2000^2)", tc_s, tc_p, same_cost);

  double w = 0.0;
  const double tw = seconds([&] { w = wasserstein(x, y, 2); }, 1);
  std::printf("%-22s %8.4fs  (W2 = %.6f)\n", "assignment (2000)", tw, w);
  return same && same_ladder && same_cost ? 0 : 1;
}

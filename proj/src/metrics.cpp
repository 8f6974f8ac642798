#include "pkld/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace pkld {

std::vector<int> solve_assignment(const Matrix& cost) {
  // Shortest augmenting path with row/column potentials, O(n³).
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw InvalidArgument("assignment: cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) row_to_col[static_cast<std::size_t>(match[j] - 1)] = j - 1;
  return row_to_col;
}

namespace {

double pair_cost(const Vector& x, const Vector& y, int q) {
  const double d2 = (x - y).squaredNorm();
  return q == 2 ? d2 : std::pow(std::sqrt(d2), q);
}

void check_samples(const SampleSet& a, const SampleSet& b, int q) {
  if (q != 1 && q != 2) throw InvalidArgument("wasserstein: q must be 1 or 2");
  if (a.empty() || b.empty()) throw InvalidArgument("wasserstein: empty sample set");
  if (a.size() != b.size()) throw InvalidArgument("wasserstein: sample sets must have equal size");
  const Eigen::Index p = a.front().size();
  for (const auto* s : {&a, &b}) {
    for (const auto& x : *s) require_dim(p, x.size(), "wasserstein");
  }
}

}  // namespace

Matrix cost_matrix_serial(const SampleSet& a, const SampleSet& b, int q) {
  const auto n = static_cast<Eigen::Index>(a.size());
  const auto m = static_cast<Eigen::Index>(b.size());
  Matrix c(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) c(i, j) = pair_cost(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)], q);
  }
  return c;
}

Matrix cost_matrix(const SampleSet& a, const SampleSet& b, int q) {
  const auto n = static_cast<Eigen::Index>(a.size());
  const auto m = static_cast<Eigen::Index>(b.size());
  Matrix c(n, m);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) c(i, j) = pair_cost(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)], q);
  }
  return c;
}

double wasserstein(const SampleSet& a, const SampleSet& b, int q) {
  check_samples(a, b, q);
  const std::size_t n = a.size();
  double total = 0.0;
  if (a.front().size() == 1) {
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = a[i][0];
      y[i] = b[i][0];
    }
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    for (std::size_t i = 0; i < n; ++i) total += std::pow(std::abs(x[i] - y[i]), q);
  } else {
    if (n > kAssignmentCap) {
      throw InvalidArgument("wasserstein: " + std::to_string(n) + " points exceed the exact-assignment cap of " +
                            std::to_string(kAssignmentCap) + "; use subsampling");
    }
    const Matrix c = cost_matrix(a, b, q);
    const std::vector<int> match = solve_assignment(c);
    for (std::size_t i = 0; i < n; ++i) total += c(static_cast<Eigen::Index>(i), match[i]);
  }
  const double mean = total / static_cast<double>(n);
  return q == 2 ? std::sqrt(mean) : mean;
}

double inside_fraction(const SampleSet& s, const ConstraintSet& set) {
  if (s.empty()) throw InvalidArgument("inside_fraction: empty sample set");
  std::size_t inside = 0;
  for (const auto& x : s) inside += contains(set, x) ? 1 : 0;
  return static_cast<double>(inside) / static_cast<double>(s.size());
}

RejectionResult rejection_sample_target(const Potential& pot, const ConstraintSet& set, std::size_t n, Rng& rng) {
  const auto* quad = std::get_if<Quadratic>(&pot.form());
  if (!quad) throw InvalidArgument("rejection sampling needs a Gaussian (quadratic) potential");
  require_dim(pot.dim(), set.dim(), "rejection_sample_target");
  // precision = LLᵀ, so L⁻ᵀξ ~ N(0, precision⁻¹).
  const Eigen::LLT<Matrix> llt(quad->precision);
  const auto upper = llt.matrixU();
  RejectionResult out;
  out.samples.reserve(n);
  while (out.samples.size() < n) {
    const Vector x = upper.solve(standard_normal(rng, pot.dim()));
    ++out.proposals;
    if (contains(set, x)) out.samples.push_back(x);
    if (out.proposals == kAcceptanceProbe) {
      const double rate = static_cast<double>(out.samples.size()) / static_cast<double>(out.proposals);
      if (rate < kMinAcceptance) {
        throw Error("rejection sampling: acceptance rate " + std::to_string(rate) + " after " +
                    std::to_string(kAcceptanceProbe) + " proposals is below " + std::to_string(kMinAcceptance));
      }
    }
  }
  out.acceptance = static_cast<double>(out.samples.size()) / static_cast<double>(out.proposals);
  return out;
}

// ---------------------------------------------------------------------------

OrderFit fit_order(const std::vector<double>& steps, const std::vector<double>& errors) {
  if (steps.size() != errors.size()) throw InvalidArgument("fit_order: length mismatch");
  if (steps.size() < 3) throw InvalidArgument("fit_order: need at least 3 ladder points");
  const auto k = static_cast<Eigen::Index>(steps.size());
  Matrix x(k, 2);
  Vector y(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto s = static_cast<std::size_t>(i);
    if (!(steps[s] > 0.0) || !(errors[s] > 0.0)) throw InvalidArgument("fit_order: steps and errors must be positive");
    x(i, 0) = std::log(steps[s]);
    x(i, 1) = 1.0;
    y[i] = std::log(errors[s]);
  }
  const Vector coef = x.colPivHouseholderQr().solve(y);
  OrderFit fit;
  fit.steps = steps;
  fit.errors = errors;
  fit.slope = coef[0];
  fit.intercept = coef[1];
  fit.residual = (x * coef - y).norm();
  return fit;
}

Matrix stationary_covariance(const Matrix& m, const Matrix& b) {
  const Eigen::Index n = m.rows();
  const double radius = Eigen::EigenSolver<Matrix>(m, false).eigenvalues().cwiseAbs().maxCoeff();
  if (!(radius < 1.0)) throw InvalidArgument("stationary_covariance: spectral radius " + std::to_string(radius) + " >= 1");
  Matrix kron(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) kron.block(i * n, j * n, n, n) = m(i, j) * m;
  }
  const Matrix q = b * b.transpose();
  const Vector vec_q = Eigen::Map<const Vector>(q.data(), n * n);
  const Vector vec_s = (Matrix::Identity(n * n, n * n) - kron).fullPivLu().solve(vec_q);
  Matrix s = Eigen::Map<const Matrix>(vec_s.data(), n, n);
  return 0.5 * (s + s.transpose());
}

namespace {

// Affine-map coefficients (M, B) of a zero-offset linear step on (θ, v) ∈ R².
std::pair<Matrix, Matrix> probe_linear_step(const LinearStep& step, int noise_width, double h) {
  Matrix m(2, 2);
  Matrix b(2, noise_width);
  const Vector zero_noise = Vector::Zero(noise_width);
  for (int j = 0; j < 2; ++j) {
    KineticState e{Vector::Zero(1), Vector::Zero(1)};
    (j == 0 ? e.theta : e.v)[0] = 1.0;
    const KineticState y = step(e, h, zero_noise);
    m(0, j) = y.theta[0];
    m(1, j) = y.v[0];
  }
  for (int j = 0; j < noise_width; ++j) {
    Vector xi = Vector::Zero(noise_width);
    xi[j] = 1.0;
    const KineticState y = step({Vector::Zero(1), Vector::Zero(1)}, h, xi);
    b(0, j) = y.theta[0];
    b(1, j) = y.v[0];
  }
  return {m, b};
}

}  // namespace

Matrix scheme_stationary_covariance(const LinearStep& step, int noise_width, double h) {
  const auto [m, b] = probe_linear_step(step, noise_width, h);
  return stationary_covariance(m, b);
}

LinearStep linear_step(Scheme s, double precision, double gamma) {
  return [s, precision, gamma](const KineticState& x, double h, const Vector& normals) {
    const GradientFn grad = [precision](const Vector& t) -> Vector { return precision * t; };
    const NoiseBlock noise = noise_from_normals(s, h, gamma, normals, 1);
    switch (s) {
      case Scheme::cubu: return step_cubu(x, h, gamma, grad, noise);
      case Scheme::cbaoab: {
        Vector cache = precision * x.theta;
        return step_cbaoab(x, h, gamma, grad, noise, cache);
      }
      case Scheme::cklmc: break;
    }
    return step_cklmc(x, h, gamma, grad, noise);
  };
}

OrderFit weak_bias_ladder(const LinearStep& step, int noise_width, const std::vector<double>& hs, BiasObservable obs) {
  std::vector<double> steps, errors, unstable;
  for (double h : hs) {
    const auto [m, b] = probe_linear_step(step, noise_width, h);
    const double radius = Eigen::EigenSolver<Matrix>(m, false).eigenvalues().cwiseAbs().maxCoeff();
    if (!(radius < 1.0)) {
      unstable.push_back(h);
      continue;
    }
    const Matrix sigma = stationary_covariance(m, b);
    const double err = obs == BiasObservable::position ? std::abs(sigma(0, 0) - 1.0)
                                                        : (sigma - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff();
    steps.push_back(h);
    errors.push_back(err);
  }
  OrderFit fit;
  const bool fittable = steps.size() >= 3 && std::all_of(errors.begin(), errors.end(), [](double e) { return e > 0.0; });
  if (fittable) {
    fit = fit_order(steps, errors);
  } else {
    fit.steps = steps;
    fit.errors = errors;
  }
  fit.unstable_steps = unstable;
  return fit;
}

OrderFit weak_bias_ladder(Scheme s, double precision, double gamma, const std::vector<double>& hs, BiasObservable obs) {
  return weak_bias_ladder(linear_step(s, precision, gamma), noise_width(s), hs, obs);
}

namespace {

struct StrongPlan {
  double dt;
  long path_steps;
  std::vector<long> n;  // steps at h over the horizon
};

StrongPlan plan_strong(const std::vector<double>& hs, const StrongOptions& opt) {
  if (hs.empty()) throw InvalidArgument("strong_error_ladder: empty ladder");
  if (opt.refinement < 1 || opt.paths < 1 || !(opt.horizon > 0.0)) throw InvalidArgument("strong_error_ladder: bad options");
  const double hmin = *std::min_element(hs.begin(), hs.end());
  StrongPlan plan;
  plan.dt = hmin / (2.0 * opt.refinement);
  plan.path_steps = std::lround(opt.horizon / plan.dt);
  for (double h : hs) {
    const long n = std::lround(opt.horizon / h);
    if (n < 1 || std::abs(static_cast<double>(n) * h - opt.horizon) > 1e-9 * opt.horizon) {
      throw InvalidArgument("strong_error_ladder: horizon is not a multiple of h");
    }
    plan.n.push_back(n);
  }
  return plan;
}

double joint_sq(const KineticState& a, const KineticState& b) {
  return (a.theta - b.theta).squaredNorm() + (a.v - b.v).squaredNorm();
}

std::vector<double> strong_path_errors(Scheme s, const PenalizedPotential& u, double gamma,
                                       const std::vector<double>& hs, const StrongOptions& opt,
                                       const StrongPlan& plan, int path) {
  Rng rng = make_stream(opt.seed, static_cast<std::uint64_t>(path));
  const KineticState init{Vector::Zero(u.dim()), standard_normal(rng, u.dim())};
  const BrownianPath bp(u.dim(), plan.dt, plan.path_steps, gamma, rng);
  std::vector<double> err(hs.size());
  for (std::size_t r = 0; r < hs.size(); ++r) {
    const KineticState coarse = run_on_path(init, plan.n[r], s, hs[r], gamma, u, bp);
    const KineticState fine = run_on_path(init, plan.n[r] * opt.refinement, s, hs[r] / opt.refinement, gamma, u, bp);
    err[r] = joint_sq(coarse, fine);
  }
  return err;
}

OrderFit finish_strong(const std::vector<double>& hs, const std::vector<std::vector<double>>& per_path) {
  std::vector<double> rms(hs.size(), 0.0);
  for (const auto& e : per_path) {
    for (std::size_t r = 0; r < hs.size(); ++r) rms[r] += e[r];
  }
  for (double& x : rms) x = std::sqrt(x / static_cast<double>(per_path.size()));
  if (hs.size() >= 3 && std::all_of(rms.begin(), rms.end(), [](double e) { return e > 0.0; })) return fit_order(hs, rms);
  OrderFit fit;
  fit.steps = hs;
  fit.errors = rms;
  return fit;
}

}  // namespace

OrderFit strong_error_ladder_serial(Scheme s, const PenalizedPotential& u, double gamma, const std::vector<double>& hs,
                                    const StrongOptions& opt) {
  const StrongPlan plan = plan_strong(hs, opt);
  std::vector<std::vector<double>> per_path(static_cast<std::size_t>(opt.paths));
  for (int i = 0; i < opt.paths; ++i) per_path[static_cast<std::size_t>(i)] = strong_path_errors(s, u, gamma, hs, opt, plan, i);
  return finish_strong(hs, per_path);
}

OrderFit strong_error_ladder(Scheme s, const PenalizedPotential& u, double gamma, const std::vector<double>& hs,
                             const StrongOptions& opt) {
  const StrongPlan plan = plan_strong(hs, opt);
  std::vector<std::vector<double>> per_path(static_cast<std::size_t>(opt.paths));
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < opt.paths; ++i) {
    try {
      per_path[static_cast<std::size_t>(i)] = strong_path_errors(s, u, gamma, hs, opt, plan, i);
    } catch (...) {
#pragma omp critical(pkld_strong_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return finish_strong(hs, per_path);
}

double contraction_fit(const std::vector<double>& distances) {
  std::vector<double> k, y;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (distances[i] > 0.0 && std::isfinite(distances[i])) {
      k.push_back(static_cast<double>(i));
      y.push_back(std::log(distances[i]));
    }
  }
  if (k.size() < 10) throw InvalidArgument("contraction_fit: fewer than 10 usable points");
  const auto n = static_cast<double>(k.size());
  double mk = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    mk += k[i];
    my += y[i];
  }
  mk /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    sxy += (k[i] - mk) * (y[i] - my);
    sxx += (k[i] - mk) * (k[i] - mk);
  }
  return -sxy / sxx;
}

}  // namespace pkld

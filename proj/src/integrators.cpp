#include "pkld/integrators.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <ostream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pkld {

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::cubu: return "cubu";
    case Scheme::cbaoab: return "cbaoab";
    case Scheme::cklmc: return "cklmc";
  }
  return "?";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "cubu" || name == "CUBU") return Scheme::cubu;
  if (name == "cbaoab" || name == "CBAOAB") return Scheme::cbaoab;
  if (name == "cklmc" || name == "CKLMC") return Scheme::cklmc;
  throw InvalidArgument("unknown scheme '" + name + "'");
}

double IntegratorConfig::eta() const { return std::exp(-0.5 * gamma * h); }

double IntegratorConfig::step_at(long k) const {
  if (!schedule || schedule->factor == 1.0) return h;
  return h * std::pow(schedule->factor, static_cast<double>(k / schedule->period));
}

void IntegratorConfig::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("config: h must be positive");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("config: gamma must be positive");
  if (schedule) {
    if (!(schedule->factor > 0.0 && schedule->factor <= 1.0)) {
      throw InvalidArgument("config: schedule factor must lie in (0, 1]");
    }
    if (schedule->period < 1) throw InvalidArgument("config: schedule period must be positive");
  }
}

// ---------------------------------------------------------------------------

int noise_width(Scheme s) { return s == Scheme::cubu ? 4 : 1; }

OuMoments ou_moments(double t, double gamma) {
  return {t, -std::expm1(-2.0 * gamma * t) / (2.0 * gamma), -std::expm1(-gamma * t) / gamma};
}

OuIncrement ou_increment(double t, double gamma, const Vector& xi1, const Vector& xi2) {
  // Z2 | Z1 is Gaussian with mean (Cov/t)·Z1 and variance
  // (a/γ)(1 − a/2 − a/x), a = 1 − e^{−x}, x = γt. The bracket cancels
  // catastrophically for small x, where its Taylor series is used instead.
  const double x = gamma * t;
  const double a = -std::expm1(-x);
  double bracket;
  if (x < 0.1) {
    const double x2 = x * x;
    bracket = x2 * (1.0 / 12 + x * (-1.0 / 24 + x * (1.0 / 80 + x * (-1.0 / 360 + x * (1.0 / 2016 +
              x * (-1.0 / 13440 + x * (1.0 / 103680 + x * (-1.0 / 907200))))))));
  } else {
    bracket = 1.0 - 0.5 * a - a / x;
  }
  const double cond = std::max(0.0, (a / gamma) * bracket);
  OuIncrement z;
  z.z1 = std::sqrt(t) * xi1;
  z.z2 = (a / (gamma * t)) * z.z1 + std::sqrt(cond) * xi2;
  return z;
}

OuIncrement ou_concat(const OuIncrement& first, const OuIncrement& second, double second_duration,
                      double gamma) {
  return {first.z1 + second.z1, std::exp(-gamma * second_duration) * first.z2 + second.z2};
}

NoiseBlock noise_from_normals(Scheme s, double h, double gamma, const Vector& normals, Eigen::Index p) {
  require_dim(noise_width(s) * p, normals.size(), "noise_from_normals");
  NoiseBlock nb;
  if (s == Scheme::cubu) {
    nb.first = ou_increment(0.5 * h, gamma, normals.segment(0, p), normals.segment(p, p));
    nb.second = ou_increment(0.5 * h, gamma, normals.segment(2 * p, p), normals.segment(3 * p, p));
  } else {
    nb.xi = normals.head(p);
  }
  return nb;
}

NoiseBlock noise_from_path(Scheme s, double h, double gamma, const OuIncrement& first,
                           const OuIncrement& second) {
  NoiseBlock nb;
  if (s == Scheme::cubu) {
    nb.first = first;
    nb.second = second;
    return nb;
  }
  const OuIncrement full = ou_concat(first, second, 0.5 * h, gamma);
  if (s == Scheme::cbaoab) {
    // Exact O over h: v' = e^{−γh}v + √(2γ)·Z2, and √(2γ)Z2 / √(1 − e^{−2γh}) ~ N(0, I).
    nb.xi = std::sqrt(2.0 * gamma / -std::expm1(-2.0 * gamma * h)) * full.z2;
  } else {
    nb.xi = full.z1 / std::sqrt(h);
  }
  return nb;
}

// ---------------------------------------------------------------------------

KineticState op_U(const KineticState& x, double t, const OuIncrement& z, double gamma) {
  const double eta = std::exp(-gamma * t);
  KineticState y;
  y.theta = x.theta + (-std::expm1(-gamma * t) / gamma) * x.v + std::sqrt(2.0 / gamma) * (z.z1 - z.z2);
  y.v = eta * x.v + std::sqrt(2.0 * gamma) * z.z2;
  return y;
}

KineticState op_U(const KineticState& x, double t, const Vector& xi1, const Vector& xi2, double gamma) {
  return op_U(x, t, ou_increment(t, gamma, xi1, xi2), gamma);
}

KineticState op_B(const KineticState& x, double h, const Vector& gradient) {
  return {x.theta, x.v - h * gradient};
}

KineticState op_B(const KineticState& x, double h, const GradientFn& grad) {
  return op_B(x, h, grad(x.theta));
}

KineticState op_A(const KineticState& x, double t) { return {x.theta + t * x.v, x.v}; }

KineticState op_O(const KineticState& x, double t, const Vector& xi, double gamma) {
  return {x.theta, std::exp(-gamma * t) * x.v + std::sqrt(-std::expm1(-2.0 * gamma * t)) * xi};
}

KineticState step_cubu(const KineticState& x, double h, double gamma, const GradientFn& grad,
                       const NoiseBlock& noise) {
  KineticState y = op_U(x, 0.5 * h, noise.first, gamma);
  y = op_B(y, h, grad);
  return op_U(y, 0.5 * h, noise.second, gamma);
}

KineticState step_cbaoab(const KineticState& x, double h, double gamma, const GradientFn& grad,
                         const NoiseBlock& noise, Vector& cache) {
  KineticState y = op_B(x, 0.5 * h, cache);
  y = op_A(y, 0.5 * h);
  y = op_O(y, h, noise.xi, gamma);
  y = op_A(y, 0.5 * h);
  cache = grad(y.theta);
  return op_B(y, 0.5 * h, cache);
}

KineticState step_cklmc(const KineticState& x, double h, double gamma, const GradientFn& grad,
                        const NoiseBlock& noise) {
  const Vector g = grad(x.theta);
  return {x.theta + h * x.v, x.v - h * g - (h * gamma) * x.v + std::sqrt(2.0 * gamma * h) * noise.xi};
}

GradientFn make_gradient(const PenalizedPotential& u, const StochasticGradient* sg, Rng& rng) {
  if (!sg) return [&u](const Vector& theta) { return grad_penalized(u, theta); };
  require_dim(u.dim(), sg->potential().dim(), "stochastic gradient");
  return [&u, sg, &rng](const Vector& theta) {
    Vector g = stoch_grad(*sg, theta, rng);
    if (u.set()) g += penalty_grad(*u.set(), u.kind(), u.params(), theta);
    return g;
  };
}

// ---------------------------------------------------------------------------

namespace {

enum Stream : std::uint64_t { kStepNoise = 0, kGradientNoise = 1, kInit = 2 };

void check_finite(const KineticState& x, long step) {
  const bool ok = x.theta.allFinite() && x.v.allFinite() && x.theta.norm() <= kDivergenceThreshold &&
                  x.v.norm() <= kDivergenceThreshold;
  if (!ok) throw DivergenceError("chain diverged at step " + std::to_string(step), step);
}

const StochasticGradient* gradient_source(const IntegratorConfig& config, const StochasticGradient* sg) {
  if (config.mode == GradientMode::full) return nullptr;
  if (!sg) throw InvalidArgument("stochastic gradient mode requires an estimator");
  return sg;
}

// One chain driven by an external noise generator; shared by run_chain and
// run_coupled.
class Stepper {
 public:
  Stepper(const IntegratorConfig& config, GradientFn grad, const KineticState& initial)
      : config_(config), grad_([this, g = std::move(grad)](const Vector& t) {
          ++calls_;
          return g(t);
        }),
        state_(initial) {
    if (config_.scheme == Scheme::cbaoab) cache_ = grad_(state_.theta);
  }

  void advance(double h, const NoiseBlock& noise) {
    switch (config_.scheme) {
      case Scheme::cubu: state_ = step_cubu(state_, h, config_.gamma, grad_, noise); break;
      case Scheme::cbaoab: state_ = step_cbaoab(state_, h, config_.gamma, grad_, noise, cache_); break;
      case Scheme::cklmc: state_ = step_cklmc(state_, h, config_.gamma, grad_, noise); break;
    }
  }

  const KineticState& state() const { return state_; }
  long calls() const { return calls_; }

 private:
  const IntegratorConfig& config_;
  long calls_ = 0;
  GradientFn grad_;
  KineticState state_;
  Vector cache_;
};

double joint_distance(const KineticState& a, const KineticState& b) {
  return std::sqrt((a.theta - b.theta).squaredNorm() + (a.v - b.v).squaredNorm());
}

}  // namespace

KineticState default_initial(Eigen::Index p, std::uint64_t seed) {
  Rng rng = make_stream(seed, kInit);
  return {Vector::Zero(p), standard_normal(rng, p)};
}

Trace run_chain(const KineticState& initial, long n, const IntegratorConfig& config, const PenalizedPotential& u,
                const StochasticGradient* sg, std::uint64_t seed, bool keep_states) {
  config.validate();
  if (n < 0) throw InvalidArgument("run_chain: negative iteration count");
  require_dim(u.dim(), initial.theta.size(), "run_chain (theta)");
  require_dim(u.dim(), initial.v.size(), "run_chain (v)");
  const auto start = std::chrono::steady_clock::now();

  Rng noise_rng = make_stream(seed, kStepNoise);
  Rng grad_rng = make_stream(seed, kGradientNoise);
  const Eigen::Index p = u.dim();
  const int width = noise_width(config.scheme);

  Trace trace;
  trace.config = config;
  trace.seed = seed;
  if (keep_states) trace.states.reserve(static_cast<std::size_t>(n) + 1);
  trace.states.push_back(initial);

  Stepper chain(config, make_gradient(u, gradient_source(config, sg), grad_rng), initial);
  for (long k = 0; k < n; ++k) {
    const double h = config.step_at(k);
    chain.advance(h, noise_from_normals(config.scheme, h, config.gamma, standard_normal(noise_rng, width * p), p));
    check_finite(chain.state(), k + 1);
    if (keep_states) trace.states.push_back(chain.state());
  }
  if (!keep_states) trace.states.back() = chain.state();
  trace.gradient_calls = chain.calls();
  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

CoupledTrace run_coupled(const KineticState& initial_a, const KineticState& initial_b, long n,
                         const IntegratorConfig& config, const PenalizedPotential& u,
                         const StochasticGradient* sg, std::uint64_t seed) {
  config.validate();
  if (n < 0) throw InvalidArgument("run_coupled: negative iteration count");
  Rng noise_rng = make_stream(seed, kStepNoise);
  Rng grad_rng_a = make_stream(seed, kGradientNoise);
  Rng grad_rng_b = make_stream(seed, kGradientNoise);
  const StochasticGradient* source = gradient_source(config, sg);
  const Eigen::Index p = u.dim();
  const int width = noise_width(config.scheme);

  CoupledTrace out;
  for (Trace* t : {&out.a, &out.b}) {
    t->config = config;
    t->seed = seed;
  }
  out.a.states.push_back(initial_a);
  out.b.states.push_back(initial_b);
  out.distances.push_back(joint_distance(initial_a, initial_b));

  Stepper a(config, make_gradient(u, source, grad_rng_a), initial_a);
  Stepper b(config, make_gradient(u, source, grad_rng_b), initial_b);
  for (long k = 0; k < n; ++k) {
    const double h = config.step_at(k);
    const NoiseBlock noise =
        noise_from_normals(config.scheme, h, config.gamma, standard_normal(noise_rng, width * p), p);
    a.advance(h, noise);
    b.advance(h, noise);
    check_finite(a.state(), k + 1);
    check_finite(b.state(), k + 1);
    out.a.states.push_back(a.state());
    out.b.states.push_back(b.state());
    out.distances.push_back(joint_distance(a.state(), b.state()));
  }
  out.a.gradient_calls = a.calls();
  out.b.gradient_calls = b.calls();
  return out;
}

std::uint64_t chain_seed(std::uint64_t root, std::uint64_t i) {
  Rng rng = make_stream(root, i);
  return rng();
}

std::vector<KineticState> run_ensemble_serial(long n, const IntegratorConfig& config, const PenalizedPotential& u,
                                              const StochasticGradient* sg, std::uint64_t root, int chains) {
  std::vector<KineticState> out;
  out.reserve(static_cast<std::size_t>(chains));
  for (int i = 0; i < chains; ++i) {
    const std::uint64_t seed = chain_seed(root, static_cast<std::uint64_t>(i));
    out.push_back(run_chain(default_initial(u.dim(), seed), n, config, u, sg, seed, false).states.back());
  }
  return out;
}

std::vector<KineticState> run_ensemble(long n, const IntegratorConfig& config, const PenalizedPotential& u,
                                       const StochasticGradient* sg, std::uint64_t root, int chains) {
  std::vector<KineticState> out(static_cast<std::size_t>(std::max(chains, 0)));
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < chains; ++i) {
    try {
      const std::uint64_t seed = chain_seed(root, static_cast<std::uint64_t>(i));
      out[static_cast<std::size_t>(i)] =
          run_chain(default_initial(u.dim(), seed), n, config, u, sg, seed, false).states.back();
    } catch (...) {
#pragma omp critical(pkld_ensemble_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

// ---------------------------------------------------------------------------

BrownianPath::BrownianPath(Eigen::Index p, double dt, long steps, double gamma, Rng& rng)
    : dt_(dt), gamma_(gamma) {
  if (!(dt > 0.0) || steps < 0) throw InvalidArgument("BrownianPath: need dt > 0 and steps >= 0");
  increments_.reserve(static_cast<std::size_t>(steps));
  for (long k = 0; k < steps; ++k) {
    const Vector xi1 = standard_normal(rng, p);
    const Vector xi2 = standard_normal(rng, p);
    increments_.push_back(ou_increment(dt, gamma, xi1, xi2));
  }
}

OuIncrement BrownianPath::aggregate(long begin, long count) const {
  if (begin < 0 || count < 1 || begin + count > steps()) throw InvalidArgument("BrownianPath: range out of bounds");
  OuIncrement acc = increments_[static_cast<std::size_t>(begin)];
  for (long k = begin + 1; k < begin + count; ++k) {
    acc = ou_concat(acc, increments_[static_cast<std::size_t>(k)], dt_, gamma_);
  }
  return acc;
}

NoiseBlock BrownianPath::block(Scheme s, long k, double h) const {
  const double half = 0.5 * h;
  const long m = std::lround(half / dt_);
  if (m < 1 || std::abs(static_cast<double>(m) * dt_ - half) > 1e-9 * half) {
    throw InvalidArgument("BrownianPath: h/2 is not a multiple of the path resolution");
  }
  return noise_from_path(s, h, gamma_, aggregate(2 * k * m, m), aggregate((2 * k + 1) * m, m));
}

KineticState run_on_path(const KineticState& initial, long n, Scheme s, double h, double gamma,
                         const PenalizedPotential& u, const BrownianPath& path) {
  IntegratorConfig config;
  config.scheme = s;
  config.h = h;
  config.gamma = gamma;
  Stepper chain(config, [&u](const Vector& t) { return grad_penalized(u, t); }, initial);
  for (long k = 0; k < n; ++k) {
    chain.advance(h, path.block(s, k, h));
    check_finite(chain.state(), k + 1);
  }
  return chain.state();
}

void write_trace_csv(const Trace& trace, std::ostream& out) {
  const Eigen::Index p = trace.states.empty() ? 0 : trace.states.front().theta.size();
  out << "step";
  for (Eigen::Index i = 0; i < p; ++i) out << ",theta_" << (i + 1);
  for (Eigen::Index i = 0; i < p; ++i) out << ",v_" << (i + 1);
  out << '\n';
  const auto old = out.precision(17);
  for (std::size_t k = 0; k < trace.states.size(); ++k) {
    out << k;
    for (Eigen::Index i = 0; i < p; ++i) out << ',' << trace.states[k].theta[i];
    for (Eigen::Index i = 0; i < p; ++i) out << ',' << trace.states[k].v[i];
    out << '\n';
  }
  out.precision(old);
}

}  // namespace pkld

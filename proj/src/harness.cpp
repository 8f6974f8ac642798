#include "pkld/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>

namespace pkld {

namespace fs = std::filesystem;

namespace {

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json matrix_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector_json(m.row(i).transpose()));
  return a;
}

Vector vector_from(const Json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw InvalidArgument(std::string(what) + ": expected a nonempty array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Matrix matrix_from(const Json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw InvalidArgument(std::string(what) + ": expected an array of rows");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw InvalidArgument(std::string(what) + ": ragged matrix");
    for (std::size_t k = 0; k < cols; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
  }
  return m;
}

// JSON has no infinities; report them as null.
Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json terms_json(const BoundTerms& t) {
  Json j{{"decay", num(t.decay)}, {"bias", num(t.bias)}, {"noise", num(t.noise)}, {"admissible", t.admissible}};
  if (!t.reason.empty()) j["reason"] = t.reason;
  return j;
}

std::string sampling_name(Sampling s) {
  return s == Sampling::with_replacement ? "with_replacement" : "without_replacement";
}

}  // namespace

// ---------------------------------------------------------------------------

ConstraintSet parse_constraint(const Json& j, Eigen::Index dim) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "ball") return ConstraintSet::ball(dim, j.at("radius").get<double>());
  if (type == "ellipsoid") return ConstraintSet::ellipsoid(matrix_from(j.at("a"), "ellipsoid.a"));
  if (type == "lq_ball") return ConstraintSet::lq_ball(dim, j.at("q").get<double>(), j.at("radius").get<double>());
  if (type == "box") return ConstraintSet::box(vector_from(j.at("lower"), "box.lower"), vector_from(j.at("upper"), "box.upper"));
  if (type == "polytope") return ConstraintSet::polytope(matrix_from(j.at("a"), "polytope.a"), vector_from(j.at("b"), "polytope.b"));
  throw InvalidArgument("unknown constraint type '" + type + "'");
}

ProjectionKind parse_projection(const Json& j) {
  const std::string type = j.is_string() ? j.get<std::string>() : j.at("type").get<std::string>();
  if (type == "euclidean") return Euclidean{};
  if (type == "gauge") return Gauge{};
  if (type == "bregman") return bregman(matrix_from(j.at("Q"), "projection.Q"));
  throw InvalidArgument("unknown projection '" + type + "'");
}

Potential build_potential(const TargetSpec& t) {
  if (t.type == "gaussian") return Potential::quadratic(t.precision);
  if (t.type == "regression") {
    if (!t.csv.empty()) {
      std::ifstream in(t.csv);
      if (!in) throw Error("cannot open regression data '" + t.csv + "'");
      return Potential::sum_of_losses(read_regression_csv(in));
    }
    Rng rng = make_stream(t.data_seed, 0);
    return Potential::sum_of_losses(generate_regression_data(t.n, t.theta_star, t.noise_var, rng));
  }
  throw InvalidArgument("unknown target type '" + t.type + "'");
}

Json to_json(const ExperimentConfig& c) {
  Json target;
  target["type"] = c.target.type;
  if (c.target.type == "gaussian") {
    target["precision"] = matrix_json(c.target.precision);
  } else {
    target["n"] = c.target.n;
    target["theta_star"] = vector_json(c.target.theta_star);
    target["noise_var"] = c.target.noise_var;
    target["seed"] = c.target.data_seed;
    if (!c.target.csv.empty()) target["csv"] = c.target.csv;
  }
  Json gradient;
  gradient["mode"] = c.gradient.mode == GradientMode::full ? "full" : "stochastic";
  if (c.gradient.batch) gradient["batch"] = *c.gradient.batch;
  if (c.gradient.sigma1) gradient["sigma1"] = *c.gradient.sigma1;
  if (c.gradient.batch) gradient["sampling"] = sampling_name(c.gradient.sampling);

  Json schemes = Json::array();
  for (Scheme s : c.schemes) schemes.push_back(scheme_name(s));

  Json j;
  j["name"] = c.name;
  j["target"] = target;
  j["constraint"] = c.constraint;
  j["projection"] = c.projection;
  j["lambda"] = c.lambda;
  j["scheme"] = schemes;
  j["gradient"] = gradient;
  j["gamma"] = c.gamma ? Json(*c.gamma) : Json("critical");
  j["h"] = c.h;
  j["schedule"] = c.schedule ? Json{{"factor", c.schedule->factor}, {"period", c.schedule->period}} : Json(nullptr);
  j["iterations"] = c.iterations;
  j["burn_in"] = c.burn_in;
  j["seeds"] = c.seeds;
  j["metrics"] = c.metrics;
  j["out"] = c.out;
  j["reference_samples"] = c.reference_samples;
  return j;
}

ExperimentConfig config_from_json(const Json& j) {
  static const std::vector<std::string> known{"name", "target", "constraint", "projection", "lambda", "scheme",
                                              "gradient", "gamma", "h", "schedule", "iterations", "burn_in",
                                              "seeds", "metrics", "out", "reference_samples"};
  if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw InvalidArgument("config: unknown key '" + key + "'");
  }
  ExperimentConfig c;
  c.name = j.value("name", std::string());

  const Json& t = j.at("target");
  c.target.type = t.at("type").get<std::string>();
  if (c.target.type == "gaussian") {
    c.target.precision = matrix_from(t.at("precision"), "target.precision");
  } else if (c.target.type == "regression") {
    c.target.csv = t.value("csv", std::string());
    c.target.n = t.value("n", 0L);
    if (t.contains("theta_star")) c.target.theta_star = vector_from(t.at("theta_star"), "target.theta_star");
    c.target.noise_var = t.value("noise_var", 0.0);
    c.target.data_seed = t.value("seed", std::uint64_t{0});
    if (c.target.csv.empty() && (c.target.n < 1 || c.target.theta_star.size() == 0)) {
      throw InvalidArgument("config: regression target needs n and theta_star, or csv");
    }
  } else {
    throw InvalidArgument("config: unknown target type '" + c.target.type + "'");
  }

  c.constraint = j.at("constraint");
  c.projection = j.value("projection", Json("euclidean"));
  parse_projection(c.projection);
  c.lambda = j.at("lambda").get<double>();

  c.schemes.clear();
  const Json& sj = j.value("scheme", Json("cubu"));
  if (sj.is_string()) {
    c.schemes.push_back(parse_scheme(sj.get<std::string>()));
  } else {
    for (const auto& s : sj) c.schemes.push_back(parse_scheme(s.get<std::string>()));
  }
  if (c.schemes.empty()) throw InvalidArgument("config: no scheme given");

  if (j.contains("gradient")) {
    const Json& g = j.at("gradient");
    const std::string mode = g.is_string() ? g.get<std::string>() : g.value("mode", std::string("full"));
    if (mode == "full") {
      c.gradient.mode = GradientMode::full;
    } else if (mode == "stochastic") {
      c.gradient.mode = GradientMode::stochastic;
    } else {
      throw InvalidArgument("config: gradient mode must be full or stochastic");
    }
    if (g.is_object()) {
      if (g.contains("batch")) c.gradient.batch = g.at("batch").get<long>();
      if (g.contains("sigma1")) c.gradient.sigma1 = g.at("sigma1").get<double>();
      const std::string sampling = g.value("sampling", std::string("without_replacement"));
      if (sampling == "with_replacement") c.gradient.sampling = Sampling::with_replacement;
      else if (sampling == "without_replacement") c.gradient.sampling = Sampling::without_replacement;
      else throw InvalidArgument("config: unknown sampling '" + sampling + "'");
    }
  }

  const Json gamma = j.value("gamma", Json(2.0));
  if (gamma.is_string()) {
    if (gamma.get<std::string>() != "critical") throw InvalidArgument("config: gamma must be a number or \"critical\"");
    c.gamma.reset();
  } else {
    c.gamma = gamma.get<double>();
  }
  c.h = j.at("h").get<double>();
  if (j.contains("schedule") && !j.at("schedule").is_null()) {
    c.schedule = StepSchedule{j.at("schedule").at("factor").get<double>(), j.at("schedule").at("period").get<long>()};
  }
  c.iterations = j.at("iterations").get<long>();
  c.burn_in = j.value("burn_in", 0L);
  if (c.iterations < 0 || c.burn_in < 0) throw InvalidArgument("config: iterations and burn_in must be nonnegative");
  const Json& seeds = j.value("seeds", Json::array({0}));
  c.seeds.clear();
  if (seeds.is_number_integer()) {
    for (std::uint64_t s = 0; s < seeds.get<std::uint64_t>(); ++s) c.seeds.push_back(s);
  } else {
    c.seeds = seeds.get<std::vector<std::uint64_t>>();
  }
  if (c.seeds.empty()) throw InvalidArgument("config: at least one seed is required");
  c.metrics = j.value("metrics", std::vector<std::string>{"inside_fraction", "mean"});
  const auto names = metric_names();
  for (const auto& m : c.metrics) {
    if (std::find(names.begin(), names.end(), m) == names.end()) throw InvalidArgument("config: unknown metric '" + m + "'");
    if (std::count(c.metrics.begin(), c.metrics.end(), m) > 1) throw InvalidArgument("config: metric '" + m + "' listed twice");
  }
  c.out = j.value("out", std::string());
  c.reference_samples = j.value("reference_samples", std::size_t{2000});
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw InvalidArgument("config '" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

std::vector<std::string> preset_names() { return {"circle", "triangle", "square", "lasso"}; }

std::vector<std::string> metric_names() { return {"inside_fraction", "mean", "w1", "w2"}; }

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.target.type = "gaussian";
  c.target.precision = Matrix::Identity(2, 2);
  c.projection = "gauge";
  c.lambda = 0.3;
  c.schemes = {Scheme::cklmc, Scheme::cubu, Scheme::cbaoab};
  c.gradient.sigma1 = 0.125;  // 64 minibatches: σ1² = 1/64
  c.gamma = 2.0;
  c.h = 0.1;
  c.iterations = 1000;
  c.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  c.metrics = {"inside_fraction", "mean", "w2"};
  if (name == "circle") {
    c.constraint = {{"type", "ball"}, {"radius", 0.5}};
  } else if (name == "triangle") {
    c.constraint = {{"type", "polytope"}, {"a", {{-1.0, 0.0}, {0.0, -1.0}, {1.0, 1.0}}}, {"b", {0.3, 0.3, 0.6}}};
  } else if (name == "square") {
    c.constraint = {{"type", "box"}, {"lower", {-0.3, -0.3}}, {"upper", {0.6, 0.6}}};
  } else if (name == "lasso") {
    c.target = {};
    c.target.type = "regression";
    c.target.n = 10000;
    c.target.theta_star = Vector::Ones(2);
    c.target.noise_var = 0.25;
    c.target.data_seed = 2024;
    c.constraint = {{"type", "polytope"}, {"a", {{1.0, 1.0}, {1.0, -1.0}, {-1.0, 1.0}, {-1.0, -1.0}}}, {"b", {1.0, 1.0, 1.0, 1.0}}};
    c.lambda = 0.001;
    c.schemes = {Scheme::cubu};
    c.gradient = {};
    c.gradient.mode = GradientMode::stochastic;
    c.gradient.batch = 50;
    c.gamma.reset();  // critical damping; see README
    c.h = 1e-5;
    c.schedule = StepSchedule{0.85, 2000};
    c.iterations = 8000;
    c.burn_in = 2000;
    c.seeds = {0};
    c.metrics = {"inside_fraction", "mean"};
  } else {
    throw InvalidArgument("unknown preset '" + name + "'");
  }
  return c;
}

Problem build_problem(const ExperimentConfig& c) {
  Potential f = build_potential(c.target);
  ConstraintSet set = parse_constraint(c.constraint, f.dim());
  const double gamma = c.gamma ? *c.gamma : 2.0 * std::sqrt(f.m());
  std::optional<StochasticGradient> sg;
  if (c.gradient.mode == GradientMode::stochastic) {
    if (c.gradient.batch) {
      sg = StochasticGradient::minibatch(f, *c.gradient.batch, c.gradient.sampling);
    } else if (c.gradient.sigma1) {
      sg = StochasticGradient::additive_noise(f, *c.gradient.sigma1);
    } else {
      throw InvalidArgument("config: stochastic gradient needs batch or sigma1");
    }
  }
  return {PenalizedPotential(std::move(f), std::move(set), parse_projection(c.projection), c.lambda), std::move(sg), gamma};
}

// ---------------------------------------------------------------------------

Json bounds_report(const ExperimentConfig& config) {
  const Problem pr = build_problem(config);
  const PenalizedPotential& u = pr.u;
  const StochasticGradient* sg = pr.sg ? &*pr.sg : nullptr;
  const ProblemConstants c = problem_constants(u, sg);
  const PenalizedConstants pc = penalized_constants(u);
  const double gamma = pr.gamma;
  const double h = config.h;
  const long n = config.iterations;
  const double w0 = std::sqrt(c.p / c.m);  // W1 bound of the default initialization

  Json j;
  j["conventions"] = {{"C0", 1.0}, {"C1", 1.0}, {"initial_distance", "sqrt(p/m)"}};
  j["constants"] = {{"m", num(c.m)},   {"L", num(c.L)},     {"L1", num(c.L1)},   {"M_lambda", num(c.M)},
                    {"M1_lambda", pc.m1_lambda ? num(*pc.m1_lambda) : Json(nullptr)},
                    {"c1", num(c.c1)}, {"r", num(c.r)},     {"R", num(c.R)},     {"p", c.p},
                    {"osc", num(c.osc)}, {"vol", num(c.vol)}, {"sigma1", num(c.sigma1)},
                    {"sigma2", num(c.sigma2)}, {"kappa", num(c.kappa())}, {"gamma", num(gamma)}};
  if (!pc.m1_lambda) j["constants"]["M1_lambda_note"] = pc.note;
  j["lambda_admissible"] = {{"w1", num(lambda_admissible(c, 1.0))}, {"w2", num(lambda_admissible(c, 2.0))}};
  j["lambda_within_admissible"] = config.lambda < lambda_admissible(c, 2.0);
  Json gap;
  for (double q : {1.0, 2.0}) {
    const std::string key = q == 1.0 ? "w1" : "w2";
    gap[key] = {{"regime", surrogate_gap_rate(c.p, q).tag},
                {"constant", num(surrogate_gap_constant(c, q))},
                {"bound", num(surrogate_gap_bound(c, q, config.lambda))}};
  }
  j["surrogate_gap"] = gap;
  j["cubu"] = {{"contraction_per_step", num(cubu_contraction(c.m, c.M, h))},
               {"decay", num(std::pow(cubu_contraction(c.m, c.M, h), static_cast<double>(n)) * w0)},
               {"bias", num(cubu_bias(c.M, c.M1, c.kappa(), c.p, h))}};
  j["cbaoab"] = terms_json(cbaoab_bound_terms(c.m, c.M, c.M1, c.p, gamma, h, n, w0));
  if (sg) {
    j["sg_cubu"] = terms_json(sg_cubu_bound_terms(c.m, c.M, c.L, c.sigma1, c.sigma2, c.p, gamma, h, n, w0));
    const SgCklmcConstants k = sg_cklmc_constants(c.m, c.M, gamma, c.sigma1, c.L);
    const Vector zero = Vector::Zero(u.dim());
    const double ev0 = eval_penalized(u, zero) + 0.5 * c.p;
    const double cv = sg_cklmc_cv(ev0, k.tau, c.p, c.m, eval(u.base(), zero), c.M, gamma);
    Json kl = terms_json(sg_cklmc_bound_terms(c.m, c.M, c.L, c.sigma1, c.p, gamma, h, n, cv, k.tau, w0));
    kl["tau"] = num(k.tau);
    kl["K1"] = num(k.k1);
    kl["h_max"] = num(k.h_max);
    kl["C_V"] = num(cv);
    kl["admissible"] = k.admissible && h < k.h_max;
    if (!k.admissible) kl["reason"] = k.reason;
    else if (!(h < k.h_max)) kl["reason"] = "h above the step-size window";
    j["sg_cklmc"] = kl;
    const SgCbaoabConstants b = sg_cbaoab_constants(c.m, c.M, c.M1, gamma, h, c.sigma1, c.p, c.p);
    Json bj = terms_json(sg_cbaoab_bound_terms(b, c.m, gamma, h, n, w0));
    bj["constants"] = {{"rho", num(b.rho)},       {"C_bias", num(b.c_bias)},       {"C_V", num(b.c_v)},
                       {"D_V", num(b.d_v)},       {"lambda_fg", num(b.lambda_fg)}, {"C_fg", num(b.c_fg)},
                       {"lambda_sg", num(b.lambda_sg)}, {"C_sg", num(b.c_sg)},     {"C_mom", num(b.c_mom)},
                       {"K_noise", num(b.k_noise)}, {"noise_small", b.noise_small}};
    j["sg_cbaoab"] = bj;
  }
  if (c.p <= 2.0) j["note"] = "the bounds assume p > 2; values are literal evaluations";
  return j;
}

// ---------------------------------------------------------------------------

Json ExperimentReport::to_json() const {
  Json j;
  j["config"] = pkld::to_json(config);
  j["gamma"] = gamma;
  Json results_json = Json::object();
  for (const auto& r : results) {
    Json rj;
    rj["metrics"] = r.metrics;
    rj["samples"] = r.samples.size();
    rj["wall_seconds"] = r.wall_seconds;
    rj["gradient_calls"] = r.gradient_calls;
    Json digest = Json::array();
    for (const auto& t : r.traces) {
      const KineticState& last = t.states.back();
      digest.push_back({{"seed", t.seed}, {"states", t.states.size()}, {"final_theta", vector_json(last.theta)}});
    }
    rj["traces"] = digest;
    results_json[scheme_name(r.scheme)] = rj;
  }
  j["results"] = results_json;
  j["bounds"] = bounds;
  return j;
}

namespace {

SampleSet stride_subsample(const SampleSet& s, std::size_t cap) {
  if (s.size() <= cap) return s;
  SampleSet out;
  out.reserve(cap);
  for (std::size_t i = 0; i < cap; ++i) out.push_back(s[i * s.size() / cap]);
  return out;
}

std::string trace_csv(const Trace& t) {
  std::ostringstream os;
  write_trace_csv(t, os);
  return os.str();
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const Problem pr = build_problem(config);
  const PenalizedPotential& u = pr.u;
  const StochasticGradient* sg = pr.sg ? &*pr.sg : nullptr;
  const ConstraintSet& set = *u.set();

  ExperimentReport report;
  report.config = config;
  report.gamma = pr.gamma;
  report.bounds = bounds_report(config);

  IntegratorConfig ic;
  ic.mode = config.gradient.mode;
  ic.h = config.h;
  ic.gamma = pr.gamma;
  ic.schedule = config.schedule;

  auto wants = [&](const char* m) { return std::find(config.metrics.begin(), config.metrics.end(), m) != config.metrics.end(); };

  // Ground truth for the Wasserstein metrics, shared by all schemes.
  std::optional<SampleSet> truth;
  std::string truth_missing;
  if (wants("w1") || wants("w2")) {
    if (!u.base().is_quadratic()) {
      truth_missing = "no exact sampler for a non-Gaussian target";
    } else {
      const long per_seed = std::max(0L, config.iterations - config.burn_in);
      const std::size_t pooled = static_cast<std::size_t>(per_seed) * config.seeds.size();
      const std::size_t count = std::min(pooled, std::min(config.reference_samples, kAssignmentCap));
      if (count > 0) {
        Rng rng = make_stream(config.seeds.front(), 0x7275746855ULL);
        truth = rejection_sample_target(u.base(), set, count, rng).samples;
      } else {
        truth_missing = "no post-burn-in samples";
      }
    }
  }

  for (Scheme s : config.schemes) {
    ic.scheme = s;
    SchemeResult r;
    r.scheme = s;
    r.traces.resize(config.seeds.size());
    std::exception_ptr failure;
    std::string failed_seed;
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < config.seeds.size(); ++i) {
      try {
        const std::uint64_t seed = config.seeds[i];
        r.traces[i] = run_chain(default_initial(u.dim(), seed), config.iterations, ic, u, sg, seed);
      } catch (...) {
#pragma omp critical(pkld_experiment_failure)
        if (!failure) {
          failure = std::current_exception();
          failed_seed = std::to_string(config.seeds[i]);
        }
      }
    }
    if (failure) {
      try {
        std::rethrow_exception(failure);
      } catch (const std::exception& e) {
        throw Error(scheme_name(s) + " seed " + failed_seed + ": " + e.what());
      }
    }
    for (const auto& t : r.traces) {
      r.wall_seconds += t.wall_seconds;
      r.gradient_calls += t.gradient_calls;
      for (std::size_t k = static_cast<std::size_t>(config.burn_in) + 1; k < t.states.size(); ++k) r.samples.push_back(t.states[k].theta);
    }

    for (const auto& m : config.metrics) {
      if (r.samples.empty()) {
        r.metrics[m] = {{"unavailable", "no post-burn-in samples"}};
      } else if (m == "inside_fraction") {
        r.metrics[m] = inside_fraction(r.samples, set);
      } else if (m == "mean") {
        Vector mean = Vector::Zero(u.dim());
        for (const auto& x : r.samples) mean += x;
        r.metrics[m] = vector_json(mean / static_cast<double>(r.samples.size()));
      } else if (!truth) {
        r.metrics[m] = {{"unavailable", truth_missing}};
      } else {
        const SampleSet sub = stride_subsample(r.samples, truth->size());
        r.metrics[m] = {{"value", wasserstein(sub, *truth, m == "w1" ? 1 : 2)}, {"samples", sub.size()}};
      }
    }
    report.results.push_back(std::move(r));
  }

  if (!config.out.empty()) {
    const fs::path dir(config.out);
    fs::create_directories(dir);
    for (const auto& r : report.results) {
      for (const auto& t : r.traces) {
        write_atomic(dir / ("trace_" + scheme_name(r.scheme) + "_seed" + std::to_string(t.seed) + ".csv"), trace_csv(t));
      }
      if (u.dim() == 2) emit_scatter(r.samples, set, dir / ("scatter_" + scheme_name(r.scheme) + ".svg"));
    }
    write_atomic(dir / "report.json", report.to_json().dump(2) + "\n");
  }
  return report;
}

// ---------------------------------------------------------------------------

std::string scatter_svg(const SampleSet& samples, const ConstraintSet& set) {
  if (set.dim() != 2) throw DimensionError("scatter: only two-dimensional sets are supported");
  for (const auto& x : samples) require_dim(2, x.size(), "scatter");
  const double size = 480.0;
  const double margin = 20.0;
  double extent = set.outer_radius();
  for (const auto& x : samples) extent = std::max(extent, std::min(x.cwiseAbs().maxCoeff(), 5.0 * set.outer_radius()));
  extent *= 1.2;

  char buf[160];
  auto px = [&](double x) { return margin + (x + extent) / (2.0 * extent) * size; };
  auto py = [&](double y) { return margin + (extent - y) / (2.0 * extent) * size; };

  std::string out;
  const double full = size + 2.0 * margin;
  std::snprintf(buf, sizeof buf, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                full, full, full, full);
  out += buf;
  std::snprintf(buf, sizeof buf, "<rect x=\"%.0f\" y=\"%.0f\" width=\"%.0f\" height=\"%.0f\" fill=\"white\" stroke=\"black\"/>\n",
                margin, margin, size, size);
  out += buf;
  out += "<polygon fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" points=\"";
  bool first = true;
  for (const auto& v : boundary_polyline(set)) {
    std::snprintf(buf, sizeof buf, "%s%.3f,%.3f", first ? "" : " ", px(v[0]), py(v[1]));
    out += buf;
    first = false;
  }
  out += "\"/>\n<g fill=\"#1f77b4\" fill-opacity=\"0.5\">\n";
  for (const auto& x : samples) {
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"1.5\"/>\n", px(x[0]), py(x[1]));
    out += buf;
  }
  out += "</g>\n</svg>\n";
  return out;
}

void emit_scatter(const SampleSet& samples, const ConstraintSet& set, const fs::path& path) {
  write_atomic(path, scatter_svg(samples, set));
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename '" + tmp.string() + "': " + ec.message());
  }
}

SampleSet read_samples_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open samples '" + path.string() + "'");
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  auto numeric = [](const std::string& s) {
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end != s.c_str();
  };
  std::string line;
  std::vector<std::size_t> cols;
  SampleSet out;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (!header_seen) {
      header_seen = true;
      if (!std::all_of(cells.begin(), cells.end(), numeric)) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
          if (cells[i].rfind("theta_", 0) == 0) cols.push_back(i);
        }
        if (cols.empty()) {
          for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i] != "step") cols.push_back(i);
          }
        }
        continue;
      }
      for (std::size_t i = 0; i < cells.size(); ++i) cols.push_back(i);
    }
    Vector x(static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] >= cells.size()) throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": missing column");
      x[static_cast<Eigen::Index>(k)] = std::stod(cells[cols[k]]);
    }
    out.push_back(x);
  }
  if (out.empty()) throw InvalidArgument(path.string() + ": no samples");
  return out;
}

}  // namespace pkld

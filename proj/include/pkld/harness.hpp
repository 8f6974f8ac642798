#pragma once

// Experiment configuration, presets, execution and result persistence.

#include "pkld/bounds.hpp"
#include "pkld/constraints.hpp"
#include "pkld/integrators.hpp"
#include "pkld/metrics.hpp"
#include "pkld/potentials.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pkld {

using Json = nlohmann::json;

struct TargetSpec {
  std::string type = "gaussian";  // "gaussian" or "regression"
  Matrix precision;               // gaussian
  long n = 0;                     // regression
  Vector theta_star;
  double noise_var = 0.0;
  std::uint64_t data_seed = 0;
  std::string csv;                // regression data file instead of generated data
};

struct GradientSpec {
  GradientMode mode = GradientMode::full;
  std::optional<long> batch;      // minibatch on a dataset
  std::optional<double> sigma1;   // additive noise for dataset-free targets
  Sampling sampling = Sampling::without_replacement;
};

struct ExperimentConfig {
  std::string name;
  TargetSpec target;
  Json constraint;
  Json projection = "euclidean";
  double lambda = 0.1;
  std::vector<Scheme> schemes{Scheme::cubu};
  GradientSpec gradient;
  std::optional<double> gamma = 2.0;  // empty: critical damping 2√m
  double h = 0.1;
  std::optional<StepSchedule> schedule;
  long iterations = 1000;
  long burn_in = 0;
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::string> metrics{"inside_fraction", "mean"};
  std::string out;
  std::size_t reference_samples = 2000;  // cap for Wasserstein comparisons
};

Json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

ConstraintSet parse_constraint(const Json& j, Eigen::Index dim);
ProjectionKind parse_projection(const Json& j);
Potential build_potential(const TargetSpec& t);

std::vector<std::string> preset_names();
/// circle, triangle, square or lasso.
ExperimentConfig preset(const std::string& name);

/// Known metric names: inside_fraction, mean, w1, w2, bounds.
std::vector<std::string> metric_names();

/// The objects an experiment runs on.
struct Problem {
  PenalizedPotential u;
  std::optional<StochasticGradient> sg;
  double gamma;
};
Problem build_problem(const ExperimentConfig& c);

struct SchemeResult {
  Scheme scheme = Scheme::cubu;
  SampleSet samples;  // pooled post-burn-in positions over seeds
  std::vector<Trace> traces;
  Json metrics = Json::object();
  double wall_seconds = 0.0;
  long gradient_calls = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  double gamma = 0.0;
  std::vector<SchemeResult> results;
  Json bounds = Json::object();

  Json to_json() const;
};

/// Runs every scheme and seed, computes the requested metrics and, when
/// `config.out` is set, writes traces, report.json and SVG scatters there.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Constants, admissibility and bound terms for a problem (JSON; non-finite
/// values are written as null).
Json bounds_report(const ExperimentConfig& config);

/// Deterministic SVG scatter of two-dimensional points over the set boundary.
std::string scatter_svg(const SampleSet& samples, const ConstraintSet& set);
void emit_scatter(const SampleSet& samples, const ConstraintSet& set, const std::filesystem::path& path);

/// Write-then-rename so readers never see a partial file.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Points from a CSV file: theta_* columns when present, else every column.
SampleSet read_samples_csv(const std::filesystem::path& path);

}  // namespace pkld

// Command-line front end: sample, experiment, order-test, bounds, wasserstein.

#include "pkld/harness.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

using namespace pkld;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& x : split_list(s)) out.push_back(std::stod(x));
  return out;
}

ExperimentConfig resolve_config(const std::string& config_path, const std::string& preset_name) {
  if (!config_path.empty() && !preset_name.empty()) throw InvalidArgument("give either --config or --preset, not both");
  if (!config_path.empty()) return load_config(config_path);
  return preset(preset_name.empty() ? "circle" : preset_name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized kinetic Langevin samplers for constrained targets"};
  app.require_subcommand(1);

  std::string config_path, preset_name, out, schemes, gradient, seeds_arg, scheme_arg;
  long iterations = -1;
  double h = -1.0, gamma = -1.0, lambda = -1.0;
  std::uint64_t seed = 0;

  auto* sample = app.add_subcommand("sample", "Run one chain and write its trace as CSV");
  sample->add_option("--config", config_path, "Experiment config (JSON)");
  sample->add_option("--preset", preset_name, "Preset name")->check(CLI::IsMember(preset_names()));
  sample->add_option("--scheme", scheme_arg, "cubu, cbaoab or cklmc (default: first scheme of the config)");
  sample->add_option("--gradient", gradient, "full or stochastic")->check(CLI::IsMember({"full", "stochastic"}));
  sample->add_option("--seed", seed, "Chain seed");
  sample->add_option("--iterations", iterations, "Number of steps");
  sample->add_option("--step", h, "Step size");
  sample->add_option("--gamma", gamma, "Friction");
  sample->add_option("--lambda", lambda, "Penalty scale");
  sample->add_option("--out", out, "Output CSV (default: stdout)");

  std::string exp_config, exp_preset, exp_out, exp_schemes, exp_gradient;
  int exp_seeds = 0;
  auto* experiment = app.add_subcommand("experiment", "Run a preset or config and write a report");
  experiment->add_option("--config", exp_config, "Experiment config (JSON)");
  experiment->add_option("--preset", exp_preset, "Preset name")->check(CLI::IsMember(preset_names()));
  experiment->add_option("--schemes", exp_schemes, "Comma-separated scheme list");
  experiment->add_option("--gradient", exp_gradient, "full or stochastic")->check(CLI::IsMember({"full", "stochastic"}));
  experiment->add_option("--seeds", exp_seeds, "Use seeds 0..N-1")->check(CLI::PositiveNumber);
  experiment->add_option("--out", exp_out, "Output directory");

  std::string order_kind = "weak", order_scheme = "cubu", order_hs = "0.4,0.2,0.1,0.05";
  double order_gamma = 2.0;
  int order_paths = 1000;
  std::string observable = "joint";
  auto* order = app.add_subcommand("order-test", "Weak or strong order ladder on the 1-D standard Gaussian");
  order->add_option("--kind", order_kind, "weak or strong")->check(CLI::IsMember({"weak", "strong"}));
  order->add_option("--scheme", order_scheme, "cubu, cbaoab or cklmc");
  order->add_option("--gamma", order_gamma, "Friction");
  order->add_option("--steps", order_hs, "Comma-separated step sizes");
  order->add_option("--paths", order_paths, "Brownian paths (strong)")->check(CLI::PositiveNumber);
  order->add_option("--observable", observable, "joint or position (weak)")->check(CLI::IsMember({"joint", "position"}));

  std::string b_config, b_preset, b_schedule;
  double b_eps = 0.1, b_p = 3.0;
  auto* bounds = app.add_subcommand("bounds", "Print theoretical constants as JSON");
  bounds->add_option("--config", b_config, "Experiment config (JSON)");
  bounds->add_option("--preset", b_preset, "Preset name")->check(CLI::IsMember(preset_names()));
  bounds->add_option("--schedule", b_schedule, "Schedule id (3.1a ... 3.5b) instead of a config")->check(CLI::IsMember(schedule_ids()));
  bounds->add_option("--epsilon", b_eps, "Accuracy for --schedule");
  bounds->add_option("--p", b_p, "Dimension for --schedule");

  std::string wa, wb;
  int wq = 2;
  auto* wass = app.add_subcommand("wasserstein", "Exact empirical W_q between two CSV sample files");
  wass->add_option("--a", wa, "First sample file")->required()->check(CLI::ExistingFile);
  wass->add_option("--b", wb, "Second sample file")->required()->check(CLI::ExistingFile);
  wass->add_option("--q", wq, "Order (1 or 2)")->check(CLI::IsMember({1, 2}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sample) {
      ExperimentConfig c = resolve_config(config_path, preset_name);
      if (!gradient.empty()) c.gradient.mode = gradient == "full" ? GradientMode::full : GradientMode::stochastic;
      if (iterations >= 0) c.iterations = iterations;
      if (h > 0) c.h = h;
      if (gamma > 0) c.gamma = gamma;
      if (lambda > 0) c.lambda = lambda;
      const Problem pr = build_problem(c);
      IntegratorConfig ic;
      ic.scheme = scheme_arg.empty() ? c.schemes.front() : parse_scheme(scheme_arg);
      ic.mode = c.gradient.mode;
      ic.h = c.h;
      ic.gamma = pr.gamma;
      ic.schedule = c.schedule;
      const Trace t = run_chain(default_initial(pr.u.dim(), seed), c.iterations, ic, pr.u, pr.sg ? &*pr.sg : nullptr, seed);
      if (out.empty()) {
        write_trace_csv(t, std::cout);
      } else {
        std::ostringstream os;
        write_trace_csv(t, os);
        write_atomic(out, os.str());
      }
    } else if (*experiment) {
      ExperimentConfig c = resolve_config(exp_config, exp_preset);
      if (!exp_schemes.empty()) {
        c.schemes.clear();
        for (const auto& s : split_list(exp_schemes)) c.schemes.push_back(parse_scheme(s));
      }
      if (!exp_gradient.empty()) c.gradient.mode = exp_gradient == "full" ? GradientMode::full : GradientMode::stochastic;
      if (exp_seeds > 0) {
        c.seeds.clear();
        for (int i = 0; i < exp_seeds; ++i) c.seeds.push_back(static_cast<std::uint64_t>(i));
      }
      if (!exp_out.empty()) c.out = exp_out;
      const ExperimentReport r = run_experiment(c);
      Json summary;
      summary["gamma"] = r.gamma;
      for (const auto& res : r.results) summary["results"][scheme_name(res.scheme)] = res.metrics;
      if (!c.out.empty()) summary["out"] = c.out;
      std::cout << summary.dump(2) << '\n';
    } else if (*order) {
      const Scheme s = parse_scheme(order_scheme);
      const std::vector<double> hs = parse_doubles(order_hs);
      OrderFit fit;
      if (order_kind == "weak") {
        fit = weak_bias_ladder(s, 1.0, order_gamma, hs,
                               observable == "position" ? BiasObservable::position : BiasObservable::joint);
      } else {
        StrongOptions opt;
        opt.paths = order_paths;
        fit = strong_error_ladder(s, PenalizedPotential(Potential::isotropic(1)), order_gamma, hs, opt);
      }
      Json j{{"kind", order_kind}, {"scheme", scheme_name(s)}, {"steps", fit.steps}, {"errors", fit.errors},
             {"unstable_steps", fit.unstable_steps}, {"slope", fit.slope}, {"intercept", fit.intercept},
             {"residual", fit.residual}};
      std::cout << j.dump(2) << '\n';
    } else if (*bounds) {
      if (!b_schedule.empty()) {
        const Schedule s = schedule(b_schedule, b_eps, b_p);
        Json j{{"id", s.id}, {"metric", s.metric == Metric::w1 ? "W1" : "W2"}, {"epsilon", s.epsilon}, {"p", s.p},
               {"h", s.h}, {"lambda", s.lambda}, {"n", s.n}, {"iterations", s.iterations},
               {"batch", s.batch ? Json(*s.batch) : Json(nullptr)}, {"annotation", s.annotation}};
        std::cout << j.dump(2) << '\n';
      } else {
        std::cout << bounds_report(resolve_config(b_config, b_preset)).dump(2) << '\n';
      }
    } else if (*wass) {
      const double w = wasserstein(read_samples_csv(wa), read_samples_csv(wb), wq);
      std::cout.precision(17);
      std::cout << w << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << Json{{"error", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}

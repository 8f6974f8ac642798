#include "pkld/harness.hpp"

#include "doctest.h"

#include <fstream>
#include <regex>
#include <sstream>

using namespace pkld;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pkld_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig quick(const std::string& name) {
  ExperimentConfig c = preset(name);
  c.iterations = 200;
  c.seeds = {0, 1};
  return c;
}

}  // namespace

TEST_CASE("presets") {
  const ExperimentConfig circle = preset("circle");
  const ConstraintSet set = parse_constraint(circle.constraint, 2);
  REQUIRE(std::holds_alternative<Ball>(set.shape()));
  CHECK(std::get<Ball>(set.shape()).radius == 0.5);
  CHECK(preset("lasso").iterations == 8000);
  CHECK(preset("lasso").lambda == 0.001);
  CHECK(preset("triangle").constraint.at("type") == "polytope");
  CHECK_THROWS_AS(preset("hexagon"), InvalidArgument);
}

TEST_CASE("config JSON round trip and validation") {
  for (const auto& name : preset_names()) {
    const ExperimentConfig c = preset(name);
    const Json j = to_json(c);
    CHECK(to_json(config_from_json(j)) == j);
  }
  Json j = to_json(preset("circle"));
  j["unknown_key"] = 1;
  CHECK_THROWS(config_from_json(j));
  j = to_json(preset("circle"));
  j["metrics"] = {"w2", "w2"};
  CHECK_THROWS(config_from_json(j));
  j["metrics"] = {"nonsense"};
  CHECK_THROWS(config_from_json(j));
  j = to_json(preset("circle"));
  j["seeds"] = 3;
  CHECK(config_from_json(j).seeds == std::vector<std::uint64_t>{0, 1, 2});
}

TEST_CASE("atomic write leaves no temporary file") {
  const fs::path dir = scratch("atomic");
  write_atomic(dir / "a.txt", "first");
  write_atomic(dir / "a.txt", "second");
  CHECK(slurp(dir / "a.txt") == "second");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  CHECK(files == 1);
}

TEST_CASE("scatter SVG draws the triangle and maps the origin inside it") {
  const ExperimentConfig c = preset("triangle");
  const ConstraintSet set = parse_constraint(c.constraint, 2);
  const std::string svg = scatter_svg({Vector::Zero(2)}, set);
  const std::smatch m = [&] {
    std::smatch r;
    std::regex_search(svg, r, std::regex("points=\"([^\"]*)\""));
    return r;
  }();
  REQUIRE(m.size() == 2);
  std::vector<Vector> poly;
  std::stringstream ss(m[1].str());
  std::string pt;
  while (ss >> pt) {
    const auto comma = pt.find(',');
    poly.push_back((Vector(2) << std::stod(pt.substr(0, comma)), std::stod(pt.substr(comma + 1))).finished());
  }
  CHECK(poly.size() == 3);
  std::smatch cm;
  REQUIRE(std::regex_search(svg, cm, std::regex("cx=\"([0-9.]+)\" cy=\"([0-9.]+)\"")));
  const Vector o = (Vector(2) << std::stod(cm[1].str()), std::stod(cm[2].str())).finished();
  // Same-sign cross products: the origin lies inside the drawn polygon.
  int sign = 0;
  bool inside = true;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vector e = poly[(i + 1) % poly.size()] - poly[i], w = o - poly[i];
    const int s = e[0] * w[1] - e[1] * w[0] > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    inside = inside && s == sign;
  }
  CHECK(inside);
  CHECK(scatter_svg({Vector::Zero(2)}, set) == svg);
}

TEST_CASE("experiment run: report, traces and byte-identical reruns") {
  const fs::path d1 = scratch("run1"), d2 = scratch("run2");
  ExperimentConfig c = quick("circle");
  c.out = d1.string();
  const ExperimentReport r = run_experiment(c);
  c.out = d2.string();
  run_experiment(c);
  for (const char* f : {"trace_cubu_seed0.csv", "trace_cklmc_seed1.csv", "trace_cbaoab_seed0.csv"}) {
    REQUIRE(fs::exists(d1 / f));
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  }
  CHECK(fs::exists(d1 / "scatter_cubu.svg"));
  const Json rep = Json::parse(slurp(d1 / "report.json"));
  for (const char* s : {"cubu", "cbaoab", "cklmc"}) {
    const Json& m = rep.at("results").at(s).at("metrics");
    CHECK(m.at("inside_fraction").get<double>() >= 0.0);
    CHECK(m.at("mean").size() == 2);
    CHECK(m.at("w2").at("value").get<double>() > 0.0);
  }
  for (const char* k : {"constants", "lambda_admissible", "surrogate_gap", "cubu", "cbaoab"}) CHECK(rep.at("bounds").contains(k));
  CHECK(r.results.size() == 3);
  CHECK(r.results[0].samples.size() == 400);
  // Trace CSV reads back as positions.
  const SampleSet back = read_samples_csv(d1 / "trace_cubu_seed0.csv");
  CHECK(back.size() == 201);
  CHECK(back[0].size() == 2);
}

TEST_CASE("n = 0 gives a report with unavailable metrics") {
  ExperimentConfig c = quick("square");
  c.iterations = 0;
  const ExperimentReport r = run_experiment(c);
  for (const auto& s : r.results) CHECK(s.metrics.at("inside_fraction").contains("unavailable"));
}

TEST_CASE("stochastic gradient runs and bounds report") {
  ExperimentConfig c = quick("triangle");
  c.gradient.mode = GradientMode::stochastic;
  c.metrics = {"inside_fraction"};
  CHECK(run_experiment(c).results.size() == 3);
  const Json b = bounds_report(c);
  for (const char* k : {"sg_cubu", "sg_cklmc", "sg_cbaoab", "note"}) CHECK(b.contains(k));
  const Json lasso = bounds_report(preset("lasso"));
  CHECK(lasso.at("constants").at("M1_lambda").is_null());
  CHECK(lasso.at("constants").contains("M1_lambda_note"));
}

TEST_CASE("scatter SVG without points and for the wrong dimension") {
  const ConstraintSet set = parse_constraint(preset("circle").constraint, 2);
  const std::string svg = scatter_svg({}, set);
  CHECK(svg.find("<polygon") != std::string::npos);
  CHECK(svg.find("<circle") == std::string::npos);
  CHECK_THROWS_AS(scatter_svg({}, ConstraintSet::ball(3, 1)), DimensionError);
  const auto vs = vertices(parse_constraint(preset("triangle").constraint, 2));
  REQUIRE(vs.size() == 3);
  std::vector<std::pair<double, double>> got;
  for (const auto& v : vs) got.emplace_back(std::round(v[0] * 1e12) / 1e12, std::round(v[1] * 1e12) / 1e12);
  std::sort(got.begin(), got.end());
  CHECK(got == std::vector<std::pair<double, double>>{{-0.3, -0.3}, {-0.3, 0.9}, {0.9, -0.3}});
}

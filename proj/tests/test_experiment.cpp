#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "renewal/errors.hpp"
#include "renewal/experiment.hpp"

using namespace renewal;
namespace fs = std::filesystem;

namespace {

RunConfig small_exp_config() {
  RunConfig c;
  c.law = {{"family", "exponential"}, {"params", {{"rate", 1.0}}}};
  c.b_prime = 0.1;
  c.threshold_mode = ThresholdMode::fixed;
  c.threshold = 4.0;
  c.ell = {1.0};
  c.beta = std::vector<double>{0.1};
  c.replicas = 3000;
  c.lorden_replicas = 1000;
  return c;
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("renewal_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

// The number printed after "R = "; R comes from numeric moments, so it is only close to its exact value.
double quoted_r(const std::string& text) {
  const std::size_t at = text.find("R = ");
  REQUIRE(at != std::string::npos);
  return std::stod(text.substr(at + 4));
}

// (t, analytic_bound) pairs of a tv_curve.csv body.
std::vector<std::pair<double, double>> csv_bounds(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    const std::size_t comma = line.find(',');
    rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  return rows;
}

}  // namespace

TEST_CASE("bounds for the exponential reference") {
  const BoundReport b = compute_bounds(small_exp_config());
  CHECK(b.params.lorden_ratio == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(b.params.q == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(b.poly.at(0).value == doctest::Approx(10.0).epsilon(1e-8));
  CHECK(b.beta_search->beta0 == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(b.exp.at(0).value == doctest::Approx(9000.0 / 2916.0).epsilon(1e-8));
  CHECK(b.tv_curves.size() == 2);
  CHECK_FALSE(b.example.has_value());
}

TEST_CASE("auto values are resolved and recorded") {
  RunConfig c = small_exp_config();
  c.threshold_mode = ThresholdMode::automatic;
  c.beta.reset();
  const BoundReport b = compute_bounds(c);
  CHECK(b.config.threshold_mode == ThresholdMode::fixed);
  CHECK(b.config.threshold == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(b.threshold_source == ThresholdMode::automatic);
  CHECK(b.beta_auto);
  REQUIRE(b.config.beta->size() == 1);
  CHECK(b.config.beta->front() == doctest::Approx(0.25).epsilon(1e-8));
  const nlohmann::json doc = to_json(b);
  CHECK(doc["resolved_from"]["theta"] == "auto");
  CHECK(doc["config"]["coupling"]["theta"].is_number());
}

TEST_CASE("inadmissible parameters name the field") {
  RunConfig c = small_exp_config();
  c.threshold = 1.5;
  try {
    compute_bounds(c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "coupling.theta");
    CHECK(quoted_r(e.what()) == doctest::Approx(2.0).epsilon(1e-9));
  }
  c = small_exp_config();
  c.beta = std::vector<double>{0.7};
  CHECK_THROWS_AS(compute_bounds(c), ConfigError);
  c = small_exp_config();
  c.law = {{"family", "gamma"}};
  CHECK_THROWS_AS(compute_bounds(c), ConfigError);
  // Zero replicas is rejected when the config is read.
  CHECK_THROWS_AS(config_from_json({{"law", c.law}, {"simulation", {{"replicas", 0}}}}), ConfigError);
}

TEST_CASE("experiment verdicts and determinism") {
  const RunConfig c = small_exp_config();
  const ExperimentReport a = run_experiment(c);
  const ExperimentReport b = run_experiment(c);
  CHECK(all_gating_pass(a.verdicts));
  CHECK(to_json(a.bounds).dump() == to_json(b.bounds).dump());
  CHECK(to_json(a.sim, a.verdicts).dump() == to_json(b.sim, b.verdicts).dump());
  CHECK(tv_curve_csv(a.bounds, &a.sim) == tv_curve_csv(b.bounds, &b.sim));
  CHECK(tau_csv(a.sim) == tau_csv(b.sim));
  CHECK(a.sim.tau_samples.size() == 3000);
  bool has_diagnostic = false;
  for (const Verdict& v : a.verdicts) has_diagnostic = has_diagnostic || !v.gating;
  CHECK(has_diagnostic);
  CHECK_FALSE(all_gating_pass({{"x", 2.0, 0.0, 1.0, 0.0, false, true}}));
  CHECK(all_gating_pass({{"x", 2.0, 0.0, 1.0, 0.0, false, false}}));
}

TEST_CASE("report formats and re-validation") {
  RunConfig c = small_exp_config();
  c.tv_column = TvColumn::poly;
  const BoundReport b = compute_bounds(c);
  const SimReport s = run_simulation(b);
  const std::string csv = tv_curve_csv(b, &s);
  CHECK(csv.rfind("t,analytic_bound,empirical_tv\n", 0) == 0);
  for (const auto& [t, bound] : csv_bounds(csv)) CHECK(bound == doctest::Approx(std::min(1.0, 10.0 / t)).epsilon(1e-9));
  CHECK(tau_csv(s).rfind("tau\n", 0) == 0);
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(check_report("tv_curve", csv).empty());
  CHECK(check_report("bounds", to_json(b).dump()).empty());
  CHECK(check_report("sim", to_json(s).dump()).empty());

  nlohmann::json broken = to_json(b);
  broken["coupling"]["q"] = 0.9;
  CHECK_FALSE(check_report("bounds", broken.dump()).empty());
  broken = to_json(b);
  broken["poly"][0]["value"] = 1.0;
  CHECK_FALSE(check_report("bounds", broken.dump()).empty());
  CHECK_FALSE(check_report("sim", to_json(b).dump()).empty());
  CHECK_FALSE(check_report("bounds", "{").empty());
  CHECK_FALSE(check_report("tv_curve", "t,bound\n1,2\n").empty());
  CHECK_FALSE(check_report("tv_curve", "t,analytic_bound,empirical_tv\n1,0.5,\n2,0.7,\n").empty());
}

TEST_CASE("command line: exit codes and outputs") {
  const fs::path dir = scratch("cli");
  const fs::path log = dir / "log.txt";
  const std::string cfg = std::string(CONFIG_DIR) + "/";

  SUBCASE("bounds on a threshold below R exits 2 naming Theta and R") {
    CHECK(run_cli("bounds --config " + cfg + "bad_theta.toml --out " + dir.string(), log) == 2);
    const std::string text = read(log);
    CHECK(text.find("coupling.theta") != std::string::npos);
    CHECK(quoted_r(text) == doctest::Approx(2.0).epsilon(1e-9));
  }
  SUBCASE("unknown family exits 2") {
    write(dir / "bad.toml", "[law]\nfamily = \"pareto\"\n");
    CHECK(run_cli("bounds --config " + (dir / "bad.toml").string() + " --out " + dir.string(), log) == 2);
    CHECK(read(log).find("law.family") != std::string::npos);
  }
  SUBCASE("malformed config exits 2") {
    write(dir / "bad.toml", "[law\n");
    CHECK(run_cli("bounds --config " + (dir / "bad.toml").string(), log) == 2);
  }
  SUBCASE("tv-curve analytic column is min(1, 10 / t)") {
    write(dir / "tv.toml", R"(
[law]
family = "exponential"
[law.params]
rate = 1.0
[coupling]
theta = 4.0
[bounds]
ell = [1.0]
beta = [0.1]
tv_column = "poly"
[simulation]
replicas = 2000
[tv]
t_grid = [2.0, 5.0, 10.0, 20.0, 50.0]
)");
    CHECK(run_cli("tv-curve --config " + (dir / "tv.toml").string() + " --out " + dir.string(), log) == 0);
    const std::string csv = read(dir / "tv_curve.csv");
    CHECK(csv.rfind("t,analytic_bound,empirical_tv\n", 0) == 0);
    const auto rows = csv_bounds(csv);
    CHECK(rows.size() == 5);
    for (const auto& [t, bound] : rows) CHECK(bound == doctest::Approx(std::min(1.0, 10.0 / t)).epsilon(1e-9));
    CHECK(run_cli("--check " + (dir / "tv_curve.csv").string(), log) == 0);
  }
  SUBCASE("verify, seed override, output directory from the environment, --check") {
    write(dir / "v.toml", R"(
seed = 5
[law]
family = "exponential"
[law.params]
rate = 1.0
[initial]
b_prime = 0.1
[coupling]
theta = 4.0
[simulation]
replicas = 2000
tau_csv = true
[lorden]
replicas = 500
)");
    const fs::path out = dir / "env_out";
    const std::string env = "COUPLING_BOUNDS_OUT=" + out.string() + " ";
    const std::string cmd = env + CLI_PATH + " verify --config " + (dir / "v.toml").string() + " > " +
                            log.string() + " 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    for (const char* f : {"bounds.json", "sim.json", "tv_curve.csv", "tau.csv"}) CHECK(fs::exists(out / f));
    CHECK(nlohmann::json::parse(read(out / "sim.json"))["seed"] == 5);
    CHECK(run_cli("--check " + (out / "bounds.json").string(), log) == 0);
    CHECK(run_cli("--check " + (out / "sim.json").string(), log) == 0);

    CHECK(run_cli("simulate --config " + (dir / "v.toml").string() + " --seed 11 --out " + (dir / "s").string(), log) ==
          0);
    CHECK(nlohmann::json::parse(read(dir / "s" / "sim.json"))["seed"] == 11);
    CHECK(run_cli("bounds --config " + (dir / "v.toml").string() + " --out " + (dir / "b").string(), log) == 0);
    CHECK(read(dir / "b" / "bounds.json") == read(out / "bounds.json"));

    write(dir / "junk.json", "{\"kind\": \"bounds\"}");
    CHECK(run_cli("--check " + (dir / "junk.json").string(), log) == 2);
  }
  SUBCASE("no subcommand is a usage error") { CHECK(run_cli("", log) == 2); }
}

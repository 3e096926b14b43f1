#include <doctest.h>

#include <string>

#include "renewal/config.hpp"
#include "renewal/errors.hpp"

using namespace renewal;

namespace {

std::string field_of(const std::string& toml) {
  try {
    config_from_json(toml_to_json(toml));
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "none";
}

constexpr const char* kExp = R"(
[law]
family = "exponential"
[law.params]
rate = 1.0
)";

}  // namespace

TEST_CASE("TOML to JSON") {
  const nlohmann::json doc = toml_to_json(R"(
seed = 3
[tv]
t_grid = [1, 2.5]
[law.params]
knots = [[0.0, 1.0], [2, 3]]
flag = true
name = "x"
)");
  CHECK(doc["seed"] == 3);
  CHECK(doc["tv"]["t_grid"][1] == 2.5);
  CHECK(doc["law"]["params"]["knots"][1][0] == 2);
  CHECK(doc["law"]["params"]["flag"] == true);
  CHECK(doc["law"]["params"]["name"] == "x");
  CHECK_THROWS_AS(toml_to_json("seed = = 1"), ConfigError);
}

TEST_CASE("defaults") {
  const RunConfig c = config_from_json(toml_to_json(kExp));
  CHECK(c.law["family"] == "exponential");
  CHECK(c.threshold_mode == ThresholdMode::automatic);
  CHECK(c.ell == std::vector<double>{1.0});
  CHECK_FALSE(c.beta.has_value());
  CHECK(c.replicas == 100000);
  CHECK(c.tv_column == TvColumn::best);
  CHECK(c.b == 0.0);
}

TEST_CASE("explicit values") {
  const RunConfig c = config_from_json(toml_to_json(std::string(kExp) + R"(
[initial]
b = 0.5
b_prime = 2
[coupling]
theta = 4
[bounds]
ell = [1, 2.5]
beta = 0.1
rel_tol = 1e-9
tv_column = "exp"
[simulation]
replicas = 500
tau_csv = true
[tv]
t_grid = [5, 50]
bins = 20
[lorden]
horizon = 30.0
)"));
  CHECK(c.b == 0.5);
  CHECK(c.b_prime == 2.0);
  CHECK(c.threshold_mode == ThresholdMode::fixed);
  CHECK(c.threshold == 4.0);
  CHECK(c.ell == std::vector<double>{1.0, 2.5});
  CHECK(*c.beta == std::vector<double>{0.1});
  CHECK(c.quad.rel_tol == 1e-9);
  CHECK(c.tv_column == TvColumn::exp);
  CHECK(c.replicas == 500);
  CHECK(c.tau_csv);
  CHECK(c.tv_bins == 20);
  CHECK(*c.lorden_horizon == 30.0);
  CHECK(config_from_json(toml_to_json(std::string(kExp) + "[coupling]\ntheta = \"optimize\"\n")).threshold_mode ==
        ThresholdMode::optimize);
}

TEST_CASE("round trip through JSON") {
  const RunConfig c = config_from_json(toml_to_json("seed = 9\n" + std::string(kExp) + R"(
[coupling]
theta = 3.5
[bounds]
beta = [0.1, 0.2]
)"));
  const nlohmann::json once = config_to_json(c);
  CHECK(config_to_json(config_from_json(once)) == once);
  CHECK(once["seed"] == 9);
}

TEST_CASE("validation names the field") {
  CHECK(field_of("seed = 1") == "law");
  CHECK(field_of(std::string(kExp) + "[coupling]\ntheta = -1\n") == "coupling.theta");
  CHECK(field_of(std::string(kExp) + "[coupling]\ntheta = \"big\"\n") == "coupling.theta");
  CHECK(field_of(std::string(kExp) + "[simulation]\nreplicas = 0\n") == "simulation.replicas");
  CHECK(field_of(std::string(kExp) + "[simulation]\nreplicas = 2.5\n") == "simulation.replicas");
  CHECK(field_of(std::string(kExp) + "[bounds]\nell = []\n") == "bounds.ell");
  CHECK(field_of(std::string(kExp) + "[bounds]\nbeta = \"max\"\n") == "bounds.beta");
  CHECK(field_of(std::string(kExp) + "[tv]\nt_grid = [0, 1]\n") == "tv.t_grid");
  CHECK(field_of(std::string(kExp) + "[initial]\nb = -1\n") == "initial.b");
  CHECK(field_of(std::string(kExp) + "[initial]\nc = 1\n") == "initial.c");
  CHECK(field_of(std::string(kExp) + "[bounds]\ntv_column = \"both\"\n") == "bounds.tv_column");
  CHECK(field_of(std::string(kExp) + "[plot]\nx = 1\n") == "plot");
  CHECK(field_of("tv = 3\n" + std::string(kExp)) == "tv");
}

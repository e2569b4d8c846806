#include <doctest.h>

#include "spdope/config.hpp"
#include "spdope/errors.hpp"

using namespace spdope;
using nlohmann::json;

namespace {

std::string key_of(const json& doc) {
  try {
    RunConfig::from_json(doc);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

}  // namespace

TEST_CASE("toml subset") {
  const json doc = parse_toml(R"(
# comment
output = "runs/a"   # trailing comment
seed = 7

[grid]
N = 48
L = 1_6.0

[profile]
type = 'balls'
balls = [
  {center = [0, 0, 0], radius = 1.0, amplitude = 2.5},  # first
  { center = [3.0, 0, 0], radius = 0.5, amplitude = 1e-1 },
]

[minimize]
step = "backtracking"
params.e = 0.5
)");
  CHECK(doc["output"] == "runs/a");
  CHECK(doc["seed"] == 7);
  CHECK(doc["grid"]["N"].is_number_integer());
  CHECK(doc["grid"]["L"] == 16.0);
  CHECK(doc["profile"]["balls"].size() == 2);
  CHECK(doc["profile"]["balls"][1]["amplitude"] == 0.1);
  CHECK(doc["minimize"]["params"]["e"] == 0.5);

  CHECK_THROWS_AS(parse_toml("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("[x]\n[x]\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("[[x]]\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("a = \"open\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("a = 1 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("a = [1, 2\n"), ConfigError);
  try {
    parse_toml("a = 1\n\nb = @\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("overrides") {
  json doc = parse_toml("[params]\ne = 1.0\n");
  apply_override(doc, "params.e=0.25");
  apply_override(doc, "minimize.step=backtracking");
  apply_override(doc, "scan.mu=[1, 2.5]");
  apply_override(doc, "scan.warm_start=false");
  CHECK(doc["params"]["e"] == 0.25);
  CHECK(doc["minimize"]["step"] == "backtracking");
  CHECK(doc["scan"]["mu"][1] == 2.5);
  CHECK(doc["scan"]["warm_start"] == false);
  CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "params.e.x=1"), ConfigError);
}

TEST_CASE("run config validation names the key") {
  CHECK(key_of(json::object()).empty());
  CHECK(key_of(parse_toml("[params]\ne = -1.0\n")) == "params.e");
  CHECK(key_of(parse_toml("[params]\nq = 1.0\n")) == "params.q");
  CHECK(key_of(parse_toml("colour = 1\n")) == "colour");
  CHECK(key_of(parse_toml("[grid]\nN = 14\n")) == "grid");
  CHECK(key_of(parse_toml("[grid]\nN = 32.5\n")) == "grid.N");
  CHECK(key_of(parse_toml("[minimize]\ngrad_tol = 0\n")) == "minimize.grad_tol");
  CHECK(key_of(parse_toml("[minimize]\nstep = \"newton\"\n")) == "minimize.step");
  CHECK(key_of(parse_toml("[propagate]\ndt = \"fast\"\n")) == "propagate.dt");
  CHECK(key_of(parse_toml("[profile]\ntype = \"gaussian\"\nepsilon = 0.1\n")) == "profile");
  CHECK(key_of(parse_toml("[profile]\ntype = \"gaussian\"\nepsilon = -0.1\nalpha = 1\n")) == "profile");
  CHECK(key_of(parse_toml("[profile]\ntype = \"cube\"\n")) == "profile.type");
  CHECK(key_of(parse_toml("[profile]\ntype = \"balls\"\nballs = [{radius = 1, colour = 2}]\n")) ==
        "profile.balls[0].colour");
  CHECK(key_of(parse_toml("[subadd]\nfractions = [0.5, 1.0]\n")) == "subadd.fractions");
  CHECK(key_of(parse_toml("[stability]\nperturbation = \"kick\"\n")) == "stability.perturbation");
  CHECK(key_of(parse_toml("[evolve]\ninit = \"file\"\n")) == "evolve.path");
}

TEST_CASE("run config round trip and hash") {
  const json doc = parse_toml(R"(
seed = 11
[grid]
N = 24
L = 12.5
[params]
p = 2.25
e = 0.7
[profile]
type = "balls"
balls = [{center = [0.5, 0, -1], radius = 1.5, amplitude = 0.3}]
[minimize]
mu = 3.5
step = "backtracking"
[propagate]
dt = 0.002
T = 0.5
hartree = false
[scan]
mu = [1, 2, 3]
[mu_star]
bracket = [1.0, 9.0]
[stability]
perturbation = "boost"
direction = [0, 1, 0]
)");
  const RunConfig a = RunConfig::from_json(doc);
  CHECK(a.minimize.seed == 11);
  CHECK(a.grid.N == 24);
  CHECK(a.propagate.hartree == false);
  CHECK(a.stability.perturbation == PerturbationKind::boost);
  const RunConfig b = RunConfig::from_json(json::parse(a.to_json().dump()));
  CHECK(a.to_json() == b.to_json());
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 64);
  CHECK(b.profile == a.profile);

  json changed = doc;
  changed["params"]["e"] = 0.71;
  CHECK(RunConfig::from_json(changed).hash() != a.hash());
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

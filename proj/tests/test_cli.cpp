#include <doctest.h>

#include "experiment.hpp"

#include <sstream>

using namespace gbs;
using namespace gbs::tools;

namespace {

Json minimal(const std::string& kind) {
  return {{"schema_version", 1},
          {"solution", {{"name", "pulsating_circular_string"}, {"params", {{"R", 1.0}}}}},
          {"grid", {{"n_tau", 65}, {"n_sigma", 32}}},
          {"experiment", {{"kind", kind}}}};
}

void expect_config_error(const Json& j, const std::string& fragment) {
  CAPTURE(j.dump());
  try {
    parse_config(j);
    FAIL("accepted an invalid config");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(fragment) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("config defaults are resolved") {
  const auto c = parse_config(minimal("omega"));
  CHECK(c.grid.n_tau == 65);
  CHECK(c.grid.tau_min == 0.1);
  CHECK(c.action.tension == 1.0);
  CHECK(c.seed == 0);
  CHECK(c.options["pair"] == Json::array({"t", "R"}));
  CHECK(c.options["slices"] == Json::array({16, 32, 48}));
  CHECK(c.options["betas"] == Json::array({0.0}));
  for (const auto& kind : experiment_kinds()) CHECK_NOTHROW(parse_config(minimal(kind)));
}

TEST_CASE("resolved config parses back to itself") {
  for (const auto& kind : experiment_kinds()) {
    const auto c = parse_config(minimal(kind));
    CHECK(to_json(parse_config(to_json(c))) == to_json(c));
  }
}

TEST_CASE("invalid configs are rejected") {
  Json j = minimal("eom");
  j["extra"] = 1;
  expect_config_error(j, "unknown key 'config.extra'");

  j = minimal("eom");
  j["grid"]["n_tua"] = 3;
  expect_config_error(j, "grid.n_tua");

  j = minimal("eom");
  j["experiment"]["eps"] = 1e-4;
  expect_config_error(j, "experiment.eps");

  j = minimal("eom");
  j.erase("schema_version");
  expect_config_error(j, "schema_version");

  j = minimal("eom");
  j["schema_version"] = 2;
  expect_config_error(j, "schema_version");

  expect_config_error(minimal("spectrum"), "unknown experiment kind");

  j = minimal("omega");
  j["experiment"]["pair"] = {"t", "warp"};
  expect_config_error(j, "warp");

  j = minimal("omega");
  j["experiment"]["slices"] = {65};
  expect_config_error(j, "slices");

  j = minimal("eom");
  j["solution"]["params"] = {{"A", 1.0}};
  expect_config_error(j, "parameter");

  j = minimal("eom");
  j["solution"]["name"] = "torus";
  expect_config_error(j, "unknown solution");

  j = minimal("eom");
  j["action"] = {{"tension", 0.0}, {"gb_coupling", 0.0}};
  expect_config_error(j, "action");

  j = minimal("eom");
  j["grid"]["n_tau"] = 1.5;
  expect_config_error(j, "integer");

  j = minimal("gauge-check");
  j["experiment"]["maps"] = {{{"mode", 1}, {"phase", "tan"}}};
  expect_config_error(j, "phase");

  j = minimal("convergence");
  j["experiment"]["n_tau"] = {129, 65};
  expect_config_error(j, "increase");

  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("reports have the documented shape") {
  const Report r = run_experiment(parse_config(minimal("eom")));
  std::vector<std::string> keys;
  for (const auto& [k, v] : r.json.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"schema_version", "config", "results", "tolerances", "pass",
                                         "timings_ms"});
  CHECK(r.json["pass"] == r.pass);
  CHECK(r.pass);
  CHECK(r.json["timings_ms"].empty());
  CHECK(run_experiment(parse_config(minimal("eom")), true).json["timings_ms"].contains("total"));
  CHECK(r.json["config"] == to_json(parse_config(minimal("eom"))));
}

TEST_CASE("csv dumps list active points") {
  Json j = minimal("geometry");
  j["solution"] = {{"name", "rotating_folded_string"}, {"params", {{"A", 1.0}}}};
  j["grid"] = {{"n_tau", 17}, {"n_sigma", 16}, {"tau_min", 0.0}, {"tau_max", 1.0}};
  const Report r = run_experiment(parse_config(j));
  CHECK(r.csv.columns == std::vector<std::string>{"volume", "scalar_curvature", "mean_curvature[0]"});
  CHECK(r.csv.rows.size() == static_cast<std::size_t>(r.json["results"]["active_points"].get<long long>()));
  std::istringstream text(r.csv.render());
  std::string header;
  std::getline(text, header);
  CHECK(header == "tau,sigma,volume,scalar_curvature,mean_curvature[0]");
}

TEST_CASE("identical config and seed give identical reports") {
  for (const auto& kind : {"self-adjoint", "deform-check", "omega"}) {
    Json j = minimal(kind);
    j["seed"] = 5;
    if (std::string(kind) == "deform-check") j["experiment"]["seeds"] = 1;
    const auto c = parse_config(j);
    const Report a = run_experiment(c), b = run_experiment(c);
    CHECK(a.render() == b.render());
    CHECK(a.csv.render() == b.csv.render());
  }
  Json j = minimal("self-adjoint");
  j["seed"] = 5;
  const Report a = run_experiment(parse_config(j));
  j["seed"] = 6;
  const Report b = run_experiment(parse_config(j));
  CHECK(a.json["results"]["max_residual"] != b.json["results"]["max_residual"]);
}

TEST_CASE("tolerance failures and numerical failures") {
  Json j = minimal("eom");
  j["solution"] = {{"name", "static_cylinder"}, {"params", {{"R", 1.0}}}};
  const Report r = run_experiment(parse_config(j));
  CHECK(r.pass);
  CHECK(r.json["results"]["residual_asserted"] == false);

  j["experiment"] = {{"kind", "self-adjoint"}};
  CHECK_THROWS_AS(run_experiment(parse_config(j)), DynamicsError);

  Json k = minimal("omega");
  k["solution"] = {{"name", "spinning_string"}, {"params", {{"R", 1.0}}}};
  k["experiment"] = {{"kind", "omega"}, {"pair", {"R", "rotation_xz"}}, {"betas", {0.0, 0.5}},
                     {"min_beta_change", 1e-3}};
  const Report w = run_experiment(parse_config(k));
  CHECK_FALSE(w.pass);
  CHECK(exit_status(w) == 1);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "spinctl/config.hpp"
#include "spinctl/io.hpp"

using namespace spinctl;
using nlohmann::json;
using doctest::Approx;

namespace {

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

json minimal_oat_config() {
  return json::parse(R"({
    "model": {"n_particles": 10, "chi_T": 0.1},
    "scheme": "oat",
    "oat": {"tau_prep": 0.5, "theta0": 1.0}
  })");
}

}  // namespace

TEST_CASE("trajectory_csv: header and rows") {
  const ModelParams params{8, 0.1, 0.0};
  const auto traj =
      evolve_profile(css_max_jx(8), params, ControlProfile::constant(0.0, 1), 11);
  const std::string csv = trajectory_csv(traj, build_operators(8));
  CHECK(count_lines(csv) == 12);
  CHECK(csv.rfind("tau,fq_over_T2,f0,mean_x,mean_y,mean_z\n", 0) == 0);

  // values round-trip through %.17g
  std::istringstream rows(csv.substr(csv.find('\n') + 1));
  std::string line;
  std::getline(rows, line);
  double tau, fq;
  REQUIRE(std::sscanf(line.c_str(), "%lf,%lf", &tau, &fq) == 2);
  CHECK(tau == traj.times[0]);
  CHECK(fq == traj.fq[0]);
}

TEST_CASE("profile_csv: uniform segment grid") {
  ControlProfile p;
  p.segments = {1.5, -2.0, 0.25};
  const std::string csv = profile_csv(p);
  CHECK(count_lines(csv) == 4);
  CHECK(csv.find("0,0,0.33333333333333331,1.5\n") != std::string::npos);
  CHECK(csv.find("2,0.66666666666666663,1,0.25\n") != std::string::npos);
}

TEST_CASE("distribution_csv and husimi exports") {
  MeasurementDistribution raw;
  raw.probs = Eigen::VectorXd::Constant(3, 1.0 / 3);
  raw.dprobs = Eigen::VectorXd::Zero(3);
  const std::string csv = distribution_csv(raw, raw, 1.0);
  CHECK(count_lines(csv) == 4);
  CHECK(csv.rfind("m,P,dP,P_tilde,dP_tilde\n", 0) == 0);

  const auto grid = bloch_grid(2, 2);
  const std::vector<double> q = {0.1, 0.2, 0.3, 0.4};
  CHECK(count_lines(husimi_csv(grid, q)) == 5);
  const json hj = husimi_json(2, 2, q);
  CHECK(hj.at("n_theta") == 2);
  CHECK(hj.at("values").size() == 4);
}

TEST_CASE("state_json stores (re, im) pairs") {
  const auto css = css_max_jx(2);
  const json j = state_json(css);
  CHECK(j.at("n_particles") == 2);
  REQUIRE(j.at("amplitudes").size() == 3);
  CHECK(j.at("amplitudes")[1][0].get<double>() == Approx(1.0 / std::sqrt(2.0)));
  CHECK(j.at("amplitudes")[1][1].get<double>() == Approx(0.0));
}

TEST_CASE("config: parse and round-trip") {
  const RunConfig config = parse_config(minimal_oat_config());
  CHECK(config.scheme == SchemeKind::Oat);
  CHECK(config.model.n_particles == 10);
  CHECK(config.oat.theta0 == 1.0);
  CHECK(config.n_samples == 201);

  const json emitted = config_to_json(config);
  const RunConfig reparsed = parse_config(emitted);
  CHECK(config_to_json(reparsed) == emitted);
}

TEST_CASE("config: every scheme round-trips") {
  std::vector<std::string> raw = {
      R"({"model":{"n_particles":4,"chi_T":0.2},"scheme":"tnt"})",
      R"({"model":{"n_particles":4,"chi_T":0.2},"scheme":"profile",
          "profile":{"segments":[1,2,-1],"pulses":[{"time":0.5,"angle":0.3}]}})",
      R"({"model":{"n_particles":4,"chi_T":0.2},"scheme":"optimize-qfi",
          "optimizer":{"n_restarts":3,"max_iters":10}})",
      R"({"model":{"n_particles":4,"chi_T":0.2},"scheme":"optimize-cfi",
          "optimizer":{"n_restarts":3},"noise":{"sigma":2.5}})",
      R"({"model":{"n_particles":4,"chi_T":0.2},"scheme":"husimi",
          "husimi":{"times":[0.0,1.0],"base":"tnt","n_theta":8,"n_phi":8}})",
      R"({"model":{"n_particles":4,"chi_T":0.2},"scheme":"sweep-chi",
          "sweep":{"chi_values":[0.0,0.1]}})"};
  for (const std::string& text : raw) {
    const RunConfig config = parse_config(json::parse(text));
    const json emitted = config_to_json(config);
    CHECK(config_to_json(parse_config(emitted)) == emitted);
  }
}

TEST_CASE("config: strict validation") {
  json j = minimal_oat_config();
  j["typo_key"] = 1;
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  j = minimal_oat_config();
  j["profile"] = {{"segments", {1.0}}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);  // two scheme blocks

  j = minimal_oat_config();
  j.erase("oat");
  CHECK_THROWS_AS(parse_config(j), ConfigError);  // missing block

  j = minimal_oat_config();
  j["scheme"] = "optimize-cfi";
  j.erase("oat");
  j["optimizer"] = json::object();
  CHECK_THROWS_AS(parse_config(j), ConfigError);  // cfi without noise

  j = minimal_oat_config();
  j["noise"] = {{"sigma", -1.0}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  j = minimal_oat_config();
  j["scheme"] = "husimi";
  j.erase("oat");
  j["husimi"] = {{"times", {0.9, 0.1}}, {"base", "tnt"}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);  // unsorted times

  j = minimal_oat_config();
  j["oat"]["tau_prep"] = 1.0;
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  CHECK_THROWS_AS(scheme_from_string("nope"), ConfigError);
}

TEST_CASE("config: seed flows into the optimizer settings") {
  json j = json::parse(R"({
    "model": {"n_particles": 4, "chi_T": 0.2},
    "scheme": "optimize-qfi",
    "optimizer": {"n_restarts": 2},
    "seed": 777,
    "threads": 3
  })");
  const RunConfig config = parse_config(j);
  CHECK(config.optimizer.rng_seed == 777);
  CHECK(config.optimizer.threads == 3);
}

TEST_CASE("optimization_result_json carries restart records") {
  OptimizationResult res;
  res.best_profile = ControlProfile::constant(1.0, 2);
  res.best_objective = 12.5;
  res.best_restart = 1;
  res.restarts = {{11, {1.0, 1.0}, 10.0, 3}, {22, {0.0, 0.0}, 12.5, 4}};
  res.settings = OptimizerSettings{};
  const json j = optimization_result_json(res);
  CHECK(j.at("best_objective") == 12.5);
  CHECK(j.at("restarts").size() == 2);
  CHECK(j.at("restarts")[1].at("iterations") == 4);
  CHECK(j.at("settings").at("n_segments") == 20);
}

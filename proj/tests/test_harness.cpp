#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "riskd/error.hpp"
#include "riskd/harness.hpp"
#include "riskd/io.hpp"

using namespace riskd;
using namespace riskd::harness;
using io::json;

namespace {

json mdp5() {
  return json::parse(R"({
    "n": 5, "alpha": 0.9,
    "P": [[0.5,0.2,0.1,0.1,0.1],[0.1,0.4,0.3,0.1,0.1],[0.2,0.1,0.3,0.2,0.2],
          [0.1,0.1,0.2,0.4,0.2],[0.3,0.1,0.1,0.2,0.3]],
    "c": [1, 2, 0, 3, 1.5]})");
}

json features5() { return json::parse(R"({"Phi": [[1,-1],[1,-0.5],[1,0],[1,0.5],[1,1]]})"); }

json synthetic(std::size_t reps, std::size_t steps) {
  json j;
  j["scenario"] = "synthetic-mdp";
  j["replications"] = reps;
  j["seed"] = 7;
  j["mdp"] = mdp5();
  j["features"] = features5();
  j["learner"] = {{"lambda", 0.0},
                  {"N", 4},
                  {"steps", steps},
                  {"risk", {{"kind", "mean_semideviation"}, {"beta", 0.05}}},
                  {"schedule", {{"a", 100}, {"b", 100}, {"p", 1}}}};
  return j;
}

json ring_env() {
  json j;
  j["M"] = 3;
  j["fleet"] = 6;
  j["alpha"] = 0.95;
  j["c_empty"] = {{0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
  j["c_loaded"] = {{-2, -3, -3}, {-3, -2, -3}, {-3, -3, -2}};
  j["demand"] = {{"kind", "truncated_poisson"}, {"mean", 0.5}, {"cap", 3}};
  return j;
}

std::string csv(const ResultTable& t) {
  std::ostringstream os;
  t.write_csv(os);
  return os.str();
}

std::string field_of(const json& j) {
  try {
    parse_experiment(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("riskd_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("empirical CDF") {
  const std::vector<double> xs{3, 1, 2, 2};
  const auto cdf = empirical_cdf(xs);
  REQUIRE(cdf.size() == 3);
  CHECK(cdf[0].value == 1.0);
  CHECK(cdf[0].fraction == 0.25);
  CHECK(cdf[1].fraction == 0.75);
  CHECK(cdf[2].fraction == 1.0);
  CHECK(cdf_at(cdf, 0.5) == 0.0);
  CHECK(cdf_at(cdf, 2.0) == 0.75);
  CHECK(cdf_at(cdf, 2.5) == 0.75);
  CHECK(cdf_at(cdf, 10) == 1.0);
  CHECK_THROWS_AS(empirical_cdf(std::vector<double>{}), InvalidInput);
  CHECK_THROWS_AS(empirical_cdf(std::vector<double>{1.0, std::nan("")}), InvalidInput);
}

TEST_CASE("dominance") {
  const auto hi = empirical_cdf(std::vector<double>{2, 3, 4});
  const auto lo = empirical_cdf(std::vector<double>{1, 2, 3});
  const auto d = dominance_check(hi, lo);
  CHECK(d.a_dominates_b);
  CHECK(!d.b_dominates_a);
  CHECK(d.max_violation_a == 0.0);
  CHECK(d.max_violation_b == doctest::Approx(1.0 / 3.0));
  const auto wide = empirical_cdf(std::vector<double>{0, 10});
  const auto narrow = empirical_cdf(std::vector<double>{4, 6});
  const auto x = dominance_check(wide, narrow);
  CHECK(!x.a_dominates_b);
  CHECK(!x.b_dominates_a);
  CHECK(dominance_check(hi, hi).a_dominates_b);
}

TEST_CASE("config diagnostics name the field") {
  CHECK(field_of(json::object()) == "/scenario");
  auto j = synthetic(1, 10);
  j["scenario"] = "bandit";
  CHECK(field_of(j) == "/scenario");

  j = synthetic(1, 10);
  j["features"]["Phi"].erase(0);
  CHECK(field_of(j) == "/features/Phi");

  j = synthetic(1, 10);
  j["learner"]["alpha"] = 0.8;
  CHECK(field_of(j) == "/learner/alpha");

  j = synthetic(1, 10);
  j["learner"]["risk"]["beta"] = 1.5;
  CHECK(field_of(j) == "/learner/risk/beta");

  j = synthetic(1, 10);
  j["learner"]["schedule"]["a"] = -1;
  CHECK(field_of(j) == "/learner/schedule/a");

  j = synthetic(1, 10);
  j["mdp"]["P"][1][1] = 0.9;
  CHECK(field_of(j).rfind("/mdp", 0) == 0);

  j = synthetic(1, 10);
  j["mdp"] = "does/not/exist.json";
  CHECK_THROWS_AS(parse_experiment(j), InvalidInput);

  json f;
  f["scenario"] = "fleet";
  f["env"] = ring_env();
  f["env"]["c_empty"][2][2] = 1;
  CHECK(field_of(f) == "/env/c_empty[2][2]");
  f["env"] = ring_env();
  f["grid"] = {{"beta", {0.0, 2.0}}};
  CHECK(field_of(f) == "/grid/beta/1");

  try {
    io::parse_json_text("{\n  \"a\": [1, 2,\n}", "cfg.json");
    FAIL("accepted malformed JSON");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("cfg.json:3:") != std::string::npos);
  }

  CHECK(field_of(synthetic(1, 10)) == "<accepted>");
}

TEST_CASE("synthetic runs") {
  SUBCASE("zero replications give an empty table") {
    const auto res = run_experiment(parse_experiment(synthetic(0, 100)));
    REQUIRE(res.tables.size() == 1);
    CHECK(res.tables[0].rows.empty());
    CHECK(csv(res.tables[0]) == "replication,t,metric,value\n");
    CHECK(res.errors == 0);
  }
  SUBCASE("serial and parallel runs agree byte for byte") {
    const auto cfg = parse_experiment(synthetic(4, 20000));
    const auto a = run_experiment(cfg);
    RunOptions par;
    par.parallel = 4;
    const auto b = run_experiment(cfg, par);
    CHECK(csv(a.tables[0]) == csv(b.tables[0]));
    CHECK(a.summary.dump() == b.summary.dump());
    CHECK(a.tables[0].rows.size() == 4 * 1000 * 3);
    CHECK(a.summary["final"]["mean_relative_error"].get<double>() < 0.2);
    RunOptions other;
    other.seed = 8;
    CHECK(csv(run_experiment(cfg, other).tables[0]) != csv(a.tables[0]));
  }
  SUBCASE("divergence is recorded per replication") {
    auto j = synthetic(2, 500);
    j["learner"]["schedule"] = {{"a", 1e150}, {"b", 1}, {"p", 0}};
    j["learner"]["box"] = nullptr;
    const auto res = run_experiment(parse_experiment(j));
    CHECK(res.errors == 2);
    CHECK(res.summary["errors"].size() == 2);
    CHECK(!res.tables[0].rows.empty());
  }
  SUBCASE("violated contraction without force records an oracle error") {
    auto j = synthetic(1, 100);
    j["learner"]["risk"]["beta"] = 1.0;
    j["learner"]["lambda"] = 0.5;
    const auto res = run_experiment(parse_experiment(j));
    CHECK(res.errors >= 1);
    CHECK(res.summary["oracle"].is_null());
  }
}

TEST_CASE("fleet grid") {
  json j;
  j["scenario"] = "fleet";
  j["replications"] = 3;
  j["seed"] = 5;
  j["env"] = ring_env();
  j["learner"] = {{"N", 2}, {"steps", 400}, {"schedule", {{"a", 1}, {"b", 100}, {"p", 1}}}};
  j["grid"] = {{"beta", {0.0, 0.5, 1.0}}, {"lambda", {0.0, 0.5}}};
  j["cdf_stage"] = 100;
  const auto cfg = parse_experiment(j);
  const auto res = run_experiment(cfg);
  REQUIRE(res.tables.size() == 6);
  CHECK(res.tables[0].name == "results_beta0_lambda0");
  CHECK(res.tables[5].name == "results_beta1_lambda0.5");
  CHECK(res.errors == 0);
  CHECK(res.summary["comparisons"].size() == 2);
  CHECK(res.summary["comparisons"][0]["cdf_a"].size() >= 1);

  const auto dir = scratch("fleet");
  write_outputs(res, dir, true);
  std::size_t csvs = 0, svgs = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    csvs += e.path().extension() == ".csv";
    svgs += e.path().extension() == ".svg";
  }
  CHECK(csvs == 6);
  CHECK(svgs == 6);
  std::ifstream s(dir / "summary.json");
  CHECK(json::parse(s)["grid"].size() == 6);

  RunOptions par;
  par.parallel = 3;
  const auto again = run_experiment(cfg, par);
  for (std::size_t k = 0; k < 6; ++k) CHECK(csv(again.tables[k]) == csv(res.tables[k]));
  std::filesystem::remove_all(dir);
}

TEST_CASE("replication seeds are distinct") {
  CHECK(replication_seed(1, 0) != replication_seed(1, 1));
  CHECK(replication_seed(1, 0) != replication_seed(2, 0));
  CHECK(replication_seed(1, 3) == replication_seed(1, 3));
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "riskd/fleet.hpp"
#include "riskd/markov.hpp"
#include "riskd/projected.hpp"
#include "riskd/risk.hpp"
#include "riskd/td.hpp"

namespace riskd::io {

using json = nlohmann::json;

/// Parses a JSON file; syntax errors become ConfigError with line and column.
json read_json_file(const std::filesystem::path& path);
json parse_json_text(const std::string& text, const std::string& origin = "<string>");

/// {"n":..., "alpha":..., "P":[[...]], "c":[...]}. `where` prefixes field paths.
MarkovChain load_chain(const json& j, const std::string& where = "");
/// {"Phi":[[...]]}
Matrix load_features(const json& j, const std::string& where = "");
/// {"kind":"mean_semideviation","beta":1} | {"kind":"cvar","kappa":0.2} | {"kind":"expectation"}
RiskMapping load_risk(const json& j, const std::string& where = "");
/// {"a":1,"b":100,"p":1}; missing fields keep defaults.
StepsizeSchedule load_schedule(const json& j, const std::string& where = "");

struct LearnerConfig {
  double lambda = 0.0;
  std::optional<double> alpha;
  std::optional<RiskMapping> risk;
  StepsizeSchedule schedule;
  std::size_t N = 1;
  std::optional<double> box = 1e6;
  std::size_t steps = 0;
  std::optional<std::uint64_t> seed;
};
/// {"lambda":0.5,"alpha":0.95,"risk":{...},"schedule":{...},"N":4,"box":null,"steps":...,"seed":...}
/// A null box disables projection; a missing box keeps the default 1e6.
LearnerConfig load_learner(const json& j, const std::string& where = "");

/// {"M":4,"fleet":8,"c_empty":[[...]],"c_loaded":[[...]],"demand":{...},"alpha":0.95}
fleet::FleetConfig load_fleet(const json& j, const std::string& where = "");

json to_json(const Vector& v);
json to_json(const ProjectedSolution& sol);
json to_json(const DistortionReport& rep);
json to_json(const ScheduleReport& rep);

/// %.17g, the shortest form that round-trips every double.
std::string format_double(double x);

}  // namespace riskd::io

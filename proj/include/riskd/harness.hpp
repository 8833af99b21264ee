#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "riskd/fleet.hpp"
#include "riskd/io.hpp"
#include "riskd/markov.hpp"
#include "riskd/risk.hpp"

namespace riskd::harness {

enum class Scenario { synthetic_mdp, fleet };

struct ExperimentConfig {
  Scenario scenario = Scenario::synthetic_mdp;
  std::size_t replications = 1;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> output;
  io::LearnerConfig learner;
  RiskMapping risk = RiskMapping::expectation();
  std::size_t record_every = 0;  ///< 0 picks roughly 1000 records per run (2000 for fleet)

  // synthetic-mdp
  std::optional<MarkovChain> chain;
  Matrix phi;
  bool oracle = true;
  bool force = false;      ///< run the oracle even when the contraction condition fails
  double tolerance = 0.05; ///< relative q-norm error counted as converged

  // fleet
  std::optional<fleet::FleetConfig> env;
  std::vector<double> betas;    ///< mean-semideviation grid; empty uses `risk`
  std::vector<double> lambdas;  ///< empty uses learner.lambda
  std::size_t cdf_stage = 200;
};

/// Validates every nested block; file references resolve against `base_dir`.
/// Errors are ConfigError with a JSON-pointer-like field path.
ExperimentConfig parse_experiment(const io::json& j, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_experiment(const std::filesystem::path& path);

struct ResultRow {
  std::size_t replication = 0;
  std::size_t t = 0;
  std::string metric;
  double value = 0.0;
};

/// Long-format table; rows sorted by (replication, t, metric).
struct ResultTable {
  std::string name;  ///< file stem, e.g. results or results_beta1_lambda0.5
  std::vector<ResultRow> rows;

  void sort();
  void write_csv(std::ostream& os) const;
};

struct CdfPoint {
  double value = 0.0;
  double fraction = 0.0;
};

/// Right-continuous empirical CDF: one point per distinct value, fraction of
/// samples <= value. Throws InvalidInput on empty input.
std::vector<CdfPoint> empirical_cdf(std::span<const double> values);

/// F(x) of a CDF table; 0 left of the first point.
double cdf_at(const std::vector<CdfPoint>& cdf, double x);

/// For profits, a dominates b when F_a <= F_b everywhere. Advisory only.
struct DominanceReport {
  bool a_dominates_b = false;
  bool b_dominates_a = false;
  double max_violation_a = 0.0;  ///< max (F_a - F_b)_+
  double max_violation_b = 0.0;  ///< max (F_b - F_a)_+
};

DominanceReport dominance_check(const std::vector<CdfPoint>& a, const std::vector<CdfPoint>& b);

struct RunOptions {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::size_t parallel = 1;
  bool svg = false;
};

struct ExperimentResult {
  std::vector<ResultTable> tables;
  io::json summary;
  std::size_t errors = 0;  ///< replications that stopped early or failed
};

/// Runs the scenario without touching the filesystem.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// results*.csv, summary.json and, with opts.svg, one chart per table.
void write_outputs(const ExperimentResult& res, const std::filesystem::path& dir, bool svg);

/// Per-replication master seed.
std::uint64_t replication_seed(std::uint64_t master, std::size_t replication);

}  // namespace riskd::harness

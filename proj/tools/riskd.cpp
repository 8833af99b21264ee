#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "riskd/error.hpp"
#include "riskd/harness.hpp"
#include "riskd/io.hpp"
#include "riskd/projected.hpp"
#include "riskd/td.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

int cmd_run(const std::string& config, const std::optional<std::string>& out,
            std::optional<std::uint64_t> seed, std::size_t parallel, bool svg) {
  const auto cfg = riskd::harness::load_experiment(config);
  riskd::harness::RunOptions opts;
  opts.seed = seed;
  opts.parallel = parallel;
  opts.svg = svg;
  const auto res = riskd::harness::run_experiment(cfg, opts);
  const std::filesystem::path dir = out ? std::filesystem::path(*out) : cfg.output.value_or("out");
  riskd::harness::write_outputs(res, dir, svg);
  for (const auto& t : res.tables) std::cout << (dir / (t.name + ".csv")).string() << '\n';
  std::cout << (dir / "summary.json").string() << '\n';
  if (res.errors > 0) {
    std::cerr << "riskd: " << res.errors << " run(s) stopped early; see summary.json errors\n";
    return kNumericalError;
  }
  return 0;
}

int cmd_solve(const std::string& mdp, const std::string& features, const std::string& risk,
              double lambda, bool force) {
  const auto chain = riskd::io::load_chain(riskd::io::read_json_file(mdp));
  const auto phi = riskd::io::load_features(riskd::io::read_json_file(features));
  const auto m = riskd::io::load_risk(riskd::io::read_json_file(risk));
  riskd::check_ergodic(chain.transition());
  const riskd::FeatureModel fm(phi, riskd::stationary_distribution(chain));
  riskd::SolverOptions so;
  so.allow_noncontractive = force;
  const auto sol = lambda > 0.0 ? riskd::solve_multistep(fm, chain, m, lambda, so)
                                : riskd::solve_single_step(fm, chain, m, so);
  std::cout << riskd::io::to_json(sol).dump(2) << '\n';
  return 0;
}

int cmd_check_schedule(const std::string& path, std::size_t horizon) {
  const auto s = riskd::io::load_schedule(riskd::io::read_json_file(path));
  auto j = riskd::io::to_json(riskd::validate_schedule(s, horizon));
  j["horizon"] = horizon;
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"riskd: risk-averse temporal-difference learning toolkit"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string run_config;
  std::optional<std::string> run_out;
  std::optional<std::uint64_t> run_seed;
  std::size_t run_parallel = 1;
  bool run_svg = false;
  run->add_option("config", run_config, "experiment JSON")->required();
  run->add_option("--out", run_out, "output directory");
  run->add_option("--seed", run_seed, "master seed, overrides the config");
  run->add_option("--parallel", run_parallel, "worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--svg", run_svg, "also write SVG charts");

  auto* solve = app.add_subcommand("solve", "print the projected-equation solution");
  std::string mdp, features, risk;
  double lambda = 0.0;
  bool force = false;
  solve->add_option("mdp", mdp, "chain JSON")->required();
  solve->add_option("features", features, "features JSON")->required();
  solve->add_option("risk", risk, "risk mapping JSON")->required();
  solve->add_option("--lambda", lambda, "trace parameter; > 0 solves the multistep equation")
      ->check(CLI::Range(0.0, 1.0));
  solve->add_flag("--force", force, "proceed when the contraction condition fails");

  auto* check = app.add_subcommand("check-schedule", "spot-check stepsize conditions");
  std::string schedule;
  std::size_t horizon = 0;
  check->add_option("schedule", schedule, "schedule JSON {a, b, p}")->required();
  check->add_option("--horizon", horizon, "horizon T")->required()->check(CLI::Range(8, 1 << 30));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) return cmd_run(run_config, run_out, run_seed, run_parallel, run_svg);
    if (*solve) return cmd_solve(mdp, features, risk, lambda, force);
    return cmd_check_schedule(schedule, horizon);
  } catch (const riskd::InvalidInput& e) {
    std::cerr << "riskd: " << e.what() << '\n';
    return kConfigError;
  } catch (const riskd::NumericalError& e) {
    std::cerr << "riskd: " << e.what() << " (last residual " << e.last_residual() << ")\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "riskd: " << e.what() << '\n';
    return 1;
  }
}

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "riskd/markov.hpp"
#include "riskd/risk.hpp"
#include "riskd/rng.hpp"
#include "riskd/td.hpp"

namespace riskd::fleet {

using IntMatrix = Eigen::MatrixXi;
using IntVector = Eigen::VectorXi;

/// Law of the origin-destination demand matrix D_t, iid over t.
struct DemandModel {
  enum class Kind { zero, deterministic, truncated_poisson, scenarios };
  Kind kind = Kind::zero;
  int value = 0;              ///< deterministic: D_ij = value
  double mean = 1.0;          ///< truncated Poisson mean
  int cap = 3;                ///< truncated Poisson support {0..cap}
  std::vector<IntMatrix> matrices;   ///< scenarios
  std::vector<double> probabilities; ///< scenarios
};

struct FleetConfig {
  int M = 4;
  int fleet_size = 8;
  Matrix c_empty;    ///< cost of an empty move i -> j, zero diagonal
  Matrix c_loaded;   ///< net negative profit of a loaded move i -> j
  DemandModel demand;
  double alpha = 0.95;

  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

struct FleetState {
  IntVector x;
};

/// u_empty(i, j) vehicles move empty from i to j (i == i stays); u_loaded(i, j)
/// carry demand from i to j.
struct Decision {
  IntMatrix empty;
  IntMatrix loaded;
};

/// Fleet spread as evenly as possible, remainder to the lowest indices.
FleetState initial_state(const FleetConfig& cfg);

/// pmf of the truncated Poisson law on {0..cap}.
std::vector<double> truncated_poisson_pmf(double mean, int cap);

IntMatrix sample_demand(const FleetConfig& cfg, Rng& rng);

/// c^T u.
double decision_cost(const FleetConfig& cfg, const Decision& u);

/// c^T u + alpha pi^T x', x' = transition(x, u).
double lookahead_objective(const FleetConfig& cfg, const Decision& u, const Vector& pi);

/// argmin over feasible u of c^T u + alpha pi^T (x - A u). Origins decouple:
/// each vehicle at i takes the cheapest arc i -> j with remaining capacity,
/// loaded arcs capped by D_ij. Ties prefer staying empty, then loaded arcs by
/// destination, then empty arcs by destination.
Decision solve_lookahead(const FleetConfig& cfg, const FleetState& x, const IntMatrix& demand,
                         const Vector& pi);

/// x'_j = sum_i (u_empty(i, j) + u_loaded(i, j)); throws InvalidInput when
/// outflows do not match x.
FleetState transition(const FleetState& x, const Decision& u);

/// r^T x - alpha * sigma(P^N, c^T u^k + alpha r^T x'^k) over the given demands.
double observed_td_from_demands(const FleetConfig& cfg, const FleetState& x, const Vector& r,
                                const RiskMapping& m, std::span<const IntMatrix> demands);

/// Draws N demands and evaluates observed_td_from_demands.
double observed_td_transport(const FleetConfig& cfg, const FleetState& x, const Vector& r,
                             const RiskMapping& m, std::size_t N, Rng& rng);

struct StageRecord {
  std::size_t t = 0;
  double td = 0.0;
  double gamma = 0.0;
  double profit = 0.0;
};

struct OptimisticRun {
  std::vector<StageRecord> stages;
  LearnerState final;
  FleetState final_state;
  std::optional<std::string> failure;  ///< set when the run stopped on a non-finite iterate
};

/// Closed loop with pi = r_t: act on the realized demand, update r with the
/// observed TD from N fresh demand draws, move the fleet. Stops early and sets
/// `failure` if r leaves the finite range.
OptimisticRun run_optimistic(const FleetConfig& cfg, const RiskMapping& m, LearnerState ls,
                             std::size_t steps, std::uint64_t seed);

}  // namespace riskd::fleet

#include "riskd/fleet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "riskd/error.hpp"

namespace riskd::fleet {

namespace {

struct Arc {
  double cost;
  int rank;  // tie order: stay empty, loaded by j, empty by j
  int dest;
  bool loaded;
};

std::string cell(const char* name, int i, int j) {
  return std::string(name) + "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
}

}  // namespace

void FleetConfig::validate() const {
  if (M < 1) throw ConfigError("M", "must be at least 1");
  if (fleet_size < 0) throw ConfigError("fleet", "must be nonnegative");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha", "must lie in (0, 1)");
  if (c_empty.rows() != M || c_empty.cols() != M) throw ConfigError("c_empty", "must be M x M");
  if (c_loaded.rows() != M || c_loaded.cols() != M) throw ConfigError("c_loaded", "must be M x M");
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) {
      if (!std::isfinite(c_empty(i, j))) throw ConfigError(cell("c_empty", i, j), "not finite");
      if (!std::isfinite(c_loaded(i, j))) throw ConfigError(cell("c_loaded", i, j), "not finite");
    }
    if (c_empty(i, i) != 0.0) throw ConfigError(cell("c_empty", i, i), "staying must cost 0");
  }
  switch (demand.kind) {
    case DemandModel::Kind::zero:
      break;
    case DemandModel::Kind::deterministic:
      if (demand.value < 0) throw ConfigError("demand.value", "must be nonnegative");
      break;
    case DemandModel::Kind::truncated_poisson:
      if (!(demand.mean > 0.0)) throw ConfigError("demand.mean", "must be positive");
      if (demand.cap < 0) throw ConfigError("demand.cap", "must be nonnegative");
      break;
    case DemandModel::Kind::scenarios: {
      if (demand.matrices.empty() || demand.matrices.size() != demand.probabilities.size()) {
        throw ConfigError("demand", "scenarios need matching matrices and probabilities");
      }
      double total = 0.0;
      for (std::size_t s = 0; s < demand.matrices.size(); ++s) {
        const auto& D = demand.matrices[s];
        if (D.rows() != M || D.cols() != M || D.minCoeff() < 0) {
          throw ConfigError("demand.matrices[" + std::to_string(s) + "]",
                            "must be a nonnegative M x M integer matrix");
        }
        if (!(demand.probabilities[s] >= 0.0)) {
          throw ConfigError("demand.probabilities", "must be nonnegative");
        }
        total += demand.probabilities[s];
      }
      if (std::abs(total - 1.0) > 1e-10) throw ConfigError("demand.probabilities", "must sum to 1");
      break;
    }
  }
}

FleetState initial_state(const FleetConfig& cfg) {
  FleetState s;
  s.x = IntVector::Constant(cfg.M, cfg.fleet_size / cfg.M);
  for (int i = 0; i < cfg.fleet_size % cfg.M; ++i) ++s.x(i);
  return s;
}

std::vector<double> truncated_poisson_pmf(double mean, int cap) {
  std::vector<double> pmf(static_cast<std::size_t>(cap) + 1);
  double term = 1.0;
  double total = 0.0;
  for (int k = 0; k <= cap; ++k) {
    if (k > 0) term *= mean / k;
    pmf[static_cast<std::size_t>(k)] = term;
    total += term;
  }
  for (double& p : pmf) p /= total;
  return pmf;
}

IntMatrix sample_demand(const FleetConfig& cfg, Rng& rng) {
  const auto& d = cfg.demand;
  switch (d.kind) {
    case DemandModel::Kind::zero:
      return IntMatrix::Zero(cfg.M, cfg.M);
    case DemandModel::Kind::deterministic:
      return IntMatrix::Constant(cfg.M, cfg.M, d.value);
    case DemandModel::Kind::truncated_poisson: {
      const auto pmf = truncated_poisson_pmf(d.mean, d.cap);
      std::vector<double> cdf(pmf.size());
      std::partial_sum(pmf.begin(), pmf.end(), cdf.begin());
      IntMatrix D(cfg.M, cfg.M);
      for (int i = 0; i < cfg.M; ++i) {
        for (int j = 0; j < cfg.M; ++j) {
          const double u = rng.uniform();
          const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
          D(i, j) = it == cdf.end() ? d.cap : static_cast<int>(it - cdf.begin());
        }
      }
      return D;
    }
    case DemandModel::Kind::scenarios: {
      const double u = rng.uniform();
      double acc = 0.0;
      for (std::size_t s = 0; s < d.matrices.size(); ++s) {
        acc += d.probabilities[s];
        if (u < acc) return d.matrices[s];
      }
      return d.matrices.back();
    }
  }
  return IntMatrix::Zero(cfg.M, cfg.M);
}

double decision_cost(const FleetConfig& cfg, const Decision& u) {
  double cost = 0.0;
  for (int i = 0; i < cfg.M; ++i) {
    for (int j = 0; j < cfg.M; ++j) {
      cost += cfg.c_empty(i, j) * u.empty(i, j) + cfg.c_loaded(i, j) * u.loaded(i, j);
    }
  }
  return cost;
}

double lookahead_objective(const FleetConfig& cfg, const Decision& u, const Vector& pi) {
  const IntVector inflow = (u.empty + u.loaded).colwise().sum().transpose();
  double next_value = 0.0;
  for (int j = 0; j < cfg.M; ++j) next_value += pi(j) * inflow(j);
  return decision_cost(cfg, u) + cfg.alpha * next_value;
}

Decision solve_lookahead(const FleetConfig& cfg, const FleetState& x, const IntMatrix& demand,
                         const Vector& pi) {
  const int M = cfg.M;
  if (x.x.size() != M || demand.rows() != M || demand.cols() != M || pi.size() != M) {
    throw InvalidInput("solve_lookahead: dimension mismatch");
  }
  Decision u{IntMatrix::Zero(M, M), IntMatrix::Zero(M, M)};
  std::vector<Arc> arcs;
  arcs.reserve(static_cast<std::size_t>(2 * M));
  for (int i = 0; i < M; ++i) {
    int supply = x.x(i);
    if (supply <= 0) continue;
    arcs.clear();
    for (int j = 0; j < M; ++j) {
      const double next = cfg.alpha * pi(j);
      arcs.push_back({cfg.c_empty(i, j) + next, j == i ? 0 : 1 + M + j, j, false});
      if (demand(i, j) > 0) arcs.push_back({cfg.c_loaded(i, j) + next, 1 + j, j, true});
    }
    std::sort(arcs.begin(), arcs.end(), [](const Arc& a, const Arc& b) {
      return a.cost != b.cost ? a.cost < b.cost : a.rank < b.rank;
    });
    for (const Arc& arc : arcs) {
      if (supply == 0) break;
      if (arc.loaded) {
        const int take = std::min(supply, demand(i, arc.dest));
        u.loaded(i, arc.dest) += take;
        supply -= take;
      } else {
        u.empty(i, arc.dest) += supply;
        supply = 0;
      }
    }
  }
  return u;
}

FleetState transition(const FleetState& x, const Decision& u) {
  const auto M = x.x.size();
  if (u.empty.rows() != M || u.empty.cols() != M || u.loaded.rows() != M || u.loaded.cols() != M) {
    throw InvalidInput("transition: decision has the wrong shape");
  }
  if (u.empty.minCoeff() < 0 || u.loaded.minCoeff() < 0) {
    throw InvalidInput("transition: decision has negative entries");
  }
  const IntMatrix flow = u.empty + u.loaded;
  for (Eigen::Index i = 0; i < M; ++i) {
    if (flow.row(i).sum() != x.x(i)) {
      throw InvalidInput("transition: outflow from location " + std::to_string(i) + " is " +
                         std::to_string(flow.row(i).sum()) + ", expected " +
                         std::to_string(x.x(i)));
    }
  }
  return FleetState{flow.colwise().sum().transpose()};
}

double observed_td_from_demands(const FleetConfig& cfg, const FleetState& x, const Vector& r,
                                const RiskMapping& m, std::span<const IntMatrix> demands) {
  if (demands.empty()) throw InvalidInput("observed_td_transport: N must be at least 1");
  std::vector<double> outcomes;
  outcomes.reserve(demands.size());
  for (const auto& D : demands) {
    const Decision u = solve_lookahead(cfg, x, D, r);
    outcomes.push_back(lookahead_objective(cfg, u, r));
  }
  double value = 0.0;
  for (int i = 0; i < cfg.M; ++i) value += r(i) * x.x(i);
  return value - cfg.alpha * evaluate_empirical(m, outcomes);
}

double observed_td_transport(const FleetConfig& cfg, const FleetState& x, const Vector& r,
                             const RiskMapping& m, std::size_t N, Rng& rng) {
  std::vector<IntMatrix> demands;
  demands.reserve(N);
  for (std::size_t k = 0; k < N; ++k) demands.push_back(sample_demand(cfg, rng));
  return observed_td_from_demands(cfg, x, r, m, demands);
}

OptimisticRun run_optimistic(const FleetConfig& cfg, const RiskMapping& m, LearnerState ls,
                             std::size_t steps, std::uint64_t seed) {
  cfg.validate();
  if (ls.r.size() != cfg.M) throw InvalidInput("run_optimistic: learner must have M features");
  const Rng root(seed);
  Rng demand_rng = root.stream(0);
  Rng risk_rng = root.stream(1);
  const bool multistep = ls.lambda > 0.0;

  OptimisticRun run;
  run.stages.reserve(steps);
  FleetState state = initial_state(cfg);
  for (std::size_t step = 0; step < steps; ++step) {
    const IntMatrix realized = sample_demand(cfg, demand_rng);
    const Decision action = solve_lookahead(cfg, state, realized, ls.r);

    StageRecord rec;
    rec.t = ls.t;
    rec.gamma = ls.schedule(ls.t);
    rec.profit = -decision_cost(cfg, action);
    rec.td = observed_td_transport(cfg, state, ls.r, m, ls.N, risk_rng);

    const Vector features = state.x.cast<double>();
    if (multistep) {
      advance_tdlambda(ls, features, rec.td);
    } else {
      advance_td0(ls, features, rec.td);
    }
    run.stages.push_back(rec);
    if (!ls.r.allFinite()) {
      run.failure = "iterate became non-finite at t=" + std::to_string(rec.t);
      break;
    }
    state = transition(state, action);
  }
  run.final = std::move(ls);
  run.final_state = std::move(state);
  return run;
}

}  // namespace riskd::fleet

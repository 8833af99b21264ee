#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "riskd/markov.hpp"
#include "riskd/projected.hpp"
#include "riskd/risk.hpp"

namespace riskd {

/// gamma_t = a / (b + t)^p.
struct StepsizeSchedule {
  double a = 1.0;
  double b = 100.0;
  double p = 1.0;

  double operator()(std::size_t t) const;
  /// Throws InvalidInput unless a > 0, b >= 1, p >= 0. Admissibility
  /// (p in (1/2, 1]) is reported by validate_schedule, not enforced.
  void validate() const;
};

/// Finite-horizon spot checks of the four stepsize conditions.
struct ScheduleReport {
  bool positive_decreasing = false;   // (i)
  bool divergent_sum = false;         // (ii)
  bool square_summable = false;       // (iii)
  bool window_variation = false;      // (iv)
  double final_step = 0.0;
  double sum_growth_ratio = 0.0;      // sum over [H/2,H) / sum over [H/4,H/2)
  double square_sum_ratio = 0.0;      // same for gamma_t^2
  double variation_late = 0.0;        // sup window variation starting at H/2
  double variation_early = 0.0;       // ... starting at H/4
  std::vector<std::string> failed;

  bool ok() const noexcept { return failed.empty(); }
};

ScheduleReport validate_schedule(const StepsizeSchedule& s, std::size_t horizon);

struct LearnerState {
  Vector r;
  Vector z;
  std::size_t t = 0;
  double lambda = 0.0;
  double alpha = 0.9;
  StepsizeSchedule schedule;
  std::optional<double> box;  ///< Y = {r : ||r||_inf <= box}
  std::size_t N = 1;

  /// r = 0, z = 0, t = 0.
  static LearnerState initial(std::size_t features, double alpha, double lambda,
                              StepsizeSchedule schedule, std::size_t N,
                              std::optional<double> box = std::nullopt);
};

/// phi(i)^T r - c(i) - alpha * sigma_estimate.
double observed_td(const Vector& phi_i, const Vector& r, double cost, double alpha,
                   double sigma_estimate);

/// r <- Proj_Y(r - gamma_t phi(i) td).
LearnerState td0_step(LearnerState ls, const Vector& phi_i, double td);
/// z <- lambda alpha z + phi(i); r <- Proj_Y(r - gamma_t z td).
LearnerState tdlambda_step(LearnerState ls, const Vector& phi_i, double td);

/// In-place forms of the two steps.
void advance_td0(LearnerState& ls, const Vector& phi_i, double td);
void advance_tdlambda(LearnerState& ls, const Vector& phi_i, double td);

struct TraceRecord {
  std::size_t t = 0;
  std::size_t state = 0;
  double td = 0.0;
  double gamma = 0.0;
  double W = 0.0;  ///< NaN without an oracle
};

struct LearningTrace {
  std::vector<TraceRecord> records;
  LearnerState final;
  double mean_abs_td = 0.0;
  std::optional<std::string> failure;  ///< set when the run stopped on a non-finite iterate
};

struct LearnerRunOptions {
  const ProjectedSolution* oracle = nullptr;
  std::size_t start_state = 0;
  bool keep_records = true;  ///< false keeps memory flat on long runs
  /// Called after every step with the record and the updated learner.
  std::function<void(const TraceRecord&, const LearnerState&)> on_step;
};

/// Simulates the chain and runs RA-TD(lambda) (RA-TD(0) when lambda = 0).
/// Per step: draw N successors of i_t for the plug-in estimate from one
/// stream, then the trajectory successor from an independent stream.
/// Records W of the post-step iterate when an oracle is given. Stops early
/// and sets `failure` if r leaves the finite range.
LearningTrace run_learner(const MarkovChain& chain, const FeatureModel& fm, const RiskMapping& m,
                          LearnerState ls, std::size_t steps, std::uint64_t seed,
                          const LearnerRunOptions& opts = {});

/// Squared Euclidean distance from r to Y* = r* + null(Phi).
double lyapunov_W(const Vector& r, const ProjectedSolution& sol);

/// CSV with header t,state,td,gamma,W.
void write_trace_csv(std::ostream& os, const LearningTrace& trace);

}  // namespace riskd

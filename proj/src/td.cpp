#include "riskd/td.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "riskd/error.hpp"
#include "riskd/rng.hpp"

namespace riskd {

namespace {

constexpr double kTrendThreshold = 0.99;
constexpr double kWindowBudget = 1.0;

double window_variation(const std::vector<double>& g, std::size_t t0) {
  double budget = 0.0;
  double variation = 0.0;
  double best = 0.0;
  for (std::size_t t = t0; t + 1 < g.size(); ++t) {
    budget += g[t];
    if (budget > kWindowBudget) break;
    variation += std::abs(g[t] - g[t + 1]);
    best = std::max(best, variation);
  }
  return best;
}

double range_sum(const std::vector<double>& g, std::size_t from, std::size_t to, bool squared) {
  double s = 0.0;
  for (std::size_t t = from; t < to; ++t) s += squared ? g[t] * g[t] : g[t];
  return s;
}

void project_box(LearnerState& ls) {
  if (!ls.box) return;
  const double R = *ls.box;
  for (Eigen::Index k = 0; k < ls.r.size(); ++k) ls.r(k) = std::clamp(ls.r(k), -R, R);
}

}  // namespace

double StepsizeSchedule::operator()(std::size_t t) const {
  const double base = b + static_cast<double>(t);
  return p == 1.0 ? a / base : a / std::pow(base, p);
}

void StepsizeSchedule::validate() const {
  if (!(a > 0.0)) throw InvalidInput("schedule: a must be positive");
  if (!(b >= 1.0)) throw InvalidInput("schedule: b must be at least 1");
  if (!(p >= 0.0)) throw InvalidInput("schedule: p must be nonnegative");
}

ScheduleReport validate_schedule(const StepsizeSchedule& s, std::size_t horizon) {
  s.validate();
  if (horizon < 8) throw InvalidInput("validate_schedule: horizon must be at least 8");
  std::vector<double> g(horizon + 1);
  for (std::size_t t = 0; t <= horizon; ++t) g[t] = s(t);

  ScheduleReport rep;
  rep.final_step = g.back();
  bool positive = true;
  bool monotone = true;
  for (std::size_t t = 0; t <= horizon; ++t) {
    positive = positive && g[t] > 0.0;
    if (t > 0) monotone = monotone && g[t] <= g[t - 1];
  }
  rep.positive_decreasing = positive && monotone && g[horizon] < g[horizon / 2] && g[horizon] < g[0];

  const std::size_t q1 = horizon / 4;
  const std::size_t q2 = horizon / 2;
  rep.sum_growth_ratio = range_sum(g, q2, horizon, false) / range_sum(g, q1, q2, false);
  rep.divergent_sum = rep.sum_growth_ratio >= kTrendThreshold;
  rep.square_sum_ratio = range_sum(g, q2, horizon, true) / range_sum(g, q1, q2, true);
  rep.square_summable = rep.square_sum_ratio < kTrendThreshold;
  rep.variation_early = window_variation(g, q1);
  rep.variation_late = window_variation(g, q2);
  rep.window_variation = rep.variation_late <= rep.variation_early;

  if (!rep.positive_decreasing) rep.failed.emplace_back("(i) positive and decreasing to zero");
  if (!rep.divergent_sum) rep.failed.emplace_back("(ii) divergent partial sums");
  if (!rep.square_summable) rep.failed.emplace_back("(iii) square-summable");
  if (!rep.window_variation) rep.failed.emplace_back("(iv) vanishing window variation");
  return rep;
}

LearnerState LearnerState::initial(std::size_t features, double alpha, double lambda,
                                   StepsizeSchedule schedule, std::size_t N,
                                   std::optional<double> box) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidInput("learner: lambda must lie in [0, 1]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("learner: alpha must lie in (0, 1)");
  if (N == 0) throw InvalidInput("learner: N must be at least 1");
  if (box && !(*box > 0.0)) throw InvalidInput("learner: box bound must be positive");
  schedule.validate();
  LearnerState ls;
  ls.r = Vector::Zero(static_cast<Eigen::Index>(features));
  ls.z = Vector::Zero(static_cast<Eigen::Index>(features));
  ls.lambda = lambda;
  ls.alpha = alpha;
  ls.schedule = schedule;
  ls.box = box;
  ls.N = N;
  return ls;
}

double observed_td(const Vector& phi_i, const Vector& r, double cost, double alpha,
                   double sigma_estimate) {
  double value = 0.0;
  for (Eigen::Index k = 0; k < r.size(); ++k) value += phi_i(k) * r(k);
  return value - cost - alpha * sigma_estimate;
}

void advance_td0(LearnerState& ls, const Vector& phi_i, double td) {
  const double gamma = ls.schedule(ls.t);
  for (Eigen::Index k = 0; k < ls.r.size(); ++k) ls.r(k) -= gamma * phi_i(k) * td;
  project_box(ls);
  ++ls.t;
}

void advance_tdlambda(LearnerState& ls, const Vector& phi_i, double td) {
  const double decay = ls.lambda * ls.alpha;
  if (!(decay < 1.0)) throw InvalidInput("tdlambda_step: lambda*alpha must be below 1");
  const double gamma = ls.schedule(ls.t);
  for (Eigen::Index k = 0; k < ls.r.size(); ++k) {
    ls.z(k) = decay * ls.z(k) + phi_i(k);
    ls.r(k) -= gamma * ls.z(k) * td;
  }
  project_box(ls);
  ++ls.t;
}

LearnerState td0_step(LearnerState ls, const Vector& phi_i, double td) {
  advance_td0(ls, phi_i, td);
  return ls;
}

LearnerState tdlambda_step(LearnerState ls, const Vector& phi_i, double td) {
  advance_tdlambda(ls, phi_i, td);
  return ls;
}

double lyapunov_W(const Vector& r, const ProjectedSolution& sol) {
  Vector diff = r - sol.r_star;
  if (sol.null_basis.cols() > 0) diff -= sol.null_basis * (sol.null_basis.transpose() * diff);
  return diff.squaredNorm();
}

LearningTrace run_learner(const MarkovChain& chain, const FeatureModel& fm, const RiskMapping& m,
                          LearnerState ls, std::size_t steps, std::uint64_t seed,
                          const LearnerRunOptions& opts) {
  const Matrix& phi = fm.phi();
  if (static_cast<std::size_t>(phi.rows()) != chain.size()) {
    throw InvalidInput("run_learner: feature matrix and chain differ in state count");
  }
  if (ls.r.size() != phi.cols() || ls.z.size() != phi.cols()) {
    throw InvalidInput("run_learner: learner state has the wrong feature dimension");
  }
  if (opts.start_state >= chain.size()) throw InvalidInput("run_learner: start state out of range");

  const TransitionSampler sampler(chain.transition());
  const Rng root(seed);
  Rng trajectory_rng = root.stream(0);
  Rng risk_rng = root.stream(1);
  const bool multistep = ls.lambda > 0.0;

  // Row copies of Phi so the step functions see plain vectors.
  std::vector<Vector> rows(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i) rows[i] = phi.row(Eigen::Index(i)).transpose();

  LearningTrace trace;
  if (opts.keep_records) trace.records.reserve(steps);
  std::size_t done = 0;
  std::vector<double> sample_values(ls.N);
  double abs_td_sum = 0.0;
  std::size_t state = opts.start_state;

  for (std::size_t step = 0; step < steps; ++step) {
    for (std::size_t k = 0; k < ls.N; ++k) {
      const std::size_t j = sampler.next(state, risk_rng);
      double value = 0.0;
      for (Eigen::Index c = 0; c < ls.r.size(); ++c) value += rows[j](c) * ls.r(c);
      sample_values[k] = value;
    }
    const double sigma = evaluate_empirical(m, sample_values);
    const double td = observed_td(rows[state], ls.r, chain.cost()(Eigen::Index(state)), ls.alpha, sigma);

    TraceRecord rec;
    rec.t = ls.t;
    rec.state = state;
    rec.td = td;
    rec.gamma = ls.schedule(ls.t);
    if (multistep) {
      advance_tdlambda(ls, rows[state], td);
    } else {
      advance_td0(ls, rows[state], td);
    }
    rec.W = opts.oracle ? lyapunov_W(ls.r, *opts.oracle) : std::numeric_limits<double>::quiet_NaN();
    if (opts.keep_records) trace.records.push_back(rec);
    if (opts.on_step) opts.on_step(rec, ls);
    abs_td_sum += std::abs(td);
    ++done;
    if (!ls.r.allFinite()) {
      trace.failure = "iterate became non-finite at t=" + std::to_string(rec.t);
      break;
    }
    state = sampler.next(state, trajectory_rng);
  }
  if (done > 0) trace.mean_abs_td = abs_td_sum / static_cast<double>(done);
  trace.final = std::move(ls);
  return trace;
}

void write_trace_csv(std::ostream& os, const LearningTrace& trace) {
  os << "t,state,td,gamma,W\n";
  char buf[128];
  for (const auto& rec : trace.records) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g\n", rec.t, rec.state, rec.td,
                  rec.gamma, rec.W);
    os << buf;
  }
}

}  // namespace riskd

#include "riskd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "riskd/error.hpp"
#include "riskd/projected.hpp"
#include "riskd/rng.hpp"
#include "riskd/td.hpp"

namespace riskd::harness {

namespace {

using io::json;

std::string short_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

json resolve_block(const json& j, const std::string& key, const std::filesystem::path& base_dir) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError("/" + key, "missing required field");
  if (it->is_string()) {
    std::filesystem::path p = it->get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return io::read_json_file(p);
  }
  if (!it->is_object()) throw ConfigError("/" + key, "expected an object or a file path");
  return *it;
}

std::vector<double> number_list(const json& j, const std::string& path, double lo, double hi) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string p = path + "/" + std::to_string(k);
    if (!j[k].is_number()) throw ConfigError(p, "expected a number");
    const double x = j[k].get<double>();
    if (!(x >= lo && x <= hi)) {
      throw ConfigError(p, "must lie in [" + short_number(lo) + ", " + short_number(hi) + "]");
    }
    out.push_back(x);
  }
  return out;
}

std::size_t count_field(const json& j, const std::string& key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer() || j[key].get<std::int64_t>() < 0) {
    throw ConfigError("/" + key, "expected a nonnegative integer");
  }
  return static_cast<std::size_t>(j[key].get<std::int64_t>());
}

bool bool_field(const json& j, const std::string& key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) throw ConfigError("/" + key, "expected true or false");
  return j[key].get<bool>();
}

// Runs job(k) for k in [0, count) on up to `workers` threads. Results land in
// caller-owned slots, so the merge order never depends on scheduling.
template <class Job>
void parallel_for(std::size_t count, std::size_t workers, Job job) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t k = 0; k < count; ++k) job(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          job(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::size_t stride(std::size_t requested, std::size_t steps, std::size_t target) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, steps / target);
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::nan("");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double stderr_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return std::nan("");
  const double mu = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

json schedule_json(const StepsizeSchedule& s, std::size_t steps) {
  json j = io::to_json(validate_schedule(s, std::max<std::size_t>(8, steps)));
  j["a"] = s.a;
  j["b"] = s.b;
  j["p"] = s.p;
  j["horizon"] = std::max<std::size_t>(8, steps);
  return j;
}

// ---------------------------------------------------------------- synthetic

struct SyntheticRep {
  std::vector<ResultRow> rows;
  json record;
  bool failed = false;
};

ExperimentResult run_synthetic(const ExperimentConfig& cfg, std::uint64_t master,
                               std::size_t workers) {
  const MarkovChain& chain = *cfg.chain;
  const auto q = stationary_distribution(chain);
  const FeatureModel fm(cfg.phi, q);
  const auto& lc = cfg.learner;
  const std::size_t every = stride(cfg.record_every, lc.steps, 1000);

  ExperimentResult res;
  json& summary = res.summary;
  summary["scenario"] = "synthetic-mdp";
  summary["seed"] = master;
  summary["replications"] = cfg.replications;
  summary["steps"] = lc.steps;
  summary["lambda"] = lc.lambda;
  summary["N"] = lc.N;
  summary["risk"] = cfg.risk.describe();
  summary["record_every"] = every;
  summary["schedule"] = schedule_json(lc.schedule, lc.steps);
  summary["errors"] = json::array();

  try {
    summary["distortion"] = io::to_json(distortion_coefficient(cfg.risk, chain.transition(), chain.alpha()));
  } catch (const EnumerationLimitError& e) {
    summary["distortion"] = {{"kappa", nullptr}, {"note", e.what()}};
  }

  std::optional<ProjectedSolution> oracle;
  if (cfg.oracle) {
    SolverOptions so;
    so.allow_noncontractive = cfg.force;
    try {
      oracle = lc.lambda > 0.0 ? solve_multistep(fm, chain, cfg.risk, lc.lambda, so)
                               : solve_single_step(fm, chain, cfg.risk, so);
      summary["oracle"] = io::to_json(*oracle);
    } catch (const NumericalError& e) {
      summary["oracle"] = nullptr;
      summary["errors"].push_back({{"stage", "oracle"}, {"message", e.what()}});
      ++res.errors;
    }
  }

  const double oracle_norm = oracle ? q_norm(q.q, oracle->v_star) : 0.0;
  auto relative_error = [&](const Vector& r) {
    const double d = q_norm(q.q, fm.phi() * (r - oracle->r_star));
    return oracle_norm > 0.0 ? d / oracle_norm : d;
  };

  std::vector<SyntheticRep> reps(cfg.replications);
  parallel_for(cfg.replications, workers, [&](std::size_t k) {
    SyntheticRep& out = reps[k];
    const std::uint64_t seed = replication_seed(master, k);
    auto ls = LearnerState::initial(fm.features(), chain.alpha(), lc.lambda, lc.schedule, lc.N, lc.box);
    LearnerRunOptions ro;
    ro.keep_records = false;
    ro.oracle = oracle ? &*oracle : nullptr;
    double window_td = 0.0;
    std::size_t window_n = 0;
    ro.on_step = [&](const TraceRecord& rec, const LearnerState& now) {
      window_td += std::abs(rec.td);
      ++window_n;
      const std::size_t t = rec.t + 1;
      if (t % every != 0 && t != lc.steps && std::isfinite(rec.td)) return;
      out.rows.push_back({k, t, "mean_abs_td", window_td / static_cast<double>(window_n)});
      if (oracle) {
        out.rows.push_back({k, t, "W", rec.W});
        out.rows.push_back({k, t, "rel_error", relative_error(now.r)});
      }
      window_td = 0.0;
      window_n = 0;
    };
    const auto trace = run_learner(chain, fm, cfg.risk, ls, lc.steps, seed, ro);

    json& rec = out.record;
    rec["replication"] = k;
    rec["seed"] = seed;
    rec["r"] = io::to_json(trace.final.r);
    rec["steps_run"] = trace.final.t;
    rec["mean_abs_td"] = number_or_null(trace.mean_abs_td);
    if (oracle) {
      const double err = relative_error(trace.final.r);
      rec["relative_error"] = number_or_null(err);
      rec["W"] = number_or_null(lyapunov_W(trace.final.r, *oracle));
      rec["converged"] = std::isfinite(err) && err <= cfg.tolerance;
    }
    if (trace.failure) {
      rec["error"] = *trace.failure;
      out.failed = true;
    }
  });

  ResultTable table{"results", {}};
  json per_rep = json::array();
  std::vector<double> errors;
  std::size_t converged = 0;
  for (auto& rep : reps) {
    table.rows.insert(table.rows.end(), rep.rows.begin(), rep.rows.end());
    per_rep.push_back(rep.record);
    if (rep.failed) {
      ++res.errors;
      summary["errors"].push_back({{"replication", rep.record["replication"]},
                                   {"message", rep.record["error"]}});
    }
    if (oracle && rep.record["relative_error"].is_number()) {
      errors.push_back(rep.record["relative_error"].get<double>());
      if (rep.record["converged"].get<bool>()) ++converged;
    }
  }
  table.sort();
  res.tables.push_back(std::move(table));
  summary["replication_results"] = per_rep;
  if (oracle) {
    summary["final"] = {{"mean_relative_error", number_or_null(mean_of(errors))},
                        {"tolerance", cfg.tolerance},
                        {"converged", converged}};
  }
  return res;
}

// -------------------------------------------------------------------- fleet

struct FleetRep {
  std::vector<ResultRow> rows;
  std::vector<double> running_average;  // per stage
  json record;
  bool failed = false;
};

ExperimentResult run_fleet(const ExperimentConfig& cfg, std::uint64_t master, std::size_t workers) {
  const fleet::FleetConfig& env = *cfg.env;
  const auto& lc = cfg.learner;
  const std::size_t every = stride(cfg.record_every, lc.steps, 2000);

  struct Point {
    RiskMapping risk;
    double beta;
    double lambda;
    std::string name;
  };
  std::vector<Point> grid;
  const std::vector<double> lambdas = cfg.lambdas.empty() ? std::vector<double>{lc.lambda} : cfg.lambdas;
  const bool beta_grid = !cfg.betas.empty();
  const std::vector<double> betas = beta_grid ? cfg.betas : std::vector<double>{cfg.risk.parameter()};
  for (double beta : betas) {
    for (double lambda : lambdas) {
      Point p{beta_grid ? RiskMapping::mean_semideviation(beta) : cfg.risk, beta, lambda, "results"};
      if (beta_grid || !cfg.lambdas.empty()) {
        p.name = "results_beta" + short_number(beta) + "_lambda" + short_number(lambda);
      }
      grid.push_back(p);
    }
  }

  ExperimentResult res;
  json& summary = res.summary;
  summary["scenario"] = "fleet";
  summary["seed"] = master;
  summary["replications"] = cfg.replications;
  summary["steps"] = lc.steps;
  summary["N"] = lc.N;
  summary["M"] = env.M;
  summary["fleet"] = env.fleet_size;
  summary["alpha"] = env.alpha;
  summary["record_every"] = every;
  summary["cdf_stage"] = cfg.cdf_stage;
  summary["schedule"] = schedule_json(lc.schedule, lc.steps);
  summary["errors"] = json::array();

  const std::size_t jobs = grid.size() * cfg.replications;
  std::vector<FleetRep> reps(jobs);
  parallel_for(jobs, workers, [&](std::size_t job) {
    const std::size_t g = job / std::max<std::size_t>(1, cfg.replications);
    const std::size_t k = job % std::max<std::size_t>(1, cfg.replications);
    const Point& pt = grid[g];
    FleetRep& out = reps[job];
    // Same seed across grid points: every configuration faces the same demand stream.
    const std::uint64_t seed = replication_seed(master, k);
    auto ls = LearnerState::initial(static_cast<std::size_t>(env.M), env.alpha, pt.lambda,
                                    lc.schedule, lc.N, lc.box);
    const auto run = fleet::run_optimistic(env, pt.risk, ls, lc.steps, seed);

    double total = 0.0;
    out.running_average.reserve(run.stages.size());
    for (std::size_t s = 0; s < run.stages.size(); ++s) {
      const auto& st = run.stages[s];
      total += st.profit;
      const double avg = total / static_cast<double>(s + 1);
      out.running_average.push_back(avg);
      const std::size_t t = s + 1;
      if (t % every == 0 || t == run.stages.size()) {
        out.rows.push_back({k, t, "abs_td", std::abs(st.td)});
        out.rows.push_back({k, t, "avg_profit", avg});
        out.rows.push_back({k, t, "profit", st.profit});
      }
    }
    json& rec = out.record;
    rec["replication"] = k;
    rec["seed"] = seed;
    rec["r"] = io::to_json(run.final.r);
    rec["steps_run"] = run.stages.size();
    rec["final_avg_profit"] =
        out.running_average.empty() ? json(nullptr) : number_or_null(out.running_average.back());
    if (run.failure) {
      rec["error"] = *run.failure;
      out.failed = true;
    }
  });

  auto stage_value = [&](const FleetRep& rep) {
    if (rep.running_average.empty()) return std::nan("");
    const std::size_t s = std::min(cfg.cdf_stage, rep.running_average.size());
    return rep.running_average[s == 0 ? 0 : s - 1];
  };

  json points = json::array();
  std::map<std::pair<double, double>, std::size_t> index;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const Point& pt = grid[g];
    index[{pt.beta, pt.lambda}] = g;
    ResultTable table{pt.name, {}};
    json per_rep = json::array();
    std::vector<double> finals;
    for (std::size_t k = 0; k < cfg.replications; ++k) {
      FleetRep& rep = reps[g * cfg.replications + k];
      table.rows.insert(table.rows.end(), rep.rows.begin(), rep.rows.end());
      per_rep.push_back(rep.record);
      if (rep.failed) {
        ++res.errors;
        summary["errors"].push_back({{"file", pt.name},
                                     {"replication", k},
                                     {"message", rep.record["error"]}});
      }
      if (!rep.running_average.empty()) finals.push_back(rep.running_average.back());
    }
    table.sort();
    res.tables.push_back(std::move(table));

    // Mean-semideviation has kappa <= beta; the conditions below use that bound.
    const double kappa = pt.risk.kind() == RiskKind::mean_semideviation ? pt.beta
                         : pt.risk.kind() == RiskKind::expectation    ? 0.0
                                                                      : std::nan("");
    json p;
    p["file"] = pt.name + ".csv";
    p["risk"] = pt.risk.describe();
    p["beta"] = pt.beta;
    p["lambda"] = pt.lambda;
    p["distortion"] = {
        {"kappa_bound", number_or_null(kappa)},
        {"condition_td0", std::isfinite(kappa) && env.alpha * std::sqrt(1.0 + kappa) < 1.0},
        {"condition_tdlambda", std::isfinite(kappa) && env.alpha * (1.0 + kappa) < 1.0},
        {"note", "conditions evaluated at the upper bound kappa <= beta"}};
    p["mean_final_avg_profit"] = number_or_null(mean_of(finals));
    p["stderr_final_avg_profit"] = number_or_null(stderr_of(finals));
    p["replication_results"] = per_rep;
    points.push_back(p);
  }
  summary["grid"] = points;

  // Highest beta against lowest beta at each lambda.
  json comparisons = json::array();
  if (beta_grid && betas.size() >= 2 && cfg.replications > 0) {
    const double lo = *std::min_element(betas.begin(), betas.end());
    const double hi = *std::max_element(betas.begin(), betas.end());
    for (double lambda : lambdas) {
      const std::size_t ga = index[{hi, lambda}];
      const std::size_t gb = index[{lo, lambda}];
      std::vector<double> diff, at_a, at_b;
      for (std::size_t k = 0; k < cfg.replications; ++k) {
        const FleetRep& a = reps[ga * cfg.replications + k];
        const FleetRep& b = reps[gb * cfg.replications + k];
        if (!a.running_average.empty() && !b.running_average.empty()) {
          diff.push_back(a.running_average.back() - b.running_average.back());
        }
        const double va = stage_value(a);
        const double vb = stage_value(b);
        if (std::isfinite(va)) at_a.push_back(va);
        if (std::isfinite(vb)) at_b.push_back(vb);
      }
      json c;
      c["lambda"] = lambda;
      c["beta_a"] = hi;
      c["beta_b"] = lo;
      c["mean_final_avg_profit_difference"] = number_or_null(mean_of(diff));
      c["stderr_difference"] = number_or_null(stderr_of(diff));
      if (!at_a.empty() && !at_b.empty()) {
        const auto cdf_a = empirical_cdf(at_a);
        const auto cdf_b = empirical_cdf(at_b);
        const auto dom = dominance_check(cdf_a, cdf_b);
        auto table_json = [](const std::vector<CdfPoint>& cdf) {
          json t = json::array();
          for (const auto& pt : cdf) t.push_back({pt.value, pt.fraction});
          return t;
        };
        c["cdf_a"] = table_json(cdf_a);
        c["cdf_b"] = table_json(cdf_b);
        c["dominance"] = {{"a_dominates_b", dom.a_dominates_b},
                          {"b_dominates_a", dom.b_dominates_a},
                          {"max_violation_a", dom.max_violation_a},
                          {"max_violation_b", dom.max_violation_b},
                          {"advisory", true}};
      }
      comparisons.push_back(c);
    }
  }
  summary["comparisons"] = comparisons;
  return res;
}

// ---------------------------------------------------------------------- svg

void write_svg(const std::filesystem::path& path, const ResultTable& table) {
  std::string metric;
  for (const char* m : {"avg_profit", "rel_error", "mean_abs_td"}) {
    if (std::any_of(table.rows.begin(), table.rows.end(), [&](const ResultRow& r) { return r.metric == m; })) {
      metric = m;
      break;
    }
  }
  std::map<std::size_t, std::pair<double, std::size_t>> mean;
  for (const auto& r : table.rows) {
    if (r.metric != metric || !std::isfinite(r.value)) continue;
    auto& [sum, count] = mean[r.t];
    sum += r.value;
    ++count;
  }
  std::ofstream os(path);
  const double W = 640, H = 360, pad = 48;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << pad << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << table.name
     << ": mean " << metric << " over replications</text>\n";
  if (mean.size() >= 2) {
    double x0 = static_cast<double>(mean.begin()->first), x1 = static_cast<double>(mean.rbegin()->first);
    double y0 = INFINITY, y1 = -INFINITY;
    for (const auto& [t, sc] : mean) {
      const double y = sc.first / static_cast<double>(sc.second);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
    if (y1 == y0) y1 = y0 + 1.0;
    os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (const auto& [t, sc] : mean) {
      const double y = sc.first / static_cast<double>(sc.second);
      const double px = pad + (static_cast<double>(t) - x0) / (x1 - x0) * (W - 2 * pad);
      const double py = H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad);
      os << io::format_double(px) << ',' << io::format_double(py) << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << pad << "\" y=\"" << H - 16 << "\" font-family=\"sans-serif\" font-size=\"11\">t "
       << x0 << " to " << x1 << "; " << metric << " " << short_number(y0) << " to " << short_number(y1)
       << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace

std::uint64_t replication_seed(std::uint64_t master, std::size_t replication) {
  return derive_seed(master, replication);
}

ExperimentConfig parse_experiment(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("/", "expected an object");
  ExperimentConfig cfg;
  const auto it = j.find("scenario");
  if (it == j.end() || !it->is_string()) throw ConfigError("/scenario", "expected \"synthetic-mdp\" or \"fleet\"");
  const auto scenario = it->get<std::string>();
  if (scenario == "synthetic-mdp") {
    cfg.scenario = Scenario::synthetic_mdp;
  } else if (scenario == "fleet") {
    cfg.scenario = Scenario::fleet;
  } else {
    throw ConfigError("/scenario", "unknown scenario '" + scenario + "' (synthetic-mdp, fleet)");
  }

  cfg.replications = count_field(j, "replications", 1);
  cfg.record_every = count_field(j, "record_every", 0);
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigError("/output", "expected a path string");
    cfg.output = j["output"].get<std::string>();
  }
  if (j.contains("learner")) cfg.learner = io::load_learner(j["learner"], "/learner");
  if (cfg.learner.risk) cfg.risk = *cfg.learner.risk;
  if (j.contains("seed")) {
    cfg.seed = static_cast<std::uint64_t>(count_field(j, "seed", 0));
  } else if (cfg.learner.seed) {
    cfg.seed = *cfg.learner.seed;
  }

  if (cfg.scenario == Scenario::synthetic_mdp) {
    cfg.chain = io::load_chain(resolve_block(j, "mdp", base_dir), "/mdp");
    cfg.phi = io::load_features(resolve_block(j, "features", base_dir), "/features");
    if (static_cast<std::size_t>(cfg.phi.rows()) != cfg.chain->size()) {
      throw ConfigError("/features/Phi", "has " + std::to_string(cfg.phi.rows()) +
                                             " rows but the chain has " +
                                             std::to_string(cfg.chain->size()) + " states");
    }
    if (cfg.phi.cols() > cfg.phi.rows()) throw ConfigError("/features/Phi", "more columns than rows");
    check_ergodic(cfg.chain->transition());
    if (cfg.learner.alpha && *cfg.learner.alpha != cfg.chain->alpha()) {
      throw ConfigError("/learner/alpha", "differs from /mdp/alpha");
    }
    if (cfg.learner.lambda * cfg.chain->alpha() >= 1.0) {
      throw ConfigError("/learner/lambda", "lambda*alpha must be below 1");
    }
    cfg.oracle = bool_field(j, "oracle", true);
    cfg.force = bool_field(j, "force", false);
    if (j.contains("tolerance")) {
      if (!j["tolerance"].is_number() || !(j["tolerance"].get<double>() > 0.0)) {
        throw ConfigError("/tolerance", "expected a positive number");
      }
      cfg.tolerance = j["tolerance"].get<double>();
    }
  } else {
    cfg.env = io::load_fleet(resolve_block(j, "env", base_dir), "/env");
    if (cfg.learner.alpha && *cfg.learner.alpha != cfg.env->alpha) {
      throw ConfigError("/learner/alpha", "differs from /env/alpha");
    }
    if (j.contains("grid")) {
      const json& g = j["grid"];
      if (!g.is_object()) throw ConfigError("/grid", "expected an object");
      if (g.contains("beta")) cfg.betas = number_list(g["beta"], "/grid/beta", 0.0, 1.0);
      if (g.contains("lambda")) cfg.lambdas = number_list(g["lambda"], "/grid/lambda", 0.0, 1.0);
    }
    for (std::size_t k = 0; k < cfg.lambdas.size(); ++k) {
      if (cfg.lambdas[k] * cfg.env->alpha >= 1.0) {
        throw ConfigError("/grid/lambda/" + std::to_string(k), "lambda*alpha must be below 1");
      }
    }
    if (cfg.lambdas.empty() && cfg.learner.lambda * cfg.env->alpha >= 1.0) {
      throw ConfigError("/learner/lambda", "lambda*alpha must be below 1");
    }
    cfg.cdf_stage = count_field(j, "cdf_stage", 200);
    if (cfg.cdf_stage == 0) throw ConfigError("/cdf_stage", "must be at least 1");
  }
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  const json j = io::read_json_file(path);
  return parse_experiment(j, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

void ResultTable::sort() {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.replication != b.replication) return a.replication < b.replication;
    if (a.t != b.t) return a.t < b.t;
    return a.metric < b.metric;
  });
}

void ResultTable::write_csv(std::ostream& os) const {
  os << "replication,t,metric,value\n";
  for (const auto& r : rows) {
    os << r.replication << ',' << r.t << ',' << r.metric << ',' << io::format_double(r.value) << '\n';
  }
}

std::vector<CdfPoint> empirical_cdf(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("empirical_cdf: no values");
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted) {
    if (std::isnan(v)) throw InvalidInput("empirical_cdf: NaN value");
  }
  std::sort(sorted.begin(), sorted.end());
  std::vector<CdfPoint> out;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (k + 1 < sorted.size() && sorted[k + 1] == sorted[k]) continue;
    out.push_back({sorted[k], static_cast<double>(k + 1) / n});
  }
  return out;
}

double cdf_at(const std::vector<CdfPoint>& cdf, double x) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), x,
                             [](double v, const CdfPoint& p) { return v < p.value; });
  return it == cdf.begin() ? 0.0 : std::prev(it)->fraction;
}

DominanceReport dominance_check(const std::vector<CdfPoint>& a, const std::vector<CdfPoint>& b) {
  DominanceReport rep;
  auto scan = [&](const std::vector<CdfPoint>& pts) {
    for (const auto& p : pts) {
      const double fa = cdf_at(a, p.value);
      const double fb = cdf_at(b, p.value);
      rep.max_violation_a = std::max(rep.max_violation_a, fa - fb);
      rep.max_violation_b = std::max(rep.max_violation_b, fb - fa);
    }
  };
  // Both step functions only jump at their own points, so checking there is exhaustive.
  scan(a);
  scan(b);
  rep.a_dominates_b = rep.max_violation_a <= 0.0;
  rep.b_dominates_a = rep.max_violation_b <= 0.0;
  return rep;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  const std::uint64_t master = opts.seed.value_or(cfg.seed);
  const std::size_t workers = std::max<std::size_t>(1, opts.parallel);
  return cfg.scenario == Scenario::synthetic_mdp ? run_synthetic(cfg, master, workers)
                                                 : run_fleet(cfg, master, workers);
}

void write_outputs(const ExperimentResult& res, const std::filesystem::path& dir, bool svg) {
  std::filesystem::create_directories(dir);
  for (const auto& table : res.tables) {
    std::ofstream os(dir / (table.name + ".csv"), std::ios::binary);
    if (!os) throw InvalidInput("cannot write " + (dir / (table.name + ".csv")).string());
    table.write_csv(os);
    if (svg) write_svg(dir / (table.name + ".svg"), table);
  }
  std::ofstream os(dir / "summary.json", std::ios::binary);
  if (!os) throw InvalidInput("cannot write " + (dir / "summary.json").string());
  os << res.summary.dump(2) << '\n';
}

}  // namespace riskd::harness

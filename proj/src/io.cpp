#include "riskd/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "riskd/error.hpp"

namespace riskd::io {

namespace {

std::string join(const std::string& where, const std::string& key) { return where + "/" + key; }

const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where.empty() ? "/" : where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(join(where, key), "missing required field");
  return *it;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "not finite");
  return x;
}

std::int64_t as_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<std::int64_t>();
}

std::size_t as_count(const json& j, const std::string& path) {
  const auto v = as_integer(j, path);
  if (v < 0) throw ConfigError(path, "must be nonnegative");
  return static_cast<std::size_t>(v);
}

Vector as_vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    v(Eigen::Index(k)) = as_number(j[k], path + "/" + std::to_string(k));
  }
  return v;
}

Matrix as_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a nonempty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array()) throw ConfigError(path + "/0", "expected an array of numbers");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const std::string rp = path + "/" + std::to_string(i);
    if (!j[i].is_array()) throw ConfigError(rp, "expected an array of numbers");
    if (j[i].size() != cols) {
      throw ConfigError(rp, "row has " + std::to_string(j[i].size()) + " entries, expected " +
                                std::to_string(cols));
    }
    for (std::size_t k = 0; k < cols; ++k) {
      m(Eigen::Index(i), Eigen::Index(k)) = as_number(j[i][k], rp + "/" + std::to_string(k));
    }
  }
  return m;
}

fleet::IntMatrix as_int_matrix(const json& j, const std::string& path) {
  const Matrix m = as_matrix(j, path);
  fleet::IntMatrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      if (m(i, k) != std::floor(m(i, k))) {
        throw ConfigError(path + "/" + std::to_string(i) + "/" + std::to_string(k),
                          "expected an integer");
      }
      out(i, k) = static_cast<int>(m(i, k));
    }
  }
  return out;
}

// Re-raise an InvalidInput from a constructor as a field diagnostic.
template <class F>
auto with_field(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t k = 0; k < stop; ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("", origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                              ": JSON syntax error");
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path.string());
}

MarkovChain load_chain(const json& j, const std::string& where) {
  const Matrix P = as_matrix(require(j, "P", where), join(where, "P"));
  const Vector c = as_vector(require(j, "c", where), join(where, "c"));
  const double alpha = as_number(require(j, "alpha", where), join(where, "alpha"));
  if (j.contains("n")) {
    const auto n = as_count(j["n"], join(where, "n"));
    if (n != static_cast<std::size_t>(P.rows())) {
      throw ConfigError(join(where, "n"), "n=" + std::to_string(n) + " but P has " +
                                              std::to_string(P.rows()) + " rows");
    }
  }
  return with_field(where.empty() ? "/" : where, [&] { return MarkovChain(P, c, alpha); });
}

Matrix load_features(const json& j, const std::string& where) {
  return as_matrix(require(j, "Phi", where), join(where, "Phi"));
}

RiskMapping load_risk(const json& j, const std::string& where) {
  const json& kind = require(j, "kind", where);
  if (!kind.is_string()) throw ConfigError(join(where, "kind"), "expected a string");
  const auto k = kind.get<std::string>();
  if (k == "expectation") return RiskMapping::expectation();
  if (k == "mean_semideviation") {
    const double beta = as_number(require(j, "beta", where), join(where, "beta"));
    return with_field(join(where, "beta"), [&] { return RiskMapping::mean_semideviation(beta); });
  }
  if (k == "cvar") {
    const double kappa = as_number(require(j, "kappa", where), join(where, "kappa"));
    return with_field(join(where, "kappa"), [&] { return RiskMapping::cvar(kappa); });
  }
  throw ConfigError(join(where, "kind"),
                    "unknown kind '" + k + "' (expectation, mean_semideviation, cvar)");
}

StepsizeSchedule load_schedule(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where, "expected an object");
  StepsizeSchedule s;
  if (j.contains("a")) s.a = as_number(j["a"], join(where, "a"));
  if (j.contains("b")) s.b = as_number(j["b"], join(where, "b"));
  if (j.contains("p")) s.p = as_number(j["p"], join(where, "p"));
  if (!(s.a > 0.0)) throw ConfigError(join(where, "a"), "must be positive");
  if (!(s.b >= 1.0)) throw ConfigError(join(where, "b"), "must be at least 1");
  if (!(s.p >= 0.0)) throw ConfigError(join(where, "p"), "must be nonnegative");
  with_field(where, [&] {
    s.validate();
    return 0;
  });
  return s;
}

LearnerConfig load_learner(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where, "expected an object");
  LearnerConfig cfg;
  if (j.contains("lambda")) cfg.lambda = as_number(j["lambda"], join(where, "lambda"));
  if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0)) {
    throw ConfigError(join(where, "lambda"), "must lie in [0, 1]");
  }
  if (j.contains("alpha")) {
    cfg.alpha = as_number(j["alpha"], join(where, "alpha"));
    if (!(*cfg.alpha > 0.0 && *cfg.alpha < 1.0)) {
      throw ConfigError(join(where, "alpha"), "must lie in (0, 1)");
    }
  }
  if (j.contains("risk")) cfg.risk = load_risk(j["risk"], join(where, "risk"));
  if (j.contains("schedule")) cfg.schedule = load_schedule(j["schedule"], join(where, "schedule"));
  if (j.contains("N")) {
    cfg.N = as_count(j["N"], join(where, "N"));
    if (cfg.N == 0) throw ConfigError(join(where, "N"), "must be at least 1");
  }
  if (j.contains("box")) {
    if (j["box"].is_null()) {
      cfg.box.reset();
    } else {
      cfg.box = as_number(j["box"], join(where, "box"));
      if (!(*cfg.box > 0.0)) throw ConfigError(join(where, "box"), "must be positive");
    }
  }
  if (j.contains("steps")) cfg.steps = as_count(j["steps"], join(where, "steps"));
  if (j.contains("seed")) cfg.seed = static_cast<std::uint64_t>(as_count(j["seed"], join(where, "seed")));
  return cfg;
}

fleet::FleetConfig load_fleet(const json& j, const std::string& where) {
  fleet::FleetConfig cfg;
  cfg.M = static_cast<int>(as_integer(require(j, "M", where), join(where, "M")));
  if (cfg.M < 1) throw ConfigError(join(where, "M"), "must be at least 1");
  cfg.fleet_size = static_cast<int>(as_integer(require(j, "fleet", where), join(where, "fleet")));
  cfg.c_empty = as_matrix(require(j, "c_empty", where), join(where, "c_empty"));
  cfg.c_loaded = as_matrix(require(j, "c_loaded", where), join(where, "c_loaded"));
  if (j.contains("alpha")) cfg.alpha = as_number(j["alpha"], join(where, "alpha"));

  const json& d = require(j, "demand", where);
  const std::string dw = join(where, "demand");
  const json& kind = require(d, "kind", dw);
  if (!kind.is_string()) throw ConfigError(join(dw, "kind"), "expected a string");
  const auto k = kind.get<std::string>();
  using Kind = fleet::DemandModel::Kind;
  if (k == "zero") {
    cfg.demand.kind = Kind::zero;
  } else if (k == "deterministic") {
    cfg.demand.kind = Kind::deterministic;
    cfg.demand.value = static_cast<int>(as_integer(require(d, "value", dw), join(dw, "value")));
  } else if (k == "truncated_poisson") {
    cfg.demand.kind = Kind::truncated_poisson;
    if (d.contains("mean")) cfg.demand.mean = as_number(d["mean"], join(dw, "mean"));
    if (d.contains("cap")) cfg.demand.cap = static_cast<int>(as_integer(d["cap"], join(dw, "cap")));
  } else if (k == "scenarios") {
    cfg.demand.kind = Kind::scenarios;
    const json& mats = require(d, "matrices", dw);
    if (!mats.is_array()) throw ConfigError(join(dw, "matrices"), "expected an array");
    for (std::size_t s = 0; s < mats.size(); ++s) {
      cfg.demand.matrices.push_back(as_int_matrix(mats[s], join(dw, "matrices/" + std::to_string(s))));
    }
    const Vector p = as_vector(require(d, "probabilities", dw), join(dw, "probabilities"));
    cfg.demand.probabilities.assign(p.data(), p.data() + p.size());
  } else {
    throw ConfigError(join(dw, "kind"),
                      "unknown kind '" + k + "' (zero, deterministic, truncated_poisson, scenarios)");
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(join(where, e.field()), e.detail());
  }
  return cfg;
}

json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const ProjectedSolution& sol) {
  json j;
  j["equation"] = sol.equation == ProjectedEquation::single_step ? "single_step" : "multistep";
  j["lambda"] = sol.lambda;
  j["r_star"] = to_json(sol.r_star);
  j["v_star"] = to_json(sol.v_star);
  j["residual"] = sol.residual;
  j["drift_norm"] = sol.drift_norm;
  j["iterations"] = sol.iterations;
  j["unique"] = sol.unique;
  j["kappa"] = std::isfinite(sol.kappa) ? json(sol.kappa) : json(nullptr);
  j["contraction_condition"] = sol.contraction_condition;
  if (sol.equation == ProjectedEquation::multistep) j["step_size"] = sol.step_size;
  if (!sol.note.empty()) j["note"] = sol.note;
  return j;
}

json to_json(const DistortionReport& rep) {
  json j;
  j["kappa"] = rep.kappa;
  j["condition_td0"] = rep.condition_td0;
  j["condition_tdlambda"] = rep.condition_tdlambda;
  j["analytic"] = rep.analytic;
  if (rep.witness) {
    j["witness"] = {{"row", rep.witness->row},
                    {"column", rep.witness->column},
                    {"vertex", to_json(rep.witness->vertex)}};
  }
  return j;
}

json to_json(const ScheduleReport& rep) {
  json j;
  j["ok"] = rep.ok();
  j["positive_decreasing"] = rep.positive_decreasing;
  j["divergent_sum"] = rep.divergent_sum;
  j["square_summable"] = rep.square_summable;
  j["window_variation"] = rep.window_variation;
  j["final_step"] = rep.final_step;
  j["sum_growth_ratio"] = rep.sum_growth_ratio;
  j["square_sum_ratio"] = rep.square_sum_ratio;
  j["variation_early"] = rep.variation_early;
  j["variation_late"] = rep.variation_late;
  j["failed"] = rep.failed;
  return j;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace riskd::io

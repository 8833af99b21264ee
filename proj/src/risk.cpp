#include "riskd/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "riskd/error.hpp"

namespace riskd {

namespace {

constexpr double kProbabilityTolerance = 1e-10;

std::vector<std::size_t> support_of(const Vector& p) {
  std::vector<std::size_t> s;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (p(j) > 0.0) s.push_back(static_cast<std::size_t>(j));
  }
  return s;
}

// Weighted sums over (weight, value) pairs; the two evaluate paths share these.
template <class Weight, class Value>
double mean_of(std::size_t count, Weight weight, Value value) {
  double mu = 0.0;
  for (std::size_t k = 0; k < count; ++k) mu += weight(k) * value(k);
  return mu;
}

template <class Weight, class Value>
double semideviation_of(std::size_t count, Weight weight, Value value, double mu) {
  double dev = 0.0;
  for (std::size_t k = 0; k < count; ++k) dev += weight(k) * std::max(0.0, value(k) - mu);
  return dev;
}

template <class Weight, class Value>
double cvar_of(std::size_t count, Weight weight, Value value, double kappa) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < count; ++c) {
    if (!(weight(c) > 0.0)) continue;
    const double t = value(c);
    double excess = 0.0;
    for (std::size_t k = 0; k < count; ++k) excess += weight(k) * std::max(0.0, value(k) - t);
    best = std::min(best, t + excess / kappa);
  }
  return best;
}

template <class Weight, class Value>
double evaluate_generic(const RiskMapping& m, std::size_t count, Weight weight, Value value) {
  switch (m.kind()) {
    case RiskKind::expectation:
      return mean_of(count, weight, value);
    case RiskKind::mean_semideviation: {
      const double mu = mean_of(count, weight, value);
      return mu + m.parameter() * semideviation_of(count, weight, value, mu);
    }
    case RiskKind::cvar:
      return cvar_of(count, weight, value, m.parameter());
  }
  return 0.0;
}

// Vertices equal up to rounding are merged.
void add_unique(std::map<std::vector<long long>, Vector>& into, Vector mu) {
  std::vector<long long> key(static_cast<std::size_t>(mu.size()));
  for (Eigen::Index j = 0; j < mu.size(); ++j) {
    key[static_cast<std::size_t>(j)] = std::llround(mu(j) * 1e12);
  }
  into.emplace(std::move(key), std::move(mu));
}

void check_support(const std::vector<std::size_t>& support, std::size_t limit) {
  if (support.size() > limit) {
    std::ostringstream os;
    os << "envelope enumeration needs support size <= " << limit << ", got " << support.size()
       << "; use the analytic distortion bound instead";
    throw EnumerationLimitError(os.str());
  }
}

double row_distortion_closed_form(const Vector& p, std::size_t& argmin) {
  double min_p = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (p(j) > 0.0 && p(j) < min_p) {
      min_p = p(j);
      argmin = static_cast<std::size_t>(j);
    }
  }
  return 1.0 - min_p;
}

}  // namespace

RiskMapping RiskMapping::mean_semideviation(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw InvalidInput("mean-semideviation beta must lie in [0, 1]");
  }
  return RiskMapping(RiskKind::mean_semideviation, beta);
}

RiskMapping RiskMapping::cvar(double kappa) {
  if (!(kappa > 0.0 && kappa <= 1.0)) throw InvalidInput("CVaR kappa must lie in (0, 1]");
  return RiskMapping(RiskKind::cvar, kappa);
}

std::string RiskMapping::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case RiskKind::expectation: os << "expectation"; break;
    case RiskKind::mean_semideviation: os << "mean_semideviation(beta=" << parameter_ << ")"; break;
    case RiskKind::cvar: os << "cvar(kappa=" << parameter_ << ")"; break;
  }
  return os.str();
}

void validate_probability(const Vector& p) {
  if (p.size() == 0) throw InvalidInput("probability vector is empty");
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (!std::isfinite(p(j)) || p(j) < 0.0) {
      throw InvalidInput("probability entry " + std::to_string(j) + " is negative or not finite");
    }
  }
  if (std::abs(p.sum() - 1.0) > kProbabilityTolerance) {
    throw InvalidInput("probability vector does not sum to 1");
  }
}

double evaluate(const RiskMapping& m, const Vector& p, const Vector& v) {
  validate_probability(p);
  if (v.size() != p.size()) throw InvalidInput("evaluate: p and v differ in dimension");
  return evaluate_generic(
      m, static_cast<std::size_t>(p.size()),
      [&](std::size_t k) { return p(Eigen::Index(k)); },
      [&](std::size_t k) { return v(Eigen::Index(k)); });
}

double evaluate_empirical(const RiskMapping& m, std::span<const double> values) {
  if (values.empty()) throw InvalidInput("evaluate_empirical: empty sample");
  const double w = 1.0 / static_cast<double>(values.size());
  if (m.kind() == RiskKind::expectation || m.kind() == RiskKind::mean_semideviation) {
    // mean as sum/N so that a single sample returns its value exactly
    double sum = 0.0;
    for (double x : values) sum += x;
    const double mu = sum / static_cast<double>(values.size());
    if (m.kind() == RiskKind::expectation) return mu;
    double dev = 0.0;
    for (double x : values) dev += std::max(0.0, x - mu);
    return mu + m.parameter() * (dev / static_cast<double>(values.size()));
  }
  return cvar_of(
      values.size(), [w](std::size_t) { return w; }, [&](std::size_t k) { return values[k]; },
      m.parameter());
}

Vector apply_operator(const RiskMapping& m, const Matrix& P, const Vector& v) {
  if (P.cols() != v.size()) throw InvalidInput("apply_operator: dimension mismatch");
  Vector out(P.rows());
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    out(i) = evaluate(m, P.row(i).transpose(), v);
  }
  return out;
}

EnvelopeVertexSet envelope_vertices(const RiskMapping& m, const Vector& p,
                                    std::size_t support_limit) {
  validate_probability(p);
  EnvelopeVertexSet out;
  out.base = p;
  if (m.kind() == RiskKind::expectation ||
      (m.kind() == RiskKind::cvar && m.parameter() == 1.0)) {
    out.vertices.push_back(p);
    return out;
  }
  const auto support = support_of(p);
  check_support(support, support_limit);
  const std::size_t s = support.size();
  std::map<std::vector<long long>, Vector> unique;

  if (m.kind() == RiskKind::mean_semideviation) {
    const double beta = m.parameter();
    for (std::size_t mask = 0; mask < (std::size_t{1} << s); ++mask) {
      double pd = 0.0;
      for (std::size_t k = 0; k < s; ++k) {
        if (mask >> k & 1U) pd += p(Eigen::Index(support[k]));
      }
      Vector mu = Vector::Zero(p.size());
      for (std::size_t k = 0; k < s; ++k) {
        const double delta = (mask >> k & 1U) ? 1.0 : 0.0;
        const auto j = Eigen::Index(support[k]);
        mu(j) = p(j) * (1.0 + beta * (delta - pd));
      }
      add_unique(unique, std::move(mu));
    }
  } else {
    // Basic feasible points of {0 <= mu_j <= p_j/kappa, sum mu = 1}: every
    // coordinate but at most one sits at a bound.
    const double kappa = m.parameter();
    for (std::size_t free = 0; free <= s; ++free) {
      const std::size_t bound_count = free < s ? s - 1 : s;
      for (std::size_t mask = 0; mask < (std::size_t{1} << bound_count); ++mask) {
        Vector mu = Vector::Zero(p.size());
        double total = 0.0;
        std::size_t bit = 0;
        for (std::size_t k = 0; k < s; ++k) {
          if (k == free) continue;
          if (mask >> bit++ & 1U) {
            const auto j = Eigen::Index(support[k]);
            mu(j) = p(j) / kappa;
            total += mu(j);
          }
        }
        if (free < s) {
          const auto j = Eigen::Index(support[free]);
          const double rest = 1.0 - total;
          if (rest < -1e-12 || rest > p(j) / kappa + 1e-12) continue;
          mu(j) = std::clamp(rest, 0.0, p(j) / kappa);
        } else if (std::abs(total - 1.0) > 1e-12) {
          continue;
        }
        add_unique(unique, std::move(mu));
      }
    }
  }
  out.vertices.reserve(unique.size());
  for (auto& [key, mu] : unique) out.vertices.push_back(std::move(mu));
  return out;
}

DistortionReport distortion_coefficient(const RiskMapping& m, const Matrix& P, double alpha,
                                        std::size_t support_limit) {
  validate_stochastic(P, 1e-10);
  DistortionReport report;
  report.kappa = 0.0;
  if (m.kind() == RiskKind::expectation ||
      (m.kind() == RiskKind::mean_semideviation && m.parameter() == 0.0) ||
      (m.kind() == RiskKind::cvar && m.parameter() == 1.0)) {
    const Vector row = P.row(0).transpose();
    const auto support = support_of(row);
    report.witness = DistortionWitness{0, support.front(), row};
    report.analytic = true;
  } else {
    bool analytic = false;
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      const Vector p = P.row(i).transpose();
      const auto support = support_of(p);
      if (support.size() > support_limit && m.kind() == RiskKind::mean_semideviation) {
        // max_delta |delta_j - <p, delta>| = 1 - p_j, attained at delta = e_j
        std::size_t j = 0;
        const double k = m.parameter() * row_distortion_closed_form(p, j);
        analytic = true;
        if (k > report.kappa || !report.witness) {
          const double pj = p(Eigen::Index(j));
          Vector mu = p * (1.0 - m.parameter() * pj);
          mu(Eigen::Index(j)) = pj * (1.0 + m.parameter() * (1.0 - pj));
          report.kappa = std::max(report.kappa, k);
          report.witness = DistortionWitness{static_cast<std::size_t>(i), j, std::move(mu)};
        }
        continue;
      }
      const auto env = envelope_vertices(m, p, support_limit);
      for (const auto& mu : env.vertices) {
        for (std::size_t j : support) {
          const auto jj = Eigen::Index(j);
          const double k = std::abs(mu(jj) - p(jj)) / p(jj);
          if (k > report.kappa || !report.witness) {
            report.kappa = std::max(report.kappa, k);
            report.witness = DistortionWitness{static_cast<std::size_t>(i), j, mu};
          }
        }
      }
    }
    report.analytic = analytic;
  }
  report.condition_td0 = alpha * std::sqrt(1.0 + report.kappa) < 1.0;
  report.condition_tdlambda = alpha * (1.0 + report.kappa) < 1.0;
  return report;
}

SampleRiskEstimate sample_plug_in(const RiskMapping& m, std::span<const std::size_t> successors,
                                  const Vector& v) {
  if (successors.empty()) throw InvalidInput("sample_plug_in: empty sample");
  Vector empirical = Vector::Zero(v.size());
  const double w = 1.0 / static_cast<double>(successors.size());
  for (std::size_t j : successors) {
    if (j >= static_cast<std::size_t>(v.size())) {
      throw InvalidInput("sample_plug_in: successor index out of range");
    }
    empirical(Eigen::Index(j)) += w;
  }
  SampleRiskEstimate out;
  out.value = evaluate(m, empirical, v);
  out.sample.assign(successors.begin(), successors.end());
  out.N = successors.size();
  return out;
}

double exact_sample_mapping(const RiskMapping& m, const Vector& p, const Vector& v, std::size_t N,
                            std::size_t tuple_limit) {
  validate_probability(p);
  if (v.size() != p.size()) throw InvalidInput("exact_sample_mapping: dimension mismatch");
  if (N == 0) throw InvalidInput("exact_sample_mapping: N must be positive");
  const auto support = support_of(p);
  const std::size_t s = support.size();
  std::size_t tuples = 1;
  for (std::size_t k = 0; k < N; ++k) {
    if (tuples > tuple_limit / s) {
      std::ostringstream os;
      os << "exact_sample_mapping: " << s << "^" << N << " tuples exceed the limit of "
         << tuple_limit << "; use a Monte-Carlo check instead";
      throw EnumerationLimitError(os.str());
    }
    tuples *= s;
  }
  std::vector<std::size_t> index(N, 0);
  std::vector<double> values(N);
  double total = 0.0;
  for (std::size_t t = 0; t < tuples; ++t) {
    double weight = 1.0;
    for (std::size_t k = 0; k < N; ++k) {
      const auto j = Eigen::Index(support[index[k]]);
      weight *= p(j);
      values[k] = v(j);
    }
    total += weight * evaluate_empirical(m, values);
    for (std::size_t k = 0; k < N; ++k) {  // odometer
      if (++index[k] < s) break;
      index[k] = 0;
    }
  }
  return total;
}

}  // namespace riskd

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskd/markov.hpp"

namespace riskd {

inline constexpr std::size_t kEnvelopeSupportLimit = 12;
inline constexpr std::size_t kSampleTupleLimit = 1'000'000;

enum class RiskKind { expectation, mean_semideviation, cvar };

/// Coherent transition risk mapping sigma(p, v) on costs.
///
/// - expectation:        <p, v>
/// - mean_semideviation: mu + beta * sum_j p_j (v_j - mu)_+,  mu = <p, v>,  beta in [0, 1]
/// - cvar:               min_t t + (1/kappa) sum_j p_j (v_j - t)_+,  kappa in (0, 1]
class RiskMapping {
 public:
  static RiskMapping expectation() { return RiskMapping(RiskKind::expectation, 0.0); }
  static RiskMapping mean_semideviation(double beta);
  static RiskMapping cvar(double kappa);

  RiskKind kind() const noexcept { return kind_; }
  /// beta for mean-semideviation, kappa for CVaR, 0 for expectation.
  double parameter() const noexcept { return parameter_; }
  std::string describe() const;

  friend bool operator==(const RiskMapping&, const RiskMapping&) = default;

 private:
  RiskMapping(RiskKind kind, double parameter) : kind_(kind), parameter_(parameter) {}
  RiskKind kind_;
  double parameter_;
};

/// Extreme points of the dual set A(p): sigma(p, v) = max_mu <mu, v>.
struct EnvelopeVertexSet {
  std::vector<Vector> vertices;
  Vector base;
};

struct DistortionWitness {
  std::size_t row = 0;
  std::size_t column = 0;
  Vector vertex;
};

struct DistortionReport {
  double kappa = 0.0;
  std::optional<DistortionWitness> witness;
  bool condition_td0 = false;      ///< alpha * sqrt(1 + kappa) < 1
  bool condition_tdlambda = false; ///< alpha * (1 + kappa) < 1
  bool analytic = false;           ///< computed from a closed form rather than enumeration
};

struct SampleRiskEstimate {
  double value = 0.0;
  std::vector<std::size_t> sample;
  std::size_t N = 0;
};

/// Throws InvalidInput unless p is a finite, nonnegative vector summing to 1.
void validate_probability(const Vector& p);

double evaluate(const RiskMapping& m, const Vector& p, const Vector& v);

/// sigma on the equally weighted empirical distribution of `values`.
double evaluate_empirical(const RiskMapping& m, std::span<const double> values);

/// Row-wise sigma(P_i, v).
Vector apply_operator(const RiskMapping& m, const Matrix& P, const Vector& v);

EnvelopeVertexSet envelope_vertices(const RiskMapping& m, const Vector& p,
                                    std::size_t support_limit = kEnvelopeSupportLimit);

/// max |mu_ij - p_ij| / p_ij over rows, envelope vertices and p_ij > 0.
/// Mean-semideviation rows above the enumeration limit use the closed form
/// beta * (1 - min_j p_ij); CVaR rows above the limit are an error.
DistortionReport distortion_coefficient(const RiskMapping& m, const Matrix& P, double alpha,
                                        std::size_t support_limit = kEnvelopeSupportLimit);

/// Plug-in estimate sigma(P^N, v) with P^N the empirical law of `successors`.
SampleRiskEstimate sample_plug_in(const RiskMapping& m, std::span<const std::size_t> successors,
                                  const Vector& v);

/// E[sigma(P^N, v)] over all N-tuples drawn from p, by enumeration.
double exact_sample_mapping(const RiskMapping& m, const Vector& p, const Vector& v, std::size_t N,
                            std::size_t tuple_limit = kSampleTupleLimit);

}  // namespace riskd

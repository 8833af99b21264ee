#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <vector>

#include "riskd/rng.hpp"

namespace riskd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kRowSumTolerance = 1e-12;

/// Markov chain induced by a fixed policy: transition matrix P, per-state
/// cost c and discount alpha. Immutable; the constructor validates.
class MarkovChain {
 public:
  /// Throws InvalidInput naming the first offending row/entry.
  MarkovChain(Matrix transition, Vector cost, double alpha);

  std::size_t size() const noexcept { return static_cast<std::size_t>(transition_.rows()); }
  const Matrix& transition() const noexcept { return transition_; }
  const Vector& cost() const noexcept { return cost_; }
  double alpha() const noexcept { return alpha_; }

 private:
  Matrix transition_;
  Vector cost_;
  double alpha_;
};

/// Throws InvalidInput unless `P` is square, nonnegative and row-stochastic
/// within `tol`.
void validate_stochastic(const Matrix& P, double tol = kRowSumTolerance);

struct StationaryDistribution {
  Vector q;
  double residual = 0.0;  ///< ||q^T P - q^T||_inf
};

struct MultistepMatrix {
  Matrix pbar;
  double lambda = 0.0;
  double alpha = 0.0;
};

struct Trajectory {
  std::vector<std::size_t> states;
  std::uint64_t seed = 0;
  std::size_t length = 0;  ///< number of transitions; states.size() == length + 1
};

/// Throws ErgodicityError if the transition graph of `P` is not strongly
/// connected or its period exceeds one.
void check_ergodic(const Matrix& P);

/// Period of an irreducible chain (gcd of cycle lengths through state 0).
std::size_t chain_period(const Matrix& P);

/// Direct linear solve for n <= 2000, power iteration above.
StationaryDistribution stationary_distribution(const MarkovChain& chain, double tol = 1e-12);

/// Rows nu(i) of the Poisson equation nu(i) = e_i - q + sum_j P_ij nu(j),
/// normalized as nu = Z - 1 q^T with Z the fundamental matrix.
Matrix poisson_solution(const MarkovChain& chain, const StationaryDistribution& q);

/// (1 - lambda*alpha) (I - lambda*alpha*P)^{-1}.
MultistepMatrix multistep_matrix(const MarkovChain& chain, double lambda);

/// Solves v = c + alpha P v.
Vector neutral_policy_value(const MarkovChain& chain);

/// Inverse-CDF sampler over the rows of a row-stochastic matrix. Never
/// returns a zero-probability successor.
class TransitionSampler {
 public:
  explicit TransitionSampler(const Matrix& P);

  std::size_t next(std::size_t state, Rng& rng) const;
  std::size_t size() const noexcept { return n_; }

 private:
  std::size_t n_;
  std::vector<double> cumulative_;            // row-major, n*n
  std::vector<std::size_t> last_positive_;    // per row
};

Trajectory simulate(const MarkovChain& chain, std::size_t start, std::size_t steps, Rng& rng);
Trajectory simulate(const MarkovChain& chain, std::size_t start, std::size_t steps,
                    std::uint64_t seed);

double q_inner(const Vector& q, const Vector& a, const Vector& b);
double q_norm(const Vector& q, const Vector& h);

}  // namespace riskd

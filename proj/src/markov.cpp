#include "riskd/markov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>

#include "riskd/error.hpp"

namespace riskd {

namespace {

constexpr std::size_t kDirectSolveLimit = 2000;

std::vector<std::size_t> bfs_levels(const Matrix& P, bool reverse) {
  const auto n = static_cast<std::size_t>(P.rows());
  constexpr auto unseen = static_cast<std::size_t>(-1);
  std::vector<std::size_t> level(n, unseen);
  std::queue<std::size_t> frontier;
  level[0] = 0;
  frontier.push(0);
  while (!frontier.empty()) {
    const auto u = frontier.front();
    frontier.pop();
    for (std::size_t v = 0; v < n; ++v) {
      const double w = reverse ? P(Eigen::Index(v), Eigen::Index(u)) : P(Eigen::Index(u), Eigen::Index(v));
      if (w > 0.0 && level[v] == unseen) {
        level[v] = level[u] + 1;
        frontier.push(v);
      }
    }
  }
  return level;
}

}  // namespace

void validate_stochastic(const Matrix& P, double tol) {
  if (P.rows() == 0 || P.rows() != P.cols()) {
    std::ostringstream os;
    os << "transition matrix must be square and nonempty, got " << P.rows() << "x" << P.cols();
    throw InvalidInput(os.str());
  }
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      if (!std::isfinite(P(i, j)) || P(i, j) < 0.0) {
        std::ostringstream os;
        os << "transition matrix entry P[" << i << "][" << j << "] = " << P(i, j)
           << " is negative or not finite";
        throw InvalidInput(os.str());
      }
    }
    const double s = P.row(i).sum();
    if (std::abs(s - 1.0) > tol) {
      std::ostringstream os;
      os.precision(17);
      os << "row " << i << " of the transition matrix sums to " << s << ", not 1";
      throw InvalidInput(os.str());
    }
  }
}

MarkovChain::MarkovChain(Matrix transition, Vector cost, double alpha)
    : transition_(std::move(transition)), cost_(std::move(cost)), alpha_(alpha) {
  validate_stochastic(transition_);
  if (cost_.size() != transition_.rows()) {
    std::ostringstream os;
    os << "cost vector has " << cost_.size() << " entries, expected " << transition_.rows();
    throw InvalidInput(os.str());
  }
  for (Eigen::Index i = 0; i < cost_.size(); ++i) {
    if (!std::isfinite(cost_(i))) {
      throw InvalidInput("cost entry c[" + std::to_string(i) + "] is not finite");
    }
  }
  if (!(alpha_ > 0.0 && alpha_ < 1.0)) {
    std::ostringstream os;
    os << "discount alpha = " << alpha_ << " must lie strictly inside (0, 1)";
    throw InvalidInput(os.str());
  }
}

std::size_t chain_period(const Matrix& P) {
  const auto level = bfs_levels(P, false);
  const auto n = static_cast<std::size_t>(P.rows());
  std::size_t g = 0;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (P(Eigen::Index(u), Eigen::Index(v)) > 0.0) {
        const auto lu = static_cast<long long>(level[u]);
        const auto lv = static_cast<long long>(level[v]);
        g = std::gcd(g, static_cast<std::size_t>(std::llabs(lu + 1 - lv)));
      }
    }
  }
  return g;
}

void check_ergodic(const Matrix& P) {
  validate_stochastic(P);
  constexpr auto unseen = static_cast<std::size_t>(-1);
  const auto forward = bfs_levels(P, false);
  const auto backward = bfs_levels(P, true);
  for (std::size_t j = 0; j < forward.size(); ++j) {
    if (forward[j] == unseen) {
      throw ErgodicityError("chain is reducible: state " + std::to_string(j) +
                            " is not reachable from state 0");
    }
    if (backward[j] == unseen) {
      throw ErgodicityError("chain is reducible: state 0 is not reachable from state " +
                            std::to_string(j));
    }
  }
  const auto period = chain_period(P);
  if (period != 1) {
    throw ErgodicityError("chain is periodic with period " + std::to_string(period));
  }
}

StationaryDistribution stationary_distribution(const MarkovChain& chain, double tol) {
  if (!(tol > 0.0)) throw InvalidInput("stationary_distribution: tol must be positive");
  const Matrix& P = chain.transition();
  check_ergodic(P);
  const auto n = P.rows();

  StationaryDistribution out;
  if (static_cast<std::size_t>(n) <= kDirectSolveLimit) {
    Matrix A(n + 1, n);
    A.topRows(n) = P.transpose() - Matrix::Identity(n, n);
    A.row(n).setOnes();
    Vector b = Vector::Zero(n + 1);
    b(n) = 1.0;
    out.q = A.colPivHouseholderQr().solve(b);
  } else {
    out.q = Vector::Constant(n, 1.0 / static_cast<double>(n));
    for (std::size_t it = 0;; ++it) {
      Vector next = P.transpose() * out.q;
      next /= next.sum();
      const double change = (next - out.q).cwiseAbs().maxCoeff();
      out.q = std::move(next);
      if (change <= tol * 0.1) break;
      if (it > 1'000'000) throw NumericalError("power iteration did not converge", change);
    }
  }
  out.q = out.q.cwiseMax(0.0);
  out.q /= out.q.sum();
  out.residual = (P.transpose() * out.q - out.q).cwiseAbs().maxCoeff();
  if (out.residual > tol) {
    throw NumericalError("stationary distribution residual exceeds tolerance", out.residual);
  }
  return out;
}

Matrix poisson_solution(const MarkovChain& chain, const StationaryDistribution& q) {
  const Matrix& P = chain.transition();
  const auto n = P.rows();
  if (q.q.size() != n) throw InvalidInput("poisson_solution: q has the wrong dimension");
  const Matrix ones_q = Vector::Ones(n) * q.q.transpose();
  const Matrix fundamental_inv = Matrix::Identity(n, n) - P + ones_q;
  Eigen::FullPivLU<Matrix> lu(fundamental_inv);
  if (!lu.isInvertible()) {
    throw NumericalError("fundamental matrix (I - P + 1q^T) is singular");
  }
  return lu.inverse() - ones_q;
}

MultistepMatrix multistep_matrix(const MarkovChain& chain, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidInput("multistep_matrix: lambda must lie in [0, 1]");
  }
  const double decay = lambda * chain.alpha();
  if (decay >= 1.0) throw InvalidInput("multistep_matrix: lambda*alpha must be below 1");
  const auto n = chain.transition().rows();
  MultistepMatrix out;
  out.lambda = lambda;
  out.alpha = chain.alpha();
  const Matrix system = Matrix::Identity(n, n) - decay * chain.transition();
  out.pbar = (1.0 - decay) * system.partialPivLu().solve(Matrix::Identity(n, n));
  return out;
}

Vector neutral_policy_value(const MarkovChain& chain) {
  const auto n = chain.transition().rows();
  const Matrix system = Matrix::Identity(n, n) - chain.alpha() * chain.transition();
  return system.partialPivLu().solve(chain.cost());
}

TransitionSampler::TransitionSampler(const Matrix& P)
    : n_(static_cast<std::size_t>(P.rows())), cumulative_(n_ * n_), last_positive_(n_, 0) {
  validate_stochastic(P);
  for (std::size_t i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      const double p = P(Eigen::Index(i), Eigen::Index(j));
      acc += p;
      cumulative_[i * n_ + j] = acc;
      if (p > 0.0) last_positive_[i] = j;
    }
  }
}

std::size_t TransitionSampler::next(std::size_t state, Rng& rng) const {
  const double u = rng.uniform();
  const auto first = cumulative_.begin() + static_cast<std::ptrdiff_t>(state * n_);
  const auto last = first + static_cast<std::ptrdiff_t>(n_);
  const auto it = std::upper_bound(first, last, u);
  if (it == last) return last_positive_[state];
  return static_cast<std::size_t>(it - first);
}

Trajectory simulate(const MarkovChain& chain, std::size_t start, std::size_t steps, Rng& rng) {
  if (start >= chain.size()) throw InvalidInput("simulate: start state out of range");
  const TransitionSampler sampler(chain.transition());
  Trajectory out;
  out.seed = rng.seed();
  out.length = steps;
  out.states.reserve(steps + 1);
  out.states.push_back(start);
  for (std::size_t t = 0; t < steps; ++t) {
    out.states.push_back(sampler.next(out.states.back(), rng));
  }
  return out;
}

Trajectory simulate(const MarkovChain& chain, std::size_t start, std::size_t steps,
                    std::uint64_t seed) {
  Rng rng(seed);
  return simulate(chain, start, steps, rng);
}

double q_inner(const Vector& q, const Vector& a, const Vector& b) {
  return (q.array() * a.array() * b.array()).sum();
}

double q_norm(const Vector& q, const Vector& h) { return std::sqrt(q_inner(q, h, h)); }

}  // namespace riskd

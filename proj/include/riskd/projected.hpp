#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "riskd/markov.hpp"
#include "riskd/risk.hpp"

namespace riskd {

/// Feature matrix Phi (row i = phi(i)^T) with the stationary weights that
/// define the projection norm ||w||_q.
class FeatureModel {
 public:
  FeatureModel(Matrix phi, StationaryDistribution q);

  const Matrix& phi() const noexcept { return phi_; }
  const Vector& weights() const noexcept { return q_.q; }
  const StationaryDistribution& stationary() const noexcept { return q_; }
  std::size_t states() const noexcept { return static_cast<std::size_t>(phi_.rows()); }
  std::size_t features() const noexcept { return static_cast<std::size_t>(phi_.cols()); }
  std::size_t rank() const noexcept { return rank_; }
  bool rank_full() const noexcept { return rank_ == features(); }

  /// Minimum-norm argmin_r ||Phi r - w||_q.
  Vector fit(const Vector& w) const;
  /// Orthonormal basis of null(Phi), m x (m - rank).
  const Matrix& null_basis() const noexcept { return null_basis_; }
  /// Largest eigenvalue of Phi^T Q Phi.
  double gram_max_eigenvalue() const noexcept { return gram_max_; }

 private:
  Matrix phi_;
  StationaryDistribution q_;
  std::size_t rank_ = 0;
  Matrix null_basis_;
  double gram_max_ = 0.0;
  Eigen::CompleteOrthogonalDecomposition<Matrix> weighted_;
};

enum class ProjectedEquation { single_step, multistep };

struct ProjectedSolution {
  Vector r_star;
  Vector v_star;               ///< Phi r_star
  double residual = 0.0;       ///< ||v - D(v)||_q, or ||L Pbar (Phi r - c - alpha sigma)||_q
  double drift_norm = 0.0;     ///< ||U(r*)|| or ||Ubar(r*)||
  std::size_t iterations = 0;
  ProjectedEquation equation = ProjectedEquation::single_step;
  double lambda = 0.0;
  bool unique = true;          ///< false when Phi is rank deficient (Y* is affine)
  Matrix null_basis;
  double kappa = 0.0;
  bool contraction_condition = true;
  double step_size = 0.0;      ///< multistep only; chosen gamma_bar
  std::string note;
};

struct SolverOptions {
  double tol = 1e-10;
  std::size_t max_iter = 100'000;
  bool allow_noncontractive = false;
  std::optional<Vector> start;  ///< initial r; zero when absent
  double gamma_bar = 0.0;       ///< multistep step; 0 selects the stability bound
};

/// q-weighted orthogonal projection onto range(Phi).
Vector project_q(const FeatureModel& fm, const Vector& w);

/// D(v) = L(c + alpha sigma(P, v)).
Vector apply_D(const FeatureModel& fm, const MarkovChain& chain, const RiskMapping& m,
               const Vector& v);

/// U(r) = Phi^T Q [Phi r - c - alpha sigma(P, Phi r)].
Vector u_operator(const FeatureModel& fm, const MarkovChain& chain, const RiskMapping& m,
                  const Vector& r);

/// Ubar(r) = Phi^T Q Pbar [Phi r - c - alpha sigma(P, Phi r)].
Vector ubar_operator(const FeatureModel& fm, const MarkovChain& chain, const RiskMapping& m,
                     const MultistepMatrix& pbar, const Vector& r);
Vector ubar_operator(const FeatureModel& fm, const MarkovChain& chain, const RiskMapping& m,
                     double lambda, const Vector& r);

/// Constant C in ||Phi^T Q M (Phi h - alpha(sigma' - sigma''))||^2 <= C ||Phi h||_q^2
/// for any q-nonexpansive M: lambda_max(Phi^T Q Phi) (1 + alpha sqrt(1 + kappa))^2.
double drift_lipschitz_bound(const FeatureModel& fm, double alpha, double kappa);

/// Fixed-point iteration v <- D(v) for the single-step projected equation.
/// Requires alpha sqrt(1 + kappa) < 1 unless allow_noncontractive.
ProjectedSolution solve_single_step(const FeatureModel& fm, const MarkovChain& chain,
                                    const RiskMapping& m, const SolverOptions& opts = {});

/// Iterates r <- r - gamma_bar Ubar(r) for the multistep projected equation.
/// Requires alpha (1 + kappa) < 1 unless allow_noncontractive.
ProjectedSolution solve_multistep(const FeatureModel& fm, const MarkovChain& chain,
                                  const RiskMapping& m, double lambda,
                                  const SolverOptions& opts = {});

/// Deterministic model of the learner, r <- r - gamma Ubar(r) (U when lambda = 0).
/// Returns all iterates r_0 .. r_steps.
std::vector<Vector> deterministic_path(const FeatureModel& fm, const MarkovChain& chain,
                                       const RiskMapping& m, double lambda, double gamma,
                                       const Vector& start, std::size_t steps);

}  // namespace riskd

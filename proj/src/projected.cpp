#include "riskd/projected.hpp"

#include <cmath>
#include <sstream>

#include "riskd/error.hpp"

namespace riskd {

namespace {

constexpr double kRankTolerance = 1e-10;

struct ConditionCheck {
  double kappa = 0.0;
  bool holds = true;
  std::string note;
};

ConditionCheck check_contraction(const RiskMapping& m, const MarkovChain& chain, bool multistep,
                                 bool allow_noncontractive) {
  ConditionCheck out;
  try {
    const auto report = distortion_coefficient(m, chain.transition(), chain.alpha());
    out.kappa = report.kappa;
    out.holds = multistep ? report.condition_tdlambda : report.condition_td0;
  } catch (const EnumerationLimitError& e) {
    if (!allow_noncontractive) throw;
    out.kappa = std::nan("");
    out.holds = false;
    out.note = std::string("distortion coefficient unavailable: ") + e.what();
    return out;
  }
  if (!out.holds) {
    std::ostringstream os;
    os << (multistep ? "alpha*(1+kappa) < 1" : "alpha*sqrt(1+kappa) < 1")
       << " fails (alpha=" << chain.alpha() << ", kappa=" << out.kappa << ")";
    if (!allow_noncontractive) {
      throw NumericalError("contraction precondition violated: " + os.str() +
                           "; pass allow_noncontractive to proceed");
    }
    out.note = "contraction precondition violated, proceeding on request: " + os.str();
  }
  return out;
}

void check_dimensions(const FeatureModel& fm, const MarkovChain& chain) {
  if (fm.states() != chain.size()) {
    throw InvalidInput("feature matrix has " + std::to_string(fm.states()) +
                       " rows but the chain has " + std::to_string(chain.size()) + " states");
  }
}

Vector bellman_residual(const FeatureModel& fm, const MarkovChain& chain, const RiskMapping& m,
                        const Vector& r) {
  const Vector v = fm.phi() * r;
  return v - chain.cost() - chain.alpha() * apply_operator(m, chain.transition(), v);
}

Vector remove_null_component(const FeatureModel& fm, const Vector& r) {
  if (fm.null_basis().cols() == 0) return r;
  return r - fm.null_basis() * (fm.null_basis().transpose() * r);
}

}  // namespace

FeatureModel::FeatureModel(Matrix phi, StationaryDistribution q) : phi_(std::move(phi)), q_(std::move(q)) {
  if (phi_.rows() == 0 || phi_.cols() == 0) throw InvalidInput("feature matrix is empty");
  if (phi_.cols() > phi_.rows()) {
    throw InvalidInput("feature matrix has more columns (" + std::to_string(phi_.cols()) +
                       ") than states (" + std::to_string(phi_.rows()) + ")");
  }
  if (q_.q.size() != phi_.rows()) {
    throw InvalidInput("stationary distribution and feature matrix differ in state count");
  }
  if (!phi_.allFinite()) throw InvalidInput("feature matrix has non-finite entries");

  Eigen::JacobiSVD<Matrix> svd(phi_, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cutoff = kRankTolerance * std::max(1.0, sv.size() ? sv(0) : 0.0);
  rank_ = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv(k) > cutoff) ++rank_;
  }
  const auto m = phi_.cols();
  null_basis_ = svd.matrixV().rightCols(m - static_cast<Eigen::Index>(rank_));

  const Vector root_q = q_.q.cwiseSqrt();
  const Matrix weighted = root_q.asDiagonal() * phi_;
  weighted_.setThreshold(kRankTolerance);
  weighted_.compute(weighted);

  const Matrix gram = phi_.transpose() * q_.q.asDiagonal() * phi_;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  gram_max_ = eig.eigenvalues().maxCoeff();
}

Vector FeatureModel::fit(const Vector& w) const {
  if (w.size() != phi_.rows()) throw InvalidInput("fit: vector has the wrong dimension");
  const Vector rhs = q_.q.cwiseSqrt().cwiseProduct(w);
  return weighted_.solve(rhs);
}

Vector project_q(const FeatureModel& fm, const Vector& w) { return fm.phi() * fm.fit(w); }

Vector apply_D(const FeatureModel& fm, const MarkovChain& chain, const RiskMapping& m,
               const Vector& v) {
  check_dimensions(fm, chain);
  return project_q(fm, chain.cost() + chain.alpha() * apply_operator(m, chain.transition(), v));
}

Vector u_operator(const FeatureModel& fm, const MarkovChain& chain, const RiskMapping& m,
                  const Vector& r) {
  check_dimensions(fm, chain);
  return fm.phi().transpose() * fm.weights().cwiseProduct(bellman_residual(fm, chain, m, r));
}

Vector ubar_operator(const FeatureModel& fm, const MarkovChain& chain, const RiskMapping& m,
                     const MultistepMatrix& pbar, const Vector& r) {
  check_dimensions(fm, chain);
  const Vector mixed = pbar.pbar * bellman_residual(fm, chain, m, r);
  return fm.phi().transpose() * fm.weights().cwiseProduct(mixed);
}

Vector ubar_operator(const FeatureModel& fm, const MarkovChain& chain, const RiskMapping& m,
                     double lambda, const Vector& r) {
  return ubar_operator(fm, chain, m, multistep_matrix(chain, lambda), r);
}

double drift_lipschitz_bound(const FeatureModel& fm, double alpha, double kappa) {
  const double spread = 1.0 + alpha * std::sqrt(1.0 + kappa);
  return fm.gram_max_eigenvalue() * spread * spread;
}

ProjectedSolution solve_single_step(const FeatureModel& fm, const MarkovChain& chain,
                                    const RiskMapping& m, const SolverOptions& opts) {
  check_dimensions(fm, chain);
  const auto cond = check_contraction(m, chain, false, opts.allow_noncontractive);

  // With modulus k, ||v - v*||_q <= ||v - D v||_q / (1 - k); stopping at
  // tol (1 - k) puts the iterate itself within tol of the fixed point.
  const double modulus = chain.alpha() * std::sqrt(1.0 + cond.kappa);
  const double stop = cond.holds && modulus < 1.0 ? opts.tol * (1.0 - modulus) : opts.tol;

  Vector v = opts.start ? Vector(fm.phi() * *opts.start) : Vector::Zero(fm.phi().rows());
  double residual = 0.0;
  std::size_t it = 0;
  for (;; ++it) {
    Vector next = apply_D(fm, chain, m, v);
    residual = q_norm(fm.weights(), v - next);
    if (!std::isfinite(residual)) throw NumericalError("fixed-point iteration diverged", residual);
    if (residual <= stop) break;
    if (it >= opts.max_iter) {
      throw NumericalError("solve_single_step: max_iter exceeded", residual);
    }
    v = std::move(next);
  }

  ProjectedSolution sol;
  sol.equation = ProjectedEquation::single_step;
  sol.r_star = fm.fit(v);
  sol.v_star = fm.phi() * sol.r_star;
  sol.residual = q_norm(fm.weights(), sol.v_star - apply_D(fm, chain, m, sol.v_star));
  sol.drift_norm = u_operator(fm, chain, m, sol.r_star).norm();
  sol.iterations = it;
  sol.unique = fm.rank_full();
  sol.null_basis = fm.null_basis();
  sol.kappa = cond.kappa;
  sol.contraction_condition = cond.holds;
  sol.note = cond.note;
  return sol;
}

ProjectedSolution solve_multistep(const FeatureModel& fm, const MarkovChain& chain,
                                  const RiskMapping& m, double lambda,
                                  const SolverOptions& opts) {
  check_dimensions(fm, chain);
  const auto cond = check_contraction(m, chain, true, opts.allow_noncontractive);
  const auto pbar = multistep_matrix(chain, lambda);

  std::string note = cond.note;
  double gamma = opts.gamma_bar;
  if (!(gamma > 0.0)) {
    const double kappa = std::isnan(cond.kappa) ? 0.0 : cond.kappa;
    const double c_bar = drift_lipschitz_bound(fm, chain.alpha(), kappa);
    const double margin = 1.0 - chain.alpha() * (1.0 + kappa);
    if (margin > 0.0) {
      gamma = margin / c_bar;  // half of the stability bound 2*margin/C
      if (!note.empty()) note += "; ";
      note += "step gamma_bar set to half the stability bound 2(1-alpha(1+kappa))/C";
    } else {
      gamma = 1.0 / c_bar;
      if (!note.empty()) note += "; ";
      note += "stability bound unavailable, gamma_bar = 1/C";
    }
  }

  Vector r = opts.start ? *opts.start : Vector::Zero(fm.phi().cols());
  if (r.size() != fm.phi().cols()) throw InvalidInput("solve_multistep: start has wrong size");
  const double blowup = 1e12 * (1.0 + r.norm() + chain.cost().cwiseAbs().maxCoeff());

  auto projected_residual = [&](const Vector& x) {
    const Vector mixed = pbar.pbar * bellman_residual(fm, chain, m, x);
    return q_norm(fm.weights(), project_q(fm, mixed));
  };

  std::size_t it = 0;
  double drift_norm = 0.0;
  for (;; ++it) {
    const Vector drift = ubar_operator(fm, chain, m, pbar, r);
    drift_norm = drift.norm();
    if (!std::isfinite(drift_norm) || r.norm() > blowup) {
      throw NumericalError("solve_multistep diverged; use a smaller gamma_bar", drift_norm);
    }
    if (drift_norm <= opts.tol && projected_residual(r) <= opts.tol) break;
    if (it >= opts.max_iter) {
      throw NumericalError("solve_multistep: max_iter exceeded", drift_norm);
    }
    r -= gamma * drift;
  }

  ProjectedSolution sol;
  sol.equation = ProjectedEquation::multistep;
  sol.lambda = lambda;
  sol.r_star = remove_null_component(fm, r);
  sol.v_star = fm.phi() * sol.r_star;
  sol.residual = projected_residual(sol.r_star);
  sol.drift_norm = ubar_operator(fm, chain, m, pbar, sol.r_star).norm();
  sol.iterations = it;
  sol.unique = fm.rank_full();
  sol.null_basis = fm.null_basis();
  sol.kappa = cond.kappa;
  sol.contraction_condition = cond.holds;
  sol.step_size = gamma;
  sol.note = note;
  return sol;
}

std::vector<Vector> deterministic_path(const FeatureModel& fm, const MarkovChain& chain,
                                       const RiskMapping& m, double lambda, double gamma,
                                       const Vector& start, std::size_t steps) {
  std::vector<Vector> path;
  path.reserve(steps + 1);
  path.push_back(start);
  const bool multistep = lambda > 0.0;
  const auto pbar = multistep ? multistep_matrix(chain, lambda) : MultistepMatrix{};
  for (std::size_t t = 0; t < steps; ++t) {
    const Vector& r = path.back();
    const Vector drift =
        multistep ? ubar_operator(fm, chain, m, pbar, r) : u_operator(fm, chain, m, r);
    path.push_back(r - gamma * drift);
  }
  return path;
}

}  // namespace riskd

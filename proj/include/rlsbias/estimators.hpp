#pragma once

/** @file
 * Regularized batch least squares and the recursive least squares (RLS)
 * recursion with unit forgetting factor.
 *
 * For the cost
 *   J(t) = sum_i |y_i - phi_i t|^2 + (t - theta0)^T R (t - theta0)
 * the batch minimizer over observations 0..k-1 is
 *   (G + R)^{-1} (c + R theta0),  G = sum phi_i^T phi_i,  c = sum phi_i^T y_i,
 * and RLS started from P_0 = R^{-1} reproduces it exactly after every step.
 * The identity checks below evaluate the closed forms that follow from that
 * equivalence and return residual norms rather than booleans so callers can
 * pick their own tolerance.
 */

#include <cmath>
#include <sstream>
#include <utility>

#include "rlsbias/matrix_kernel.hpp"

namespace rlsbias {

/// Relative eigenvalue floor below which an unregularized Gram matrix is
/// treated as rank deficient.
inline constexpr double kRankTolerance = 1e-12;

/// One measurement y = phi theta with phi p x n and y of length p.
struct Observation {
  Matrix phi;
  Vector y;

  Index rows() const noexcept { return phi.rows(); }
  Index params() const noexcept { return phi.cols(); }
};

/// SPD weight R and prior estimate theta0; R plays the role of P_0^{-1}.
class Regularizer {
 public:
  Regularizer(SymMatrix weight, Vector theta0) : weight_(std::move(weight)), theta0_(std::move(theta0)) {
    if (theta0_.size() != weight_.dim()) {
      throw DimensionError("Regularizer: theta0 length does not match R");
    }
    Eigen::LLT<Matrix> llt(weight_.dense());
    if (llt.info() != Eigen::Success) throw NotSpdError("Regularizer: R must be positive definite");
  }

  /// R = r I, theta0 = 0.
  static Regularizer ridge(Index n, double r) {
    return Regularizer(SymMatrix::scaled_identity(n, r), Vector::Zero(n));
  }

  const SymMatrix& weight() const noexcept { return weight_; }
  const Vector& theta0() const noexcept { return theta0_; }
  Index dim() const noexcept { return weight_.dim(); }

 private:
  SymMatrix weight_;
  Vector theta0_;
};

/// Running Phi^T Phi and Phi^T Y so batch formulas never need the full
/// regressor history.
class RegressorAccumulator {
 public:
  explicit RegressorAccumulator(Index n) : gram_(SymMatrix::zero(n)), cross_(Vector::Zero(n)) {}

  void absorb(const Observation& obs) {
    if (obs.params() != dim() || obs.y.size() != obs.rows()) {
      throw DimensionError("RegressorAccumulator::absorb: observation shape mismatch");
    }
    gram_.add_gram(obs.phi);
    cross_ += obs.phi.transpose() * obs.y;
    ++count_;
  }

  const SymMatrix& gram() const noexcept { return gram_; }
  const Vector& cross() const noexcept { return cross_; }
  long count() const noexcept { return count_; }
  Index dim() const noexcept { return gram_.dim(); }

 private:
  SymMatrix gram_;
  Vector cross_;
  long count_ = 0;
};

/// RLS state after `step` observations.
struct EstimatorState {
  Vector theta;
  SymMatrix P;
  long step = 0;
};

/// Regularized batch minimizer (G + R)^{-1} (c + R theta0).
inline Vector bls_solve(const RegressorAccumulator& acc, const Regularizer& reg) {
  if (acc.dim() != reg.dim()) throw DimensionError("bls_solve: accumulator and regularizer differ in n");
  const Matrix& r = reg.weight().dense();
  Eigen::LLT<Matrix> llt(acc.gram().dense() + r);
  if (llt.info() != Eigen::Success) throw NotSpdError("bls_solve: G + R is not positive definite");
  return llt.solve(acc.cross() + r * reg.theta0());
}

/// Plain normal-equations solution G^{-1} c; requires full column rank.
inline Vector bls_solve_unregularized(const RegressorAccumulator& acc) {
  const Spectrum s = sym_eigenvalues(acc.gram());
  if (!(s.min() > kRankTolerance * s.max())) {
    std::ostringstream msg;
    msg << "bls_solve_unregularized: Gram matrix is rank deficient after " << acc.count()
        << " observations (lambda_min " << s.min() << ", lambda_max " << s.max() << ")";
    throw RankDeficientError(msg.str());
  }
  return acc.gram().dense().llt().solve(acc.cross());
}

inline EstimatorState rls_init(const Regularizer& reg) {
  return EstimatorState{reg.theta0(), spd_inverse(reg.weight()), 0};
}

/**
 * One RLS update:
 *   P' = P - P phi^T (I + phi P phi^T)^{-1} phi P
 *   theta' = theta + P' phi^T (y - phi theta)
 * The p x p matrix I + phi P phi^T is at least I, so its Cholesky solve
 * cannot fail for a valid state. P' is re-symmetrized and checked for
 * definiteness; a failure there means accumulated rounding, not bad input.
 */
inline EstimatorState rls_step(const EstimatorState& state, const Observation& obs) {
  const Index n = state.P.dim();
  if (obs.params() != n || obs.y.size() != obs.rows() || state.theta.size() != n) {
    throw DimensionError("rls_step: observation shape does not match estimator");
  }
  const Matrix& p = state.P.dense();
  const Matrix p_phit = p * obs.phi.transpose();  // n x p
  Matrix innovation_cov = obs.phi * p_phit;
  innovation_cov.diagonal().array() += 1.0;
  const Eigen::LLT<Matrix> llt(innovation_cov);
  const Matrix gain = llt.solve(p_phit.transpose()).transpose();  // P phi^T S^{-1}

  EstimatorState next{Vector(), SymMatrix(p - gain * p_phit.transpose()), state.step + 1};
  const Eigen::LLT<Matrix> check(next.P.dense());
  if (check.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "rls_step: P lost positive definiteness at step " << next.step
        << " (min diagonal " << next.P.dense().diagonal().minCoeff() << ")";
    throw NumericalError(msg.str());
  }
  next.theta = state.theta + next.P.dense() * (obs.phi.transpose() * (obs.y - obs.phi * state.theta));
  return next;
}

/// |(theta_k - theta) - P_k R (theta0 - theta)|; zero up to rounding on
/// noise-free data.
inline double error_identity_check(const EstimatorState& state, const Regularizer& reg,
                                   const Vector& theta_true) {
  const Vector predicted = state.P.dense() * (reg.weight().dense() * (reg.theta0() - theta_true));
  return ((state.theta - theta_true) - predicted).norm();
}

/// |theta_k - ((I - P_k R) theta + P_k R theta0)| on noise-free data.
inline double decomposition_identity_check(const EstimatorState& state, const Regularizer& reg,
                                           const Vector& theta_true) {
  const Matrix pr = state.P.dense() * reg.weight().dense();
  const Index n = pr.rows();
  const Vector predicted = (Matrix::Identity(n, n) - pr) * theta_true + pr * reg.theta0();
  return (state.theta - predicted).norm();
}

/// |P_{k+1}^{-1} - P_k^{-1} - phi^T phi|_F / |P_{k+1}^{-1}|_F.
inline double pinv_identity_check(const EstimatorState& before, const EstimatorState& after,
                                  const Observation& obs) {
  const Matrix inv_after = spd_inverse(after.P).dense();
  const Matrix inv_before = spd_inverse(before.P).dense();
  const Matrix resid = inv_after - inv_before - obs.phi.transpose() * obs.phi;
  return resid.norm() / inv_after.norm();
}

/// |P_k^{-1} - (R + G_k)|_F / |R + G_k|_F with G_k from the accumulator that
/// absorbed the same observations.
inline double cumulative_pinv_check(const EstimatorState& state, const Regularizer& reg,
                                    const RegressorAccumulator& acc) {
  const Matrix expected = reg.weight().dense() + acc.gram().dense();
  return (spd_inverse(state.P).dense() - expected).norm() / expected.norm();
}

}  // namespace rlsbias

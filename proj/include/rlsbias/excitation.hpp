#pragma once

/** @file
 * Finite-data persistency-of-excitation checks, the empirical limit
 * C = lim (1/k) Phi^T Phi, and condition numbers of the regularized Gram
 * matrix along a data stream.
 */

#include <algorithm>
#include <span>
#include <vector>

#include "rlsbias/estimators.hpp"

namespace rlsbias {

/// A window "excites" when its smallest eigenvalue clears this fraction of
/// max(1, lambda_max).
inline constexpr double kPeThreshold = 1e-10;

struct PEWindowReport {
  long window_length = 0;  ///< N; the window holds N + 1 regressors.
  long start = 0;          ///< j of the (worst) window.
  double alpha = 0.0;      ///< lambda_min of the window sum.
  double beta = 0.0;       ///< lambda_max of the window sum.
  bool satisfied = false;
};

struct CEstimate {
  SymMatrix C;
  long k = 0;
};

/// Per-step phi_k^T phi_k, the input to the window checks.
inline std::vector<SymMatrix> per_step_grams(std::span<const Observation> stream) {
  std::vector<SymMatrix> out;
  out.reserve(stream.size());
  for (const Observation& obs : stream) {
    SymMatrix g = SymMatrix::zero(obs.params());
    g.add_gram(obs.phi);
    out.push_back(std::move(g));
  }
  return out;
}

/// Extreme eigenvalues of sum_{i=0}^{N} phi_{i+j}^T phi_{i+j}.
inline PEWindowReport pe_window_check(std::span<const SymMatrix> grams, long start, long window) {
  if (grams.empty() || window < 0 || start < 0) throw DimensionError("pe_window_check: empty window");
  if (static_cast<std::size_t>(start + window) >= grams.size()) {
    throw DimensionError("pe_window_check: window runs past the end of the data");
  }
  SymMatrix sum = SymMatrix::zero(grams.front().dim());
  for (long i = 0; i <= window; ++i) sum += grams[static_cast<std::size_t>(start + i)];
  const Spectrum s = sym_eigenvalues(sum);
  PEWindowReport rep;
  rep.window_length = window;
  rep.start = start;
  // A PSD sum can round to a tiny negative eigenvalue; alpha is clamped at 0.
  rep.alpha = std::max(0.0, s.min());
  rep.beta = std::max(rep.alpha, s.max());
  rep.satisfied = rep.alpha > kPeThreshold * std::max(1.0, rep.beta);
  return rep;
}

/**
 * Scans every full window in the data and returns the one with the smallest
 * alpha (beta is the largest seen over all windows). This is a finite-horizon
 * surrogate for the all-j condition, not a proof of excitation.
 */
inline PEWindowReport worst_case_pe(std::span<const SymMatrix> grams, long window) {
  if (window < 0 || static_cast<std::size_t>(window) >= grams.size()) {
    throw DimensionError("worst_case_pe: not enough data for one window");
  }
  PEWindowReport worst = pe_window_check(grams, 0, window);
  double beta = worst.beta;
  const long last = static_cast<long>(grams.size()) - 1 - window;
  for (long j = 1; j <= last; ++j) {
    const PEWindowReport rep = pe_window_check(grams, j, window);
    beta = std::max(beta, rep.beta);
    if (rep.alpha < worst.alpha) worst = rep;
  }
  worst.beta = beta;
  worst.satisfied = worst.alpha > kPeThreshold * std::max(1.0, beta);
  return worst;
}

inline CEstimate estimate_C(const RegressorAccumulator& acc) {
  if (acc.count() < 1) throw DimensionError("estimate_C: accumulator is empty");
  return CEstimate{acc.gram() * (1.0 / static_cast<double>(acc.count())), acc.count()};
}

/// kappa(G + R) for a single snapshot.
inline double regularized_condition(const RegressorAccumulator& acc, const Regularizer& reg) {
  return condition_number(acc.gram() + reg.weight());
}

/// kappa(G_k + R) for each snapshot, in the order given.
inline std::vector<double> regularized_condition_trajectory(std::span<const RegressorAccumulator> snapshots,
                                                            const Regularizer& reg) {
  std::vector<double> out;
  out.reserve(snapshots.size());
  for (const RegressorAccumulator& acc : snapshots) out.push_back(regularized_condition(acc, reg));
  return out;
}

}  // namespace rlsbias

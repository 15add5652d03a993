#pragma once

/** @file
 * Bias predictions and convergence metrics for regularized RLS on noise-free
 * data: the asymptote lim k (theta_k - theta) = C^{-1} R (theta0 - theta),
 * the exact finite-k bias, log-log slopes, moving averages and trial
 * averaging of per-step traces.
 */

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "rlsbias/estimators.hpp"
#include "rlsbias/excitation.hpp"

namespace rlsbias {

struct BiasPrediction {
  Vector v;  ///< predicted limit of k (theta_k - theta)

  /// Predicted theta_k - theta for large k.
  Vector error_at(long k) const { return v / static_cast<double>(k); }
};

/// One row of per-step diagnostics. Optional fields are missing during
/// warm-up or when not sampled.
struct TraceRecord {
  long k = 0;
  Vector abs_error;     ///< |theta_{k,(m)} - theta_(m)|
  Vector scaled_error;  ///< k (theta_k - theta), signed
  double error_norm = 0.0;
  std::optional<double> kappa;        ///< kappa(Phi_k^T Phi_k + R)
  std::optional<double> delta_kappa;  ///< kappa_k - kappa_{k-1}
  std::optional<double> log_slope;    ///< of error_norm (of the averaged norm after averaging)
  std::optional<double> mean_log_slope;  ///< per-trial slopes averaged; equals log_slope for one trial
};

using Trace = std::vector<TraceRecord>;

inline BiasPrediction predict_bias_asymptote(const CEstimate& c, const Regularizer& reg, const Vector& theta_true) {
  if (c.C.dim() != reg.dim() || theta_true.size() != reg.dim()) {
    throw DimensionError("predict_bias_asymptote: dimension mismatch");
  }
  const double kappa = condition_number(c.C);
  if (!std::isfinite(kappa)) {
    throw NotPersistentlyExcitingError("predict_bias_asymptote: C is singular, regressors are not PE");
  }
  const Vector rhs = reg.weight().dense() * (reg.theta0() - theta_true);
  return BiasPrediction{c.C.dense().llt().solve(rhs)};
}

/// (G + R)^{-1} R (theta0 - theta): the bias of the estimate built from the
/// observations already absorbed in `acc`.
inline Vector exact_bias(const RegressorAccumulator& acc, const Regularizer& reg, const Vector& theta_true) {
  if (acc.dim() != reg.dim() || theta_true.size() != reg.dim()) {
    throw DimensionError("exact_bias: dimension mismatch");
  }
  const Matrix& r = reg.weight().dense();
  Eigen::LLT<Matrix> llt(acc.gram().dense() + r);
  return llt.solve(r * (reg.theta0() - theta_true));
}

/**
 * [log f_k - log f_{k-1}] / [log k - log(k-1)], evaluated as
 * log(f_k / f_{k-1}) / log1p(1 / (k-1)) to avoid cancellation at large k.
 * Missing for k < 2 or nonpositive arguments.
 */
inline std::optional<double> log_slope(double f_k, double f_km1, long k) {
  if (k < 2 || !(f_k > 0.0) || !(f_km1 > 0.0) || !std::isfinite(f_k) || !std::isfinite(f_km1)) {
    return std::nullopt;
  }
  return std::log(f_k / f_km1) / std::log1p(1.0 / static_cast<double>(k - 1));
}

/// Trailing mean over `window` entries; missing entries are skipped, and the
/// first window - 1 outputs are warm-up (missing).
inline std::vector<std::optional<double>> moving_average(std::span<const std::optional<double>> series,
                                                         long window) {
  if (window < 1) throw DimensionError("moving_average: window must be >= 1");
  if (series.empty()) throw DimensionError("moving_average: empty series");
  std::vector<std::optional<double>> out(series.size());
  double sum = 0.0;
  long defined = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i]) {
      sum += *series[i];
      ++defined;
    }
    if (i >= static_cast<std::size_t>(window)) {
      const auto& leaving = series[i - static_cast<std::size_t>(window)];
      if (leaving) {
        sum -= *leaving;
        --defined;
      }
    }
    if (i + 1 >= static_cast<std::size_t>(window) && defined > 0) {
      out[i] = sum / static_cast<double>(defined);
    }
  }
  return out;
}

inline std::vector<std::optional<double>> moving_average(std::span<const double> series, long window) {
  std::vector<std::optional<double>> wrapped(series.begin(), series.end());
  return moving_average(std::span<const std::optional<double>>(wrapped), window);
}

/// Fills log_slope from consecutive error norms.
inline void recompute_log_slopes(Trace& trace) {
  for (std::size_t i = 0; i < trace.size(); ++i) {
    trace[i].log_slope.reset();
    if (i > 0 && trace[i - 1].k == trace[i].k - 1) {
      trace[i].log_slope = log_slope(trace[i].error_norm, trace[i - 1].error_norm, trace[i].k);
    }
  }
}

/**
 * Running pointwise sum of traces, reduced in the order add() is called.
 * Adding trials in index order makes the result independent of how the
 * trials were scheduled.
 */
class TraceAverager {
 public:
  void add(const Trace& trace) {
    if (trials_ == 0) {
      init(trace);
    } else if (trace.size() != sum_.size()) {
      throw DimensionError("TraceAverager: traces have different lengths");
    }
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const TraceRecord& in = trace[i];
      Row& row = sum_[i];
      if (in.k != row.k || in.abs_error.size() != row.abs_error.size()) {
        throw DimensionError("TraceAverager: traces do not share a step grid");
      }
      row.abs_error += in.abs_error;
      row.scaled_error += in.scaled_error;
      row.error_norm += in.error_norm;
      accumulate(row.kappa, in.kappa);
      accumulate(row.delta_kappa, in.delta_kappa);
      accumulate(row.slope, in.mean_log_slope ? in.mean_log_slope : in.log_slope);
    }
    ++trials_;
  }

  long trials() const noexcept { return trials_; }

  Trace result() const {
    if (trials_ == 0) throw DimensionError("TraceAverager: no trials added");
    const double t = static_cast<double>(trials_);
    Trace out;
    out.reserve(sum_.size());
    for (const Row& row : sum_) {
      TraceRecord rec;
      rec.k = row.k;
      rec.abs_error = row.abs_error / t;
      rec.scaled_error = row.scaled_error / t;
      rec.error_norm = row.error_norm / t;
      // kappa and delta_kappa are averaged only when every trial sampled them.
      if (row.kappa.count == trials_) rec.kappa = row.kappa.sum / t;
      if (row.delta_kappa.count == trials_) rec.delta_kappa = row.delta_kappa.sum / t;
      if (row.slope.count > 0) rec.mean_log_slope = row.slope.sum / static_cast<double>(row.slope.count);
      out.push_back(std::move(rec));
    }
    recompute_log_slopes(out);
    return out;
  }

 private:
  struct Partial {
    double sum = 0.0;
    long count = 0;
  };
  struct Row {
    long k = 0;
    Vector abs_error;
    Vector scaled_error;
    double error_norm = 0.0;
    Partial kappa, delta_kappa, slope;
  };

  static void accumulate(Partial& p, const std::optional<double>& v) {
    if (v) {
      p.sum += *v;
      ++p.count;
    }
  }

  void init(const Trace& trace) {
    sum_.clear();
    sum_.reserve(trace.size());
    for (const TraceRecord& in : trace) {
      Row row;
      row.k = in.k;
      row.abs_error = Vector::Zero(in.abs_error.size());
      row.scaled_error = Vector::Zero(in.scaled_error.size());
      sum_.push_back(std::move(row));
    }
  }

  std::vector<Row> sum_;
  long trials_ = 0;
};

/// Pointwise mean of per-trial traces; the error-norm slope is recomputed
/// from the averaged norm and the mean of per-trial slopes is kept alongside.
inline Trace average_over_trials(std::span<const Trace> traces) {
  if (traces.empty()) throw DimensionError("average_over_trials: no traces");
  TraceAverager avg;
  for (const Trace& t : traces) avg.add(t);
  return avg.result();
}

}  // namespace rlsbias

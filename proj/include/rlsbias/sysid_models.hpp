#pragma once

/** @file
 * FIR and IIR models in linear-regression form y_k = phi_k theta.
 *
 *   FIR:  y_k = sum_i G_i u_{k-i}
 *         phi_k = [u_{k-1}^T ... u_{k-w}^T] ⊗ I_p,  theta = vec[G_1 ... G_w]
 *   IIR:  y_k = -sum_i F_i y_{k-i} + sum_i G_i u_{k-i}
 *         phi_k = [-y_{k-1}^T ... -y_{k-w}^T  u_{k-1}^T ... u_{k-w}^T] ⊗ I_p,
 *         theta = vec[F_1 ... F_w G_1 ... G_w]
 *
 * Signals before k = 0 are zero. The simulators compute y_k from the
 * coefficient matrices directly, not through phi_k theta, so the regression
 * form can be checked against them.
 */

#include <cmath>
#include <deque>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "rlsbias/estimators.hpp"

namespace rlsbias {

/// Simulated outputs above this norm abort with InstabilityError.
inline constexpr double kDivergenceBound = 1e12;

namespace detail {

inline void check_blocks(const std::vector<Matrix>& blocks, const char* what) {
  if (blocks.empty()) throw DimensionError(std::string(what) + ": need at least one coefficient");
  for (const Matrix& b : blocks) {
    if (b.rows() != blocks.front().rows() || b.cols() != blocks.front().cols() || b.size() == 0) {
      throw DimensionError(std::string(what) + ": coefficients must share non-empty dimensions");
    }
  }
}

}  // namespace detail

class FirModel {
 public:
  explicit FirModel(std::vector<Matrix> g) : g_(std::move(g)) { detail::check_blocks(g_, "FirModel"); }

  Index w() const noexcept { return static_cast<Index>(g_.size()); }
  Index p() const noexcept { return g_.front().rows(); }
  Index q() const noexcept { return g_.front().cols(); }
  Index n() const noexcept { return w() * p() * q(); }
  const std::vector<Matrix>& G() const noexcept { return g_; }

 private:
  std::vector<Matrix> g_;
};

class IirModel {
 public:
  IirModel(std::vector<Matrix> f, std::vector<Matrix> g) : f_(std::move(f)), g_(std::move(g)) {
    detail::check_blocks(f_, "IirModel");
    detail::check_blocks(g_, "IirModel");
    if (f_.size() != g_.size()) throw DimensionError("IirModel: F and G windows differ");
    if (f_.front().rows() != f_.front().cols() || f_.front().rows() != g_.front().rows()) {
      throw DimensionError("IirModel: F_i must be p x p and G_i p x q");
    }
  }

  Index w() const noexcept { return static_cast<Index>(g_.size()); }
  Index p() const noexcept { return g_.front().rows(); }
  Index q() const noexcept { return g_.front().cols(); }
  Index n() const noexcept { return w() * p() * (p() + q()); }
  const std::vector<Matrix>& F() const noexcept { return f_; }
  const std::vector<Matrix>& G() const noexcept { return g_; }

 private:
  std::vector<Matrix> f_;
  std::vector<Matrix> g_;
};

/// Shift register of the last w inputs and outputs; slot 0 is step k-1.
class SignalBuffer {
 public:
  SignalBuffer(Index w, Index p, Index q)
      : inputs_(static_cast<std::size_t>(w), Vector::Zero(q)),
        outputs_(static_cast<std::size_t>(w), Vector::Zero(p)) {
    if (w < 1 || p < 1 || q < 1) throw DimensionError("SignalBuffer: w, p, q must be positive");
  }

  /// Records (u_k, y_k) after step k has been emitted.
  void push(const Vector& u, const Vector& y) {
    if (u.size() != inputs_.front().size() || y.size() != outputs_.front().size()) {
      throw DimensionError("SignalBuffer::push: signal size mismatch");
    }
    inputs_.pop_back();
    inputs_.push_front(u);
    outputs_.pop_back();
    outputs_.push_front(y);
  }

  Index w() const noexcept { return static_cast<Index>(inputs_.size()); }
  const Vector& input_lag(Index i) const { return inputs_.at(static_cast<std::size_t>(i - 1)); }
  const Vector& output_lag(Index i) const { return outputs_.at(static_cast<std::size_t>(i - 1)); }

 private:
  std::deque<Vector> inputs_;
  std::deque<Vector> outputs_;
};

inline Vector fir_true_theta(const FirModel& model) { return vec_stack(model.G()); }

inline Vector iir_true_theta(const IirModel& model) {
  // vec[F_1 .. F_w G_1 .. G_w]: the F columns come first, then the G columns.
  const Vector f = vec_stack(model.F());
  const Vector g = vec_stack(model.G());
  Vector out(f.size() + g.size());
  out << f, g;
  return out;
}

inline Matrix fir_regressor(const SignalBuffer& buf, Index p) {
  const Index q = buf.input_lag(1).size();
  Eigen::RowVectorXd row(buf.w() * q);
  for (Index i = 1; i <= buf.w(); ++i) row.segment((i - 1) * q, q) = buf.input_lag(i).transpose();
  return kron_with_identity(row, p);
}

inline Matrix iir_regressor(const SignalBuffer& buf, Index p) {
  const Index q = buf.input_lag(1).size();
  const Index w = buf.w();
  if (buf.output_lag(1).size() != p) throw DimensionError("iir_regressor: output size differs from p");
  Eigen::RowVectorXd row(w * (p + q));
  for (Index i = 1; i <= w; ++i) {
    row.segment((i - 1) * p, p) = -buf.output_lag(i).transpose();
    row.segment(w * p + (i - 1) * q, q) = buf.input_lag(i).transpose();
  }
  return kron_with_identity(row, p);
}

/// Noise-free FIR observations for k = 0 .. inputs.size() - 1.
inline std::vector<Observation> fir_simulate(const FirModel& model, std::span<const Vector> inputs) {
  SignalBuffer buf(model.w(), model.p(), model.q());
  std::vector<Observation> out;
  out.reserve(inputs.size());
  for (const Vector& u : inputs) {
    if (u.size() != model.q()) throw DimensionError("fir_simulate: input size differs from q");
    Vector y = Vector::Zero(model.p());
    for (Index i = 1; i <= model.w(); ++i) y += model.G()[static_cast<std::size_t>(i - 1)] * buf.input_lag(i);
    out.push_back(Observation{fir_regressor(buf, model.p()), y});
    buf.push(u, y);
  }
  return out;
}

/// Noise-free IIR observations; throws InstabilityError if |y_k| exceeds
/// kDivergenceBound.
inline std::vector<Observation> iir_simulate(const IirModel& model, std::span<const Vector> inputs) {
  SignalBuffer buf(model.w(), model.p(), model.q());
  std::vector<Observation> out;
  out.reserve(inputs.size());
  for (const Vector& u : inputs) {
    if (u.size() != model.q()) throw DimensionError("iir_simulate: input size differs from q");
    Vector y = Vector::Zero(model.p());
    for (Index i = 1; i <= model.w(); ++i) {
      const auto idx = static_cast<std::size_t>(i - 1);
      y += model.G()[idx] * buf.input_lag(i) - model.F()[idx] * buf.output_lag(i);
    }
    if (!(y.norm() <= kDivergenceBound)) {
      const long step = static_cast<long>(out.size());
      std::ostringstream msg;
      msg << "iir_simulate: output norm " << y.norm() << " exceeds " << kDivergenceBound << " at step " << step;
      throw InstabilityError(msg.str(), step);
    }
    out.push_back(Observation{iir_regressor(buf, model.p()), y});
    buf.push(u, y);
  }
  return out;
}

/// Scalar 4-tap FIR: y_k = -1.5 u_{k-1} + 0.9 u_{k-2} + 0.15 u_{k-3} - 0.15 u_{k-4}.
inline FirModel scalar_fir_example() {
  auto s = [](double v) { return Matrix::Constant(1, 1, v); };
  return FirModel({s(-1.5), s(0.9), s(0.15), s(-0.15)});
}

/// Scalar second-order IIR: y_k = 1.5 y_{k-1} - 0.9 y_{k-2} + 0.15 u_{k-1} - 0.15 u_{k-2},
/// i.e. F = (-1.5, 0.9), G = (0.15, -0.15) under the y_k = -sum F_i y_{k-i} + ... convention.
inline IirModel scalar_iir_example() {
  auto s = [](double v) { return Matrix::Constant(1, 1, v); };
  return IirModel({s(-1.5), s(0.9)}, {s(0.15), s(-0.15)});
}

}  // namespace rlsbias

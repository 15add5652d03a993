#pragma once

/** @file
 * Dense symmetric linear algebra used throughout the estimators: symmetric
 * storage, Jacobi eigenvalues, condition numbers, SPD inversion and the
 * Kronecker/vec constructions that put matrix-coefficient models into
 * linear-regression form.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Jacobi>

#include "rlsbias/errors.hpp"

namespace rlsbias {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Eigenvalues at or below this fraction of the largest count as zero, which
/// makes the condition number infinite.
inline constexpr double kSingularTolerance = 1e-14;

/// Eigenvalues below -kNegativeTolerance * lambda_max mark a matrix as not
/// positive semidefinite. Looser than kSingularTolerance because a Gram sum
/// that is exactly singular can come back with a slightly negative rounded
/// eigenvalue.
inline constexpr double kNegativeTolerance = 1e-12;

/**
 * Real symmetric matrix with at least one row.
 *
 * Symmetry is exact: every constructor and mutator symmetrizes as
 * (M + M^T) / 2, which is bitwise symmetric in IEEE arithmetic.
 */
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& m) {
    if (m.rows() < 1 || m.rows() != m.cols()) {
      throw DimensionError("SymMatrix: expected a non-empty square matrix");
    }
    m_ = (m + m.transpose()) * 0.5;
  }

  static SymMatrix identity(Index n) { return SymMatrix(Matrix::Identity(n, n)); }
  static SymMatrix zero(Index n) { return SymMatrix(Matrix::Zero(n, n)); }
  static SymMatrix scaled_identity(Index n, double s) {
    return SymMatrix(s * Matrix::Identity(n, n));
  }
  static SymMatrix diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

  Index dim() const noexcept { return m_.rows(); }
  const Matrix& dense() const noexcept { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }
  double trace() const { return m_.trace(); }

  /// this += phi^T phi for a p x n regressor.
  void add_gram(const Matrix& phi) {
    if (phi.cols() != dim()) {
      throw DimensionError("SymMatrix::add_gram: regressor has wrong column count");
    }
    const Matrix g = phi.transpose() * phi;
    m_ += (g + g.transpose()) * 0.5;
  }

  SymMatrix& operator+=(const SymMatrix& o) {
    check_same(o);
    m_ += o.m_;
    return *this;
  }
  SymMatrix& operator-=(const SymMatrix& o) {
    check_same(o);
    m_ -= o.m_;
    return *this;
  }
  SymMatrix& operator*=(double s) {
    m_ *= s;
    return *this;
  }

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

 private:
  void check_same(const SymMatrix& o) const {
    if (o.dim() != dim()) throw DimensionError("SymMatrix: dimension mismatch");
  }

  Matrix m_;
};

/// Eigenvalues sorted descending.
struct Spectrum {
  Vector values;

  double max() const { return values(0); }
  double min() const { return values(values.size() - 1); }
  Index size() const { return values.size(); }
};

/**
 * All eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
 *
 * A rotation on (p, q) is skipped when |a_pq| <= eps * sqrt(|a_pp a_qq|), so
 * small eigenvalues of well-scaled SPD matrices keep their relative accuracy;
 * this matters for condition numbers of order 1e5 and up. Gives up after
 * 100 n^2 sweeps and reports the remaining off-diagonal norm.
 */
inline Spectrum sym_eigenvalues(const SymMatrix& a) {
  const Index n = a.dim();
  Matrix work = a.dense();
  const double eps = std::numeric_limits<double>::epsilon();
  const long max_sweeps = 100L * n * n;
  if (!work.allFinite()) {
    throw EigenSolverError("sym_eigenvalues: matrix has non-finite entries",
                           std::numeric_limits<double>::quiet_NaN());
  }

  bool converged = n == 1;
  for (long sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = work(p, q);
        if (apq == 0.0) continue;
        if (std::abs(apq) <= eps * std::sqrt(std::abs(work(p, p) * work(q, q)))) {
          continue;
        }
        Eigen::JacobiRotation<double> rot;
        rot.makeJacobi(work, p, q);
        work.applyOnTheLeft(p, q, rot.adjoint());
        work.applyOnTheRight(p, q, rot);
        work(p, q) = 0.0;
        work(q, p) = 0.0;
        rotated = true;
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    const double off = (work - Matrix(work.diagonal().asDiagonal())).norm();
    std::ostringstream msg;
    msg << "sym_eigenvalues: Jacobi did not converge in " << max_sweeps
        << " sweeps (off-diagonal norm " << off << ")";
    throw EigenSolverError(msg.str(), off);
  }

  Spectrum s{work.diagonal()};
  std::sort(s.values.data(), s.values.data() + n, std::greater<>());
  return s;
}

/// lambda_max / lambda_min of a PSD matrix, +infinity when singular.
inline double condition_number(const Spectrum& s) {
  const double hi = s.max();
  const double lo = s.min();
  if (hi <= 0.0) {
    if (lo < 0.0) throw NotPsdError("condition_number: matrix is negative definite");
    return std::numeric_limits<double>::infinity();  // zero matrix
  }
  if (lo < -kNegativeTolerance * hi) {
    std::ostringstream msg;
    msg << "condition_number: eigenvalue " << lo << " is negative (lambda_max " << hi << ")";
    throw NotPsdError(msg.str());
  }
  if (lo <= kSingularTolerance * hi) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

inline double condition_number(const SymMatrix& a) { return condition_number(sym_eigenvalues(a)); }

/// Inverse of an SPD matrix through its Cholesky factor.
inline SymMatrix spd_inverse(const SymMatrix& a) {
  Eigen::LLT<Matrix> llt(a.dense());
  if (llt.info() != Eigen::Success) {
    throw NotSpdError("spd_inverse: Cholesky factorization hit a non-positive pivot");
  }
  return SymMatrix(llt.solve(Matrix::Identity(a.dim(), a.dim())));
}

/// row ⊗ I_p, i.e. the block row [row_1 I_p, ..., row_m I_p].
inline Matrix kron_with_identity(const Eigen::Ref<const Eigen::RowVectorXd>& row, Index p) {
  if (row.size() < 1 || p < 1) {
    throw DimensionError("kron_with_identity: need a non-empty row and p >= 1");
  }
  Matrix out = Matrix::Zero(p, row.size() * p);
  for (Index j = 0; j < row.size(); ++j) {
    out.block(0, j * p, p, p).diagonal().setConstant(row(j));
  }
  return out;
}

/**
 * Column-major vec of the horizontal concatenation [B_1 ... B_w].
 *
 * Consistent with kron_with_identity through vec(A X b) = (b^T ⊗ A) vec(X):
 * with A = I_p and b the stacked signal, ([s^T] ⊗ I_p) vec_stack(B) = sum B_i s_i.
 */
inline Vector vec_stack(std::span<const Matrix> blocks) {
  if (blocks.empty()) throw DimensionError("vec_stack: no blocks");
  const Index rows = blocks.front().rows();
  const Index cols = blocks.front().cols();
  Vector out(rows * cols * static_cast<Index>(blocks.size()));
  Index at = 0;
  for (const Matrix& b : blocks) {
    if (b.rows() != rows || b.cols() != cols) {
      throw DimensionError("vec_stack: blocks must share dimensions");
    }
    out.segment(at, rows * cols) = b.reshaped();
    at += rows * cols;
  }
  return out;
}

}  // namespace rlsbias

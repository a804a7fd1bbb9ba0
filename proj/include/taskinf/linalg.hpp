// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense symmetric linear algebra: a cyclic Jacobi eigensolver, spectral and
// factor-based pseudo-inverses, small PSD square roots and the bounded
// orthogonal column buffer used to compress Gauss-Newton factors.

#pragma once

#include <optional>
#include <vector>

#include "taskinf/core.hpp"

namespace taskinf {

/// Dense symmetric matrix. The constructor symmetrizes its argument as
/// (A + A^T) / 2, which makes entry (i, j) bitwise equal to entry (j, i).
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Mat& a);

  static SymMatrix identity(Index dim);
  static SymMatrix zero(Index dim);

  Index dim() const { return m_.rows(); }
  const Mat& matrix() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }
  Vec operator*(const Vec& v) const { return m_ * v; }

 private:
  Mat m_;
};

/// Eigenvalues sorted descending in signed order, eigenvectors column-paired.
struct EigenDecomposition {
  Vec values;
  Mat vectors;

  Index dim() const { return values.size(); }
  /// Q diag(values) Q^T over the first `count` eigenpairs.
  Mat reconstruct(Index count) const;
  Mat reconstruct() const { return reconstruct(values.size()); }
};

/// Q x r matrix whose columns v_i represent the sum of outer products v_i v_i^T.
class FactorMatrix {
 public:
  FactorMatrix() = default;
  explicit FactorMatrix(Index rows) : cols_(rows, 0) {}
  explicit FactorMatrix(Mat columns) : cols_(std::move(columns)) {}

  Index rows() const { return cols_.rows(); }
  Index cols() const { return cols_.cols(); }
  const Mat& matrix() const { return cols_; }
  auto column(Index i) const { return cols_.col(i); }

  void append(const Mat& more);
  /// V V^T as a dense matrix.
  Mat outer() const { return cols_ * cols_.transpose(); }

 private:
  Mat cols_;
};

/// Selects which eigen-directions are treated as non-zero when inverting.
/// Eigenvalues are sorted descending, so every rule except NonZero retains a
/// prefix.
struct Keep {
  enum class Rule { Count, RelativeThreshold, Positive, NonZero };
  Rule rule = Rule::Positive;
  Index count = 0;
  double threshold = 0.0;

  /// The `k` largest eigenvalues (signed order).
  static Keep largest(Index k) { return {Rule::Count, k, 0.0}; }
  /// Eigenvalues strictly above tau * lambda_max.
  static Keep above(double tau) { return {Rule::RelativeThreshold, 0, tau}; }
  /// Eigenvalues above the ill-conditioning floor 1e-12 * lambda_max, i.e.
  /// every non-positive (and numerically zero) eigenvalue is pruned.
  static Keep positive() { return {Rule::Positive, 0, 0.0}; }
  /// Every eigenvalue whose magnitude clears the floor, negative ones
  /// included: the unpruned ("raw") pseudo-inverse.
  static Keep nonzero() { return {Rule::NonZero, 0, 0.0}; }
};

/// Relative floor below which a retained eigenvalue makes inversion fail.
inline constexpr double kInversionFloor = 1e-12;

struct EighOptions {
  enum class Method { Auto, Jacobi, Tridiagonal };
  /// Auto runs cyclic Jacobi up to `jacobi_max_dim` and Householder
  /// tridiagonalization + implicit QR above it.
  Method method = Method::Auto;
  Index jacobi_max_dim = 256;
  /// Jacobi stops once the off-diagonal Frobenius norm is below
  /// tolerance * |A|_F.
  double tolerance = 1e-12;
  int max_sweeps = 100;
};

/// Symmetric eigendecomposition, eigenvalues descending; equal eigenvalues
/// keep the solver's column order.
EigenDecomposition eigh_symmetric(const SymMatrix& a, const EighOptions& options = {});

/// Indices (ascending) of the eigenpairs retained by `keep`; counts are
/// clamped to dim.
std::vector<Index> retained_indices(const Vec& sorted_values, const Keep& keep);
/// Number of eigenpairs retained by `keep`.
Index retained_count(const Vec& sorted_values, const Keep& keep);

/// Sum over retained eigenpairs of q_i q_i^T / lambda_i. Throws
/// NumericalError when a retained eigenvalue is below kInversionFloor
/// relative to the largest magnitude.
SymMatrix pseudo_inverse_spectral(const EigenDecomposition& e, const Keep& keep);

/// C with C C^T = a for a small PSD matrix; C = Q diag(sqrt(lambda)) so
/// directions with eigenvalue below 1e-12 come out as zero columns.
Mat psd_sqrt_small(const SymMatrix& a);

/// Orthogonal columns W = V O spanning the same outer-product sum as V
/// (W W^T == V V^T up to rounding), sorted by descending norm with ties kept
/// in column order. Columns with norm <= max(abs_tol, rel_tol * max norm) are
/// dropped.
Mat orthogonal_columns(const Mat& v, double abs_tol, double rel_tol);

/// Orthogonalizes, drops columns with norm <= drop_tol and keeps at most
/// `capacity` of the longest. drop_tol defaults to 1e-9 times the largest
/// incoming column norm.
FactorMatrix orthogonalize_keep_largest(const FactorMatrix& cols, Index capacity,
                                        std::optional<double> drop_tol = std::nullopt);

/// (V V^T)^+ without diagonalizing V V^T: diagonalize V^T V = O L O^T and sum
/// w w^T / |w|^4 over the columns w of V O with |w| > 1e-10 max|w|.
SymMatrix pseudo_inverse_from_factor(const FactorMatrix& v);

}  // namespace taskinf

// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0

#include "taskinf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace taskinf {

SymMatrix::SymMatrix(const Mat& a) {
  if (a.rows() != a.cols()) throw UsageError("SymMatrix: matrix is not square");
  m_ = (a + a.transpose()) * 0.5;
}

SymMatrix SymMatrix::identity(Index dim) { return SymMatrix(Mat::Identity(dim, dim)); }
SymMatrix SymMatrix::zero(Index dim) { return SymMatrix(Mat::Zero(dim, dim)); }

Mat EigenDecomposition::reconstruct(Index count) const {
  const auto q = vectors.leftCols(count);
  return q * values.head(count).asDiagonal() * q.transpose();
}

void FactorMatrix::append(const Mat& more) {
  if (more.cols() == 0) return;
  if (cols_.cols() == 0 && cols_.rows() == 0) {
    cols_ = more;
    return;
  }
  if (more.rows() != cols_.rows()) throw UsageError("FactorMatrix::append: row count mismatch");
  Mat merged(cols_.rows(), cols_.cols() + more.cols());
  merged << cols_, more;
  cols_ = std::move(merged);
}

namespace {

double off_diagonal_norm(const Mat& a) {
  double sum = 0.0;
  const Index n = a.rows();
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

// Indices of `keys` sorted descending; equal keys keep ascending index.
std::vector<Index> descending_order(const Vec& keys) {
  std::vector<Index> order(static_cast<std::size_t>(keys.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index x, Index y) { return keys(x) > keys(y); });
  return order;
}

EigenDecomposition sorted_decomposition(const Vec& diag, const Mat& v) {
  const auto order = descending_order(diag);
  const Index n = diag.size();
  EigenDecomposition out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    out.values(i) = diag(order[i]);
    out.vectors.col(i) = v.col(order[i]);
  }
  return out;
}

EigenDecomposition eigh_tridiagonal(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(a);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eigh_symmetric: implicit QR iteration did not converge");
  return sorted_decomposition(solver.eigenvalues(), solver.eigenvectors());
}

EigenDecomposition eigh_jacobi(const Mat& input, const EighOptions& options) {
  const Index n = input.rows();
  Mat a = input;
  Mat v = Mat::Identity(n, n);

  const double scale = a.norm();
  const double target = options.tolerance * scale;
  double off = off_diagonal_norm(a);
  int sweep = 0;
  while (off > target) {
    if (sweep == options.max_sweeps) {
      std::ostringstream msg;
      msg << "eigh_symmetric: no convergence after " << sweep
          << " sweeps; off-diagonal residual " << off << " (relative " << off / scale << ")";
      throw NumericalError(msg.str());
    }
    for (Index p = 0; p + 1 < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Entries negligible against both diagonal terms are zeroed outright.
        if (sweep > 3 && std::abs(apq) * 1e18 < std::abs(app) &&
            std::abs(apq) * 1e18 < std::abs(aqq)) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        double* cp = a.col(p).data();
        double* cq = a.col(q).data();
        for (Index k = 0; k < n; ++k) {
          const double g = cp[k];
          const double h = cq[k];
          cp[k] = c * g - s * h;
          cq[k] = s * g + c * h;
        }
        for (Index k = 0; k < n; ++k) {
          a(p, k) = cp[k];
          a(q, k) = cq[k];
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;

        double* vp = v.col(p).data();
        double* vq = v.col(q).data();
        for (Index k = 0; k < n; ++k) {
          const double g = vp[k];
          const double h = vq[k];
          vp[k] = c * g - s * h;
          vq[k] = s * g + c * h;
        }
      }
    }
    ++sweep;
    off = off_diagonal_norm(a);
  }

  return sorted_decomposition(a.diagonal(), v);
}

}  // namespace

EigenDecomposition eigh_symmetric(const SymMatrix& a, const EighOptions& options) {
  if (!a.matrix().allFinite()) throw NumericalError("eigh_symmetric: matrix has non-finite entries");
  using Method = EighOptions::Method;
  const bool jacobi = options.method == Method::Jacobi ||
                      (options.method == Method::Auto && a.dim() <= options.jacobi_max_dim);
  return jacobi ? eigh_jacobi(a.matrix(), options) : eigh_tridiagonal(a.matrix());
}

std::vector<Index> retained_indices(const Vec& values, const Keep& keep) {
  const Index n = values.size();
  std::vector<Index> out;
  if (n == 0) return out;
  const double scale = std::max(std::abs(values(0)), std::abs(values(n - 1)));
  Index prefix = 0;
  switch (keep.rule) {
    case Keep::Rule::Count:
      prefix = std::clamp<Index>(keep.count, 0, n);
      break;
    case Keep::Rule::RelativeThreshold:
      while (prefix < n && values(prefix) > keep.threshold * scale) ++prefix;
      break;
    case Keep::Rule::Positive:
      while (prefix < n && values(prefix) > kInversionFloor * scale) ++prefix;
      break;
    case Keep::Rule::NonZero:
      for (Index i = 0; i < n; ++i)
        if (std::abs(values(i)) > kInversionFloor * scale) out.push_back(i);
      return out;
  }
  for (Index i = 0; i < prefix; ++i) out.push_back(i);
  return out;
}

Index retained_count(const Vec& values, const Keep& keep) {
  return static_cast<Index>(retained_indices(values, keep).size());
}

SymMatrix pseudo_inverse_spectral(const EigenDecomposition& e, const Keep& keep) {
  const Index n = e.dim();
  const std::vector<Index> kept = retained_indices(e.values, keep);
  if (kept.empty()) return SymMatrix::zero(n);
  const double scale = std::max(std::abs(e.values(0)), std::abs(e.values(n - 1)));
  const auto r = static_cast<Index>(kept.size());
  Mat q(n, r);
  Vec inv(r);
  for (Index c = 0; c < r; ++c) {
    const Index i = kept[static_cast<std::size_t>(c)];
    const double lambda = e.values(i);
    if (!(std::abs(lambda) >= kInversionFloor * scale) || scale == 0.0) {
      std::ostringstream msg;
      msg << "pseudo_inverse_spectral: retained eigenvalue #" << i << " = " << lambda
          << " is below " << kInversionFloor << " * lambda_max (" << scale << ")";
      throw NumericalError(msg.str());
    }
    inv(c) = 1.0 / lambda;
    q.col(c) = e.vectors.col(i);
  }
  return SymMatrix(q * inv.asDiagonal() * q.transpose());
}

Mat psd_sqrt_small(const SymMatrix& a) {
  const EigenDecomposition e = eigh_symmetric(a);
  const Index n = e.dim();
  Mat c = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const double lambda = e.values(i);
    if (lambda < -1e-10) {
      std::ostringstream msg;
      msg << "psd_sqrt_small: matrix is not PSD (eigenvalue " << lambda << ")";
      throw NumericalError(msg.str());
    }
    if (lambda >= 1e-12) c.col(i) = e.vectors.col(i) * std::sqrt(lambda);
  }
  return c;
}

namespace {

// One-sided Jacobi sweeps until every column pair is orthogonal relative to
// the product of their norms.
void polish_orthogonality(Mat& w) {
  const Index r = w.cols();
  constexpr double kPairTol = 1e-13;
  for (int sweep = 0; sweep < 30; ++sweep) {
    bool rotated = false;
    for (Index i = 0; i + 1 < r; ++i) {
      for (Index j = i + 1; j < r; ++j) {
        const double alpha = w.col(i).squaredNorm();
        const double beta = w.col(j).squaredNorm();
        const double gamma = w.col(i).dot(w.col(j));
        if (std::abs(gamma) <= kPairTol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        double t = 1.0 / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        if (zeta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        double* wi = w.col(i).data();
        double* wj = w.col(j).data();
        for (Index k = 0; k < w.rows(); ++k) {
          const double g = wi[k];
          const double h = wj[k];
          wi[k] = c * g - s * h;
          wj[k] = s * g + c * h;
        }
      }
    }
    if (!rotated) return;
  }
}

Mat select_longest(const Mat& w, double abs_tol, double rel_tol) {
  const Vec norms = w.colwise().norm().transpose();
  const double largest = norms.size() ? norms.maxCoeff() : 0.0;
  const double cut = std::max(abs_tol, rel_tol * largest);
  std::vector<Index> kept;
  for (Index i : descending_order(norms))
    if (norms(i) > cut) kept.push_back(i);
  Mat out(w.rows(), static_cast<Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) out.col(static_cast<Index>(k)) = w.col(kept[k]);
  return out;
}

}  // namespace

Mat orthogonal_columns(const Mat& v, double abs_tol, double rel_tol) {
  if (v.cols() == 0) return Mat(v.rows(), 0);
  const SymMatrix gram(v.transpose() * v);
  const EigenDecomposition e = eigh_symmetric(gram);
  Mat w = select_longest(v * e.vectors, abs_tol, rel_tol);
  polish_orthogonality(w);
  return select_longest(w, abs_tol, rel_tol);
}

FactorMatrix orthogonalize_keep_largest(const FactorMatrix& cols, Index capacity,
                                        std::optional<double> drop_tol) {
  if (capacity < 1) throw UsageError("orthogonalize_keep_largest: capacity must be >= 1");
  if (cols.cols() == 0) return FactorMatrix(cols.rows());
  const double largest_in = cols.matrix().colwise().norm().maxCoeff();
  const double tol = drop_tol.value_or(1e-9 * largest_in);
  Mat w = orthogonal_columns(cols.matrix(), tol, 0.0);
  if (w.cols() > capacity) w = Mat(w.leftCols(capacity));
  return FactorMatrix(std::move(w));
}

SymMatrix pseudo_inverse_from_factor(const FactorMatrix& v) {
  const Index q = v.rows();
  const Mat w = orthogonal_columns(v.matrix(), 0.0, 1e-10);
  if (w.cols() == 0) return SymMatrix::zero(q);
  const Vec inv4 = w.colwise().squaredNorm().transpose().cwiseAbs2().cwiseInverse();
  return SymMatrix(w * inv4.asDiagonal() * w.transpose());
}

}  // namespace taskinf

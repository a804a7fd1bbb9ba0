// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0
//
// The meta-Hessian H = (1/M) sum_i d^2 L_i / d omega^2 over the query losses
// of the training tasks, built three ways:
//   * exact: central differences of the analytic meta-gradient,
//   * Gauss-Newton dense: sum of J_n^T (diag(s) - s s^T) J_n,
//   * Gauss-Newton factored: the same matrix as V V^T with a bounded
//     orthogonal column buffer compressed after every task.
// Gauss-Newton columns are scaled by 1 / sqrt(n_query * M) so every path
// estimates the same task-averaged matrix.

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <variant>

#include "taskinf/linalg.hpp"
#include "taskinf/metalearn.hpp"

namespace taskinf {

enum class HessianMethod { Exact, GaussNewton };

std::string to_string(HessianMethod m);
HessianMethod hessian_method_from_string(const std::string& name);

struct HessianMeta {
  Index task_count = 0;
  HessianMethod method = HessianMethod::Exact;
  /// Column buffer capacity of the factored representation.
  std::optional<Index> capacity;
  /// Relative Frobenius asymmetry of the exact matrix before symmetrization.
  double asymmetry = 0.0;

  bool operator==(const HessianMeta&) const = default;
};

struct HessianRep {
  std::variant<SymMatrix, FactorMatrix> value;
  HessianMeta meta;

  bool is_dense() const { return std::holds_alternative<SymMatrix>(value); }
  /// q.
  Index dim() const;
  /// The represented q x q matrix.
  Mat dense() const;
};

inline constexpr Index kDefaultDenseCap = 2000;

/// Central differences of the mean meta-gradient, column j with step
/// 1e-4 * (1 + |omega_j|), then symmetrized. Throws UsageError when q exceeds
/// dense_cap and NumericalError naming the task and coordinate on NaN.
HessianRep exact_meta_hessian(const MetaParams& mp, std::span<const Task> tasks,
                              Index dense_cap = kDefaultDenseCap);

/// Factor columns J_n^T C_n / sqrt(n_query * task_count) for every query
/// sample n, with C_n C_n^T = diag(s_n) - s_n s_n^T. Zero columns of C_n
/// (saturated or rank-deficient directions) are omitted.
FactorMatrix gn_columns_for_task(const MetaParams& mp, const Task& task, Index task_count);

/// Streams tasks in index order, appending their columns and compressing the
/// buffer to at most `capacity` orthogonal columns after each one.
HessianRep accumulate_gn(const MetaParams& mp, std::span<const Task> tasks, Index capacity);

/// Direct dense sum of J_n^T (diag(s_n) - s_n s_n^T) J_n / (n_query * M).
HessianRep gn_dense(const MetaParams& mp, std::span<const Task> tasks);

struct SpectralInverse {
  SymMatrix pinv;
  /// H^+ H, the orthogonal projector onto the retained directions.
  SymMatrix projector;
  Index retained = 0;
  /// Negative eigenvalues left out of the inverse (dense only).
  Index discarded_negative = 0;
  /// Eigenvalues (dense) or squared column norms (factored), descending.
  Vec spectrum;
  /// True when a requested count exceeded the available directions.
  bool clamped = false;
  Index available = 0;
};

/// Dense: eigendecomposition and spectral pseudo-inverse. Factored:
/// pseudo-inverse from the orthogonalized factor restricted to the directions
/// selected by `keep` (ranked by column norm).
SpectralInverse invert(const HessianRep& h, const Keep& keep);

/// Binary layout: "TIHS", version, variant (0 dense, 1 factored), q,
/// dim or column count, method, capacity (0 = none), task count, asymmetry,
/// then the row-major float64 payload (q x q, or q x r).
std::string encode_hessian(const HessianRep& h);
HessianRep decode_hessian(std::string bytes, const std::string& origin = "buffer");
void save_hessian(const std::filesystem::path& path, const HessianRep& h);
HessianRep load_hessian(const std::filesystem::path& path);

}  // namespace taskinf

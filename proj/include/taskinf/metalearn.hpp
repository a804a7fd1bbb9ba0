// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Adaptation algorithms and meta-training.
//
// MAML: the meta-parameters are the initial weights and adaptation is one
// gradient step on the support loss, theta = omega - alpha * grad L_s(omega).
// Its Jacobian I - alpha * H_s is symmetric, so the same HVP serves both
// Jacobian-vector and vector-Jacobian products.
//
// ProtoNet: the meta-parameters are the backbone weights and adaptation
// leaves them unchanged; class centroids of the support embeddings define
// the classifier logits -|f(x) - c_k|^2.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "taskinf/model.hpp"
#include "taskinf/task.hpp"

namespace taskinf {

enum class LearnerKind { Maml, ProtoNet };

std::string to_string(LearnerKind k);
LearnerKind learner_from_string(const std::string& name);

struct Learner {
  LearnerKind kind = LearnerKind::Maml;
  /// MAML inner step size alpha; ignored by ProtoNet.
  double inner_lr = 0.01;

  bool operator==(const Learner&) const = default;
};

struct MetaParams {
  MlpSpec spec;
  Learner learner;
  Vec omega;

  Index size() const { return omega.size(); }
  /// Throws UsageError when omega does not match the layer widths.
  void validate() const;
};

struct AdaptResult {
  Vec theta;
  /// d theta / d omega, p x q, populated only on request.
  std::optional<Mat> jacobian;
};

AdaptResult adapt(const MetaParams& mp, const Task& task, bool want_jacobian = false);

/// Query logits after adaptation, n_query x n_ways.
Mat adapted_query_logits(const MetaParams& mp, const Task& task);

double meta_loss(const MetaParams& mp, const Task& task);
Vec meta_grad(const MetaParams& mp, const Task& task);
double meta_loss_and_grad(const MetaParams& mp, const Task& task, Vec& grad);
/// Query accuracy of the adapted model.
double meta_accuracy(const MetaParams& mp, const Task& task);

/// (d theta / d omega) v without forming the Jacobian.
Vec adapt_jvp(const MetaParams& mp, const Task& task, const Vec& v);
/// (d theta / d omega)^T v.
Vec adapt_vjp(const MetaParams& mp, const Task& task, const Vec& v);

/// Gradient of the query loss with respect to the adapted weights, at the
/// adapted weights. For ProtoNet this includes the centroid path, since the
/// centroids are functions of the same weights.
Vec query_grad_at_adapted(const MetaParams& mp, const Task& task);

/// d y_{nk} / d omega for the adapted query logits; row n * n_ways + k.
Mat meta_output_jacobian(const MetaParams& mp, const Task& task);

/// Mean meta-gradient over tasks (summed in index order).
Vec mean_meta_grad(const MetaParams& mp, std::span<const Task> tasks);
/// |mean meta-gradient|_2, the stationarity diagnostic.
double total_meta_gradient_norm(const MetaParams& mp, std::span<const Task> tasks);

enum class Optimizer { Adam, Sgd };

struct TrainConfig {
  /// Tasks per meta-batch, sampled with replacement. 0 means every task in
  /// index order on every step (deterministic full-batch descent).
  Index meta_batch = 32;
  Index steps = 1000;
  Optimizer optimizer = Optimizer::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Adds weight_decay * |omega|^2 / 2 to the objective.
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
};

struct TrainLogEntry {
  Index step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
};

struct TrainResult {
  MetaParams params;
  std::vector<TrainLogEntry> log;
  /// Mean meta-loss / query accuracy over the whole taskset after training.
  double final_loss = 0.0;
  double final_accuracy = 0.0;
};

/// Optimizes the mean meta-loss over `tasks`. `task_weights`, when given,
/// scales each task's loss (1 everywhere reproduces the plain objective);
/// used to upweight a single task for leave-one-out style oracles.
TrainResult meta_train(const MetaParams& init, std::span<const Task> tasks, const TrainConfig& config,
                       std::span<const double> task_weights = {});

/// Mean meta-loss and query accuracy over a taskset.
std::pair<double, double> evaluate(const MetaParams& mp, std::span<const Task> tasks);

}  // namespace taskinf

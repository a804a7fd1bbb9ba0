// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic few-shot tasks. Every generator is a pure function of its
// arguments and seed: task i of a taskset depends only on (spec.seed, i), so
// tasksets of different sizes share their common prefix.

#pragma once

#include <cstdint>
#include <vector>

#include "taskinf/task.hpp"

namespace taskinf {

struct TaskDistributionSpec {
  enum class Kind { Clustered, Noise };
  Kind kind = Kind::Clustered;
  Index dim = 8;
  int n_ways = 5;
  Index k_support = 5;
  Index k_query = 5;
  /// Clustered: per-coordinate std of the class centers.
  double center_scale = 1.0;
  /// Clustered: per-coordinate std of samples around their center.
  double within_class_noise = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TaskDistributionSpec&) const = default;
};

std::string to_string(TaskDistributionSpec::Kind k);
TaskDistributionSpec::Kind distribution_kind_from_string(const std::string& name);

/// Clustered tasks draw n_ways Gaussian centers and Gaussian samples around
/// them. Noise tasks draw every feature i.i.d. with the same marginal variance
/// (center_scale^2 + within_class_noise^2) and balanced labels that carry no
/// feature information. Ids run from first_id; provenance follows the kind.
std::vector<Task> sample_taskset(const TaskDistributionSpec& spec, Index count,
                                 std::uint64_t first_id = 0);

struct DegradeParams {
  /// Attenuation strength: degraded features are scaled by (1 - alpha).
  double alpha = 0.0;
  /// Fraction of samples degraded.
  double ratio = 0.0;

  void validate() const;
};

enum class DegradeTarget { Both, Support, Query };

/// Scales a seeded subset of round(ratio * n) samples of each selected set by
/// (1 - alpha). The subset is the prefix of a permutation fixed by
/// (seed, task id), so larger ratios degrade supersets of smaller ones.
Task degrade_task(const Task& task, const DegradeParams& dp, std::uint64_t seed,
                  DegradeTarget target = DegradeTarget::Both);

/// Random rotation exp-like map of a skew matrix: Cayley transform of
/// scale * K, K skew-symmetric with Gaussian entries / sqrt(dim).
Mat random_rotation(Index dim, double scale, std::uint64_t seed);

/// `count` rotated copies of a task sharing its group. Variant v gets id
/// first_id + v and rotation random_rotation(dim, transform_scale, ...).
std::vector<Task> augment_group(const Task& task, Index count, double transform_scale,
                                std::uint64_t seed, std::uint64_t first_id);

/// Concatenates regular and noise tasks, stamps their provenance and
/// shuffles the order with `seed`. Ids must be unique across both lists.
std::vector<Task> mix_tasksets(const std::vector<Task>& regular, const std::vector<Task>& noise,
                               std::uint64_t seed);

}  // namespace taskinf

// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Task-level influence. For a training task j with meta-gradient g_j:
//   i_meta(j)      = -H^+ g_j                      (shift of the meta-parameters)
//   i_adapt(i, j)  = (d theta_i / d omega) i_meta(j) (shift of task i's adapted weights)
//   i_perf(i, j)   = <dL_i/d theta, i_adapt(i, j)> (change of task i's query loss)
// all per unit upweighting of task j's loss. Positive i_perf means training
// on j raises the test loss; scores default to the helpful-positive -i_perf.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taskinf/hessian.hpp"

namespace taskinf {

struct InfluenceRecord {
  std::uint64_t task_id = 0;
  std::optional<std::uint64_t> group_id;
  Vec i_meta;

  std::uint64_t group() const { return group_id.value_or(task_id); }
};

InfluenceRecord influence_meta(const SpectralInverse& inv, const MetaParams& mp, const Task& train_task);
/// influence_meta for every task, in order.
std::vector<InfluenceRecord> influence_meta_all(const SpectralInverse& inv, const MetaParams& mp,
                                                std::span<const Task> train_tasks);

/// Sum of the i_meta of every record in `group`, accumulated in record order.
/// Throws UsageError when the group has no members.
InfluenceRecord influence_group(std::span<const InfluenceRecord> records, std::uint64_t group);

Vec influence_adapt(const MetaParams& mp, const Task& test_task, const InfluenceRecord& rec);
double influence_perf(const MetaParams& mp, const Task& test_task, const InfluenceRecord& rec);

/// Multiplier applied to i_perf to obtain a score.
enum class ScoreSign { Helpful, Raw };
double sign_factor(ScoreSign s);
std::string to_string(ScoreSign s);

struct ScoreTable {
  std::vector<std::uint64_t> test_ids;
  std::vector<std::uint64_t> train_ids;
  /// tests x trains.
  Mat scores;
  /// Per test: train column indices by descending score, ties by ascending id.
  std::vector<std::vector<Index>> ranking;
  ScoreSign sign = ScoreSign::Helpful;

  /// Position (0 = top) of train column `train_col` in test row `test_row`.
  Index rank_of(Index test_row, Index train_col) const;
  /// "test_id,train_id,score,rank" rows, test-major in table order.
  std::string to_csv() const;
};

/// Orders train columns by descending score, ties by ascending id.
std::vector<Index> rank_descending(const Eigen::Ref<const Vec>& scores, std::span<const std::uint64_t> ids);

/// Scores every (test, train) pair from stored records; training data is not
/// needed once the records exist.
ScoreTable score_table(const MetaParams& mp, std::span<const InfluenceRecord> records,
                       std::span<const Task> test_tasks, ScoreSign sign = ScoreSign::Helpful);
ScoreTable score_table(const MetaParams& mp, const SpectralInverse& inv, std::span<const Task> train_tasks,
                       std::span<const Task> test_tasks, ScoreSign sign = ScoreSign::Helpful);

/// (omega_eps - omega) / eps where omega_eps retrains from `init` with task
/// j's loss upweighted by eps (its weight in the task mean becomes 1 + M eps)
/// under the same seed and schedule. `baseline`, when given, is reused as
/// the unperturbed result.
Vec loo_retrain_oracle(const MetaParams& init, std::span<const Task> tasks, const TrainConfig& config,
                       std::size_t j, double epsilon, const Vec* baseline = nullptr);

/// Binary layout: "TIIR", version, record count n, q, then n entries of
/// (task id, has group, group id), then the n x q row-major i_meta matrix.
std::string encode_records(std::span<const InfluenceRecord> records);
std::vector<InfluenceRecord> decode_records(std::string bytes, const std::string& origin = "buffer");
void save_records(const std::filesystem::path& path, std::span<const InfluenceRecord> records);
std::vector<InfluenceRecord> load_records(const std::filesystem::path& path);

}  // namespace taskinf

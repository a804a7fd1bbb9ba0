// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment protocols built on the influence scores, plus the small
// statistics they need. Every report is a pure function of its inputs and
// serializes to JSON as {schema_version, config_echo, results}.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "taskinf/influence.hpp"
#include "taskinf/taskgen.hpp"

namespace taskinf {

inline constexpr int kReportSchemaVersion = 1;

// ---- statistics -----------------------------------------------------------

/// Exact two-sided binomial p-value at p = 0.5: the total probability of
/// outcomes no more likely than the observed one, via log-factorials.
double binomial_two_sided_p(Index successes, Index trials);

/// Pearson r; nullopt when either sequence has zero variance or n < 2.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);
/// Spearman rho (Pearson on average ranks).
std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys);

struct Summary {
  double mean = 0.0;
  /// Population standard deviation.
  double std = 0.0;
  Index count = 0;
};

Summary summarize(std::span<const double> values);

/// Median of a copy of the values; 0 for an empty input.
double median(std::vector<double> values);

// ---- self-rank ------------------------------------------------------------

struct SelfRankReport {
  std::vector<std::uint64_t> test_ids;
  std::vector<Index> self_rank;
  std::vector<double> self_score;
  Summary rank_summary;
  double fraction_rank0 = 0.0;
};

/// Uses every training task as a test task and locates the task itself in
/// that test's ranking. `records` must be in training-task order.
SelfRankReport run_self_rank(const MetaParams& mp, std::span<const InfluenceRecord> records,
                             std::span<const Task> train_tasks);
SelfRankReport run_self_rank(const MetaParams& mp, const SpectralInverse& inv, std::span<const Task> train_tasks);

// ---- degradation ----------------------------------------------------------

struct DegradationConfig {
  std::vector<double> alphas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  /// Ratio held fixed during the alpha sweep.
  double fixed_ratio = 1.0;
  std::vector<double> ratios{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  /// Alpha held fixed during the ratio sweep.
  double fixed_alpha = 1.0;
  std::uint64_t seed = 0;
  DegradeTarget target = DegradeTarget::Both;
};

struct CorrelationSummary {
  Summary stats;
  /// Tasks whose correlation is undefined (constant rank or score).
  Index excluded = 0;
};

struct DegradationTask {
  std::uint64_t task_id = 0;
  std::vector<Index> alpha_ranks;
  std::vector<double> alpha_scores;
  std::vector<Index> ratio_ranks;
  std::vector<double> ratio_scores;
  std::optional<double> alpha_rank_r, alpha_score_r, ratio_rank_r, ratio_score_r;
};

struct DegradationReport {
  std::vector<DegradationTask> tasks;
  CorrelationSummary alpha_rank, alpha_score, ratio_rank, ratio_score;
};

/// Degrades each training task along the alpha and ratio grids, scores the
/// degraded copy against all training tasks and correlates the grid with
/// the original task's rank and score.
DegradationReport run_degradation(const MetaParams& mp, std::span<const InfluenceRecord> records,
                                  std::span<const Task> train_tasks, const DegradationConfig& config);

// ---- distribution distinction ---------------------------------------------

struct ProperOrderEntry {
  std::uint64_t test_id = 0;
  /// Meta-loss of the test task; entries are sorted by it, ascending.
  double test_loss = 0.0;
  double mean_regular = 0.0, mean_noise = 0.0;
  double median_regular = 0.0, median_noise = 0.0;
  bool proper_order_mean = false;
  bool proper_order_median = false;
};

struct ProperOrderReport {
  std::vector<ProperOrderEntry> entries;
  Index tests = 0;
  Index regular_units = 0;
  Index noise_units = 0;
  Index count_mean = 0;
  Index count_median = 0;
  double p_value_mean = 1.0;
  double p_value_median = 1.0;
};

/// Scores every (test, training unit) pair and compares regular against
/// noise units per test, strict inequality. With `use_groups`, units are
/// task groups scored by group influence; a group must not mix provenance.
/// Throws UsageError when either provenance is absent.
ProperOrderReport run_distribution_distinction(const MetaParams& mp, std::span<const InfluenceRecord> records,
                                               std::span<const Task> train_tasks, std::span<const Task> test_tasks,
                                               bool use_groups);

// ---- exact versus Gauss-Newton --------------------------------------------

struct ExactVsGnReport {
  std::vector<Index> keeps;       // columns: exact eigenpairs treated as non-zero
  std::vector<Index> capacities;  // rows: Gauss-Newton buffer sizes
  Mat mean;                       // capacities x keeps
  Mat std;
  /// Column index of the largest mean in each row.
  std::vector<Index> row_argmax;
  /// Rows whose argmax column is within one grid step of the row index
  /// (meaningful when the two grids are aligned).
  Index rows_near_diagonal = 0;
};

/// Per test, Pearson correlation between the exact-Hessian scores (largest
/// k eigenpairs) and the Gauss-Newton factor scores (buffer B, every
/// retained column), summarized over tests. Undefined correlations are
/// skipped. Tests default to the training tasks when `test_tasks` is empty.
ExactVsGnReport run_exact_vs_gn(const MetaParams& mp, std::span<const Task> train_tasks,
                                std::span<const Task> test_tasks, std::span<const Index> keep_grid,
                                std::span<const Index> capacity_grid);

// ---- JSON -----------------------------------------------------------------

nlohmann::json to_json(const Summary& s);
nlohmann::json to_json(const SelfRankReport& r);
nlohmann::json to_json(const DegradationReport& r);
nlohmann::json to_json(const ProperOrderReport& r);
nlohmann::json to_json(const ExactVsGnReport& r);

/// {schema_version, config_echo, results}.
nlohmann::json make_report(const nlohmann::json& config_echo, const nlohmann::json& results);

}  // namespace taskinf

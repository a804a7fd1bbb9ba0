// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration and the pipeline stages behind the command-line tool:
// gen -> train -> hessian -> influence -> experiment -> report. Each stage
// reads the artifacts of the earlier ones from the output directory and
// writes its own, so expensive stages are computed once and reused.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "taskinf/experiments.hpp"
#include "taskinf/hessian.hpp"
#include "taskinf/influence.hpp"
#include "taskinf/taskgen.hpp"

namespace taskinf {

struct TasksetSource {
  TaskDistributionSpec spec;
  Index count = 0;
  std::uint64_t first_id = 0;

  bool operator==(const TasksetSource&) const = default;
};

struct Augmentation {
  /// Rotated copies per base task; 0 disables augmentation.
  Index count = 0;
  double scale = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t first_id = 200000;

  bool operator==(const Augmentation&) const = default;
};

struct TrainingSetConfig {
  TasksetSource regular;
  std::optional<TasksetSource> noise;
  std::uint64_t mix_seed = 0;
  Augmentation augmentation;

  bool operator==(const TrainingSetConfig&) const = default;
};

struct HessianStageConfig {
  HessianMethod method = HessianMethod::Exact;
  Keep keep = Keep::positive();
  /// Gauss-Newton buffer size; nullopt means q.
  std::optional<Index> capacity;
  Index dense_cap = kDefaultDenseCap;
};

struct ExperimentStageConfig {
  /// Any of "self_rank", "degradation", "distribution", "exact_vs_gn".
  std::vector<std::string> run;
  DegradationConfig degradation;
  /// Also run the degradation sweep with the unpruned inverse.
  bool raw_baseline = false;
  /// Distribution distinction over task groups instead of single tasks.
  bool use_groups = true;
  std::vector<Index> keep_grid;
  std::vector<Index> capacity_grid;
};

struct RunConfig {
  /// Master seed; every stage seed not given explicitly derives from it.
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "run";
  MlpSpec model;
  Learner learner;
  std::uint64_t init_seed = 0;
  TrainingSetConfig train_tasks;
  std::optional<TasksetSource> test_tasks;
  TrainConfig training;
  HessianStageConfig hessian;
  ScoreSign sign = ScoreSign::Helpful;
  ExperimentStageConfig experiments;

  /// Throws UsageError on inconsistent dimensions or unknown names.
  void validate() const;
};

/// Parses a configuration document. `seed_override` replaces the master seed
/// before unspecified stage seeds are derived from it.
RunConfig run_config_from_json(const nlohmann::json& j, std::optional<std::uint64_t> seed_override = {});
RunConfig load_run_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = {});
/// The fully resolved configuration (every seed explicit).
nlohmann::json to_json(const RunConfig& config);

/// Artifact file names inside the output directory.
namespace artifact {
inline constexpr const char* kTrainTasks = "train_tasks.json";
inline constexpr const char* kTestTasks = "test_tasks.json";
inline constexpr const char* kParams = "params.bin";
inline constexpr const char* kTrainLog = "train_log.jsonl";
inline constexpr const char* kHessian = "hessian.bin";
inline constexpr const char* kSpectrum = "spectrum.json";
inline constexpr const char* kInfluence = "influence.bin";
inline constexpr const char* kScores = "scores.csv";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kSummary = "summary.txt";
}  // namespace artifact

/// The training taskset described by the config: regular and noise tasks
/// mixed, then each base task followed by its rotated copies, all copies
/// sharing the base task's group.
std::vector<Task> build_training_tasks(const TrainingSetConfig& config);

/// Each stage returns a short human-readable summary for stdout.
std::string cmd_gen(const RunConfig& config);
std::string cmd_train(const RunConfig& config);
std::string cmd_hessian(const RunConfig& config);
std::string cmd_influence(const RunConfig& config);
std::string cmd_experiment(const RunConfig& config);
std::string cmd_report(const RunConfig& config);

/// Runs every stage in order.
std::string cmd_all(const RunConfig& config);

/// Process exit code for an exception: 1 usage, 2 numerical, 3 I/O.
int exit_code_for(const std::exception& e);

}  // namespace taskinf

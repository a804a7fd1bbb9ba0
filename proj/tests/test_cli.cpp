// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <filesystem>

#include "taskinf/binary.hpp"
#include "taskinf/cli.hpp"
#include "taskinf/io.hpp"

using namespace taskinf;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json tiny_config(const fs::path& out) {
  json j = json::parse(R"({
    "seed": 5,
    "model": {"widths": [4, 6, 3]},
    "learner": {"kind": "maml", "alpha": 0.2},
    "train_tasks": {
      "regular": {"dim": 4, "n_ways": 3, "k_support": 3, "k_query": 3, "count": 6},
      "noise": {"dim": 4, "n_ways": 3, "k_support": 3, "k_query": 6, "count": 2},
      "augmentation": {"count": 1}
    },
    "test_tasks": {"dim": 4, "n_ways": 3, "k_support": 3, "k_query": 3, "count": 3},
    "training": {"meta_batch": 4, "steps": 20, "lr": 0.01},
    "hessian": {"method": "exact", "keep": "positive"},
    "experiments": {
      "run": ["self_rank", "degradation", "distribution", "exact_vs_gn"],
      "degradation": {"alphas": [0, 0.5, 1], "ratios": [0, 1]},
      "raw_baseline": true,
      "keep_grid": [4, 8],
      "capacity_grid": [4, 8]
    }
  })");
  j["output_dir"] = out.string();
  return j;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) { fs::remove_all(path); }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("run config resolves every seed and round-trips through JSON") {
  const RunConfig c = run_config_from_json(tiny_config("x"));
  const json resolved = to_json(c);
  CHECK(resolved["training"]["seed"].is_number_unsigned());
  CHECK(resolved["train_tasks"]["noise"]["seed"].is_number_unsigned());
  CHECK(resolved["train_tasks"]["noise"]["kind"] == "noise");
  CHECK(to_json(run_config_from_json(resolved)) == resolved);

  const RunConfig other = run_config_from_json(tiny_config("x"), 6);
  CHECK(other.seed == 6);
  CHECK(other.training.seed != c.training.seed);
  CHECK(other.train_tasks.regular.spec.seed != c.train_tasks.regular.spec.seed);

  json explicit_seed = tiny_config("x");
  explicit_seed["training"]["seed"] = 42;
  CHECK(run_config_from_json(explicit_seed, 6).training.seed == 42);
}

TEST_CASE("run config rejects inconsistent or unknown settings") {
  json bad = tiny_config("x");
  bad["model"]["widths"] = {5, 6, 3};
  CHECK_THROWS_AS(run_config_from_json(bad), UsageError);
  bad = tiny_config("x");
  bad["model"]["widths"] = {4, 6, 4};
  CHECK_THROWS_AS(run_config_from_json(bad), UsageError);
  bad = tiny_config("x");
  bad["trainning"] = json::object();
  CHECK_THROWS_AS(run_config_from_json(bad), UsageError);
  bad = tiny_config("x");
  bad["experiments"]["run"] = {"self_rank", "nope"};
  CHECK_THROWS_AS(run_config_from_json(bad), UsageError);
  bad = tiny_config("x");
  bad["experiments"]["keep_grid"] = json::array();
  CHECK_THROWS_AS(run_config_from_json(bad), UsageError);
  bad = tiny_config("x");
  bad["hessian"]["keep"] = "all";
  CHECK_THROWS_AS(run_config_from_json(bad), UsageError);
  bad = tiny_config("x");
  bad["training"]["steps"] = "many";
  CHECK_THROWS_AS(run_config_from_json(bad), UsageError);
}

TEST_CASE("build_training_tasks groups rotated copies with their base task") {
  const RunConfig c = run_config_from_json(tiny_config("x"));
  const auto tasks = build_training_tasks(c.train_tasks);
  REQUIRE(tasks.size() == 16);
  for (std::size_t i = 0; i < tasks.size(); i += 2) {
    CHECK(tasks[i + 1].group() == tasks[i].id);
    CHECK(tasks[i].group() == tasks[i].id);
    CHECK(tasks[i + 1].provenance == tasks[i].provenance);
  }
}

TEST_CASE("cmd_gen writes empty tasksets for zero counts and is reproducible") {
  TempDir dir("taskinf_cli_gen");
  json j = tiny_config(dir.path);
  j["train_tasks"]["regular"]["count"] = 0;
  j["train_tasks"].erase("noise");
  j.erase("test_tasks");
  cmd_gen(run_config_from_json(j));
  CHECK(load_taskset(dir.path / artifact::kTrainTasks).tasks.empty());
  CHECK(load_taskset(dir.path / artifact::kTestTasks).tasks.empty());

  const RunConfig c = run_config_from_json(tiny_config(dir.path));
  cmd_gen(c);
  const std::string first = read_text_file(dir.path / artifact::kTrainTasks);
  cmd_gen(c);
  CHECK(read_text_file(dir.path / artifact::kTrainTasks) == first);
}

TEST_CASE("pipeline artifacts are byte-identical across runs and thread counts") {
  TempDir a("taskinf_cli_a");
  TempDir b("taskinf_cli_b");
  cmd_all(run_config_from_json(tiny_config(a.path)));
  set_max_threads(1);
  cmd_all(run_config_from_json(tiny_config(b.path)));
  set_max_threads(0);
  for (const char* name : {artifact::kTrainTasks, artifact::kTestTasks, artifact::kParams, artifact::kTrainLog,
                           artifact::kHessian, artifact::kSpectrum, artifact::kInfluence, artifact::kScores,
                           artifact::kReport, artifact::kSummary}) {
    INFO(name);
    CHECK(read_text_file(a.path / name) == read_text_file(b.path / name));
  }
  // CSV row count is |train| x |test| plus the header.
  const std::string csv = read_text_file(a.path / artifact::kScores);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 16 * 3 + 1);
  const json report = json::parse(read_text_file(a.path / artifact::kReport));
  CHECK(report["schema_version"] == kReportSchemaVersion);
  CHECK_FALSE(report["config_echo"].contains("output_dir"));
  for (const char* key : {"self_rank", "degradation", "degradation_raw", "distribution", "exact_vs_gn"})
    CHECK(report["results"].contains(key));
  const std::string log = read_text_file(a.path / artifact::kTrainLog);
  CHECK(std::count(log.begin(), log.end(), '\n') == 20);
  CHECK(json::parse(log.substr(0, log.find('\n'))).contains("grad_norm"));
}

TEST_CASE("stage errors: missing artifacts, mismatched q, zero steps, empty experiment list") {
  TempDir dir("taskinf_cli_err");
  json j = tiny_config(dir.path);
  CHECK_THROWS_AS(cmd_train(run_config_from_json(j)), IoError);
  try {
    cmd_train(run_config_from_json(j));
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(artifact::kTrainTasks) != std::string::npos);
  }

  j["training"]["steps"] = 0;
  RunConfig c = run_config_from_json(j);
  cmd_gen(c);
  cmd_train(c);
  const MetaParams trained = load_meta_params(dir.path / artifact::kParams);
  CHECK(trained.omega == Mlp(c.model).init(c.init_seed));
  CHECK_THROWS_AS(cmd_influence(c), IoError);

  cmd_hessian(c);
  json spectrum = json::parse(read_text_file(dir.path / artifact::kSpectrum));
  CHECK(spectrum["representation"] == "dense");
  CHECK(spectrum["lambda_max"].get<double>() >= spectrum["lambda_min"].get<double>());

  // A Hessian built for a different parameter count.
  json other = j;
  other["model"]["widths"] = {4, 7, 3};
  const RunConfig wide = run_config_from_json(other);
  cmd_train(wide);
  CHECK_THROWS_AS(cmd_influence(c), UsageError);
  cmd_train(c);

  c.experiments.run.clear();
  cmd_experiment(c);
  const json report = json::parse(read_text_file(dir.path / artifact::kReport));
  CHECK(report["results"].empty());
  CHECK(report["config_echo"]["seed"] == 5);
  CHECK(cmd_report(c) == "no experiment results\n");

  c.hessian.method = HessianMethod::GaussNewton;
  cmd_hessian(c);
  spectrum = json::parse(read_text_file(dir.path / artifact::kSpectrum));
  CHECK(spectrum["representation"] == "factored");
  CHECK(spectrum["lambda_min"].get<double>() >= 0.0);

  c.hessian.method = HessianMethod::Exact;
  c.hessian.dense_cap = 10;
  CHECK_THROWS_AS(cmd_hessian(c), UsageError);
}

TEST_CASE("exit codes follow the error category") {
  CHECK(exit_code_for(UsageError("u")) == 1);
  CHECK(exit_code_for(NumericalError("n")) == 2);
  CHECK(exit_code_for(IoError("i")) == 3);
}

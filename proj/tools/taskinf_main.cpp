// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0
//
// taskinf <stage> --config run.json [--seed N] [--threads N] [--out DIR]

#include <functional>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "taskinf/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Task influence for meta-learning: generate, train, invert, attribute, evaluate."};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out_dir;
  app.add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Master seed; overrides the config");
  app.add_option("--threads", threads, "Worker thread cap (default: all cores)");
  app.add_option("--out", out_dir, "Output directory; overrides the config");

  using Stage = std::function<std::string(const taskinf::RunConfig&)>;
  const std::vector<std::tuple<std::string, std::string, Stage>> stages{
      {"gen", "Sample the training and test tasksets", taskinf::cmd_gen},
      {"train", "Meta-train and save the parameters", taskinf::cmd_train},
      {"hessian", "Build the meta-Hessian and print its spectrum summary", taskinf::cmd_hessian},
      {"influence", "Store influence records and write the score table", taskinf::cmd_influence},
      {"experiment", "Run the configured experiments into a report", taskinf::cmd_experiment},
      {"report", "Summarize the experiment report", taskinf::cmd_report},
      {"run", "Every stage in order", taskinf::cmd_all},
  };
  std::map<CLI::App*, Stage> by_command;
  for (const auto& [name, help, stage] : stages) by_command[app.add_subcommand(name, help)] = stage;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (threads) taskinf::set_max_threads(*threads);
    taskinf::RunConfig config = taskinf::load_run_config(config_path, seed);
    if (!out_dir.empty()) config.output_dir = out_dir;
    for (const auto& [command, stage] : by_command)
      if (command->parsed()) std::cout << stage(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return taskinf::exit_code_for(e);
  }
  return 0;
}

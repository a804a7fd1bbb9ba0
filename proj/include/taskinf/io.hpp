// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Taskset JSON files and meta-parameter binaries.
//
// Taskset schema:
//   {"version": 1, "spec": <generator spec or null>,
//    "tasks": [{"id", "group_id" (int or null), "provenance", "n_ways",
//               "support": {"x": [[f64]], "y": [int]}, "query": {...}}]}
// "n_ways" and "provenance" are optional on input (inferred from the labels,
// default "regular") so externally extracted features load unchanged.

#pragma once

#include <filesystem>
#include <vector>

#include "json.hpp"
#include "taskinf/metalearn.hpp"
#include "taskinf/taskgen.hpp"

namespace taskinf {

inline constexpr int kTasksetVersion = 1;

struct TasksetFile {
  nlohmann::json spec;  // null when unknown
  std::vector<Task> tasks;
};

nlohmann::json to_json(const TaskDistributionSpec& spec);
TaskDistributionSpec distribution_spec_from_json(const nlohmann::json& j);

nlohmann::json taskset_to_json(const TasksetFile& file);
TasksetFile taskset_from_json(const nlohmann::json& j);

void save_taskset(const std::filesystem::path& path, const TasksetFile& file);
TasksetFile load_taskset(const std::filesystem::path& path);

/// Binary layout: "TIMP", version, learner name, inner_lr, layer widths,
/// hidden activations, q, q float64 values.
void save_meta_params(const std::filesystem::path& path, const MetaParams& mp);
MetaParams load_meta_params(const std::filesystem::path& path);
std::string encode_meta_params(const MetaParams& mp);
MetaParams decode_meta_params(std::string bytes, const std::string& origin = "buffer");

}  // namespace taskinf

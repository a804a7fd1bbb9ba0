// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0

#include "taskinf/io.hpp"

#include <algorithm>

#include "taskinf/binary.hpp"

namespace taskinf {

using nlohmann::json;

namespace {

constexpr std::string_view kParamsMagic = "TIMP";
constexpr std::uint64_t kParamsVersion = 1;

json batch_to_json(const Batch& b) {
  json x = json::array();
  for (Index i = 0; i < b.size(); ++i) {
    json row = json::array();
    for (Index j = 0; j < b.inputs.cols(); ++j) row.push_back(b.inputs(i, j));
    x.push_back(std::move(row));
  }
  return {{"x", std::move(x)}, {"y", b.labels}};
}

Batch batch_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("x") || !j.contains("y"))
    throw IoError(where + ": batch needs \"x\" and \"y\"");
  const json& x = j.at("x");
  const json& y = j.at("y");
  if (!x.is_array() || !y.is_array() || x.size() != y.size())
    throw IoError(where + ": \"x\" and \"y\" must be arrays of equal length");
  Batch b;
  const std::size_t cols = x.empty() ? 0 : x.front().size();
  b.inputs.resize(static_cast<Index>(x.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x[i].is_array() || x[i].size() != cols) throw IoError(where + ": ragged feature rows");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!x[i][k].is_number()) throw IoError(where + ": non-numeric feature");
      b.inputs(static_cast<Index>(i), static_cast<Index>(k)) = x[i][k].get<double>();
    }
    if (!y[i].is_number_integer()) throw IoError(where + ": labels must be integers");
    b.labels.push_back(y[i].get<int>());
  }
  return b;
}

}  // namespace

json to_json(const TaskDistributionSpec& s) {
  return {{"kind", to_string(s.kind)},
          {"dim", s.dim},
          {"n_ways", s.n_ways},
          {"k_support", s.k_support},
          {"k_query", s.k_query},
          {"center_scale", s.center_scale},
          {"within_class_noise", s.within_class_noise},
          {"seed", s.seed}};
}

TaskDistributionSpec distribution_spec_from_json(const json& j) {
  if (!j.is_object()) throw UsageError("task distribution spec must be a JSON object");
  TaskDistributionSpec s;
  try {
    s.kind = distribution_kind_from_string(j.value("kind", std::string("clustered")));
    s.dim = j.value("dim", s.dim);
    s.n_ways = j.value("n_ways", s.n_ways);
    s.k_support = j.value("k_support", s.k_support);
    s.k_query = j.value("k_query", s.k_query);
    s.center_scale = j.value("center_scale", s.center_scale);
    s.within_class_noise = j.value("within_class_noise", s.within_class_noise);
    s.seed = j.value("seed", s.seed);
  } catch (const json::exception& e) {
    throw UsageError(std::string("task distribution spec: ") + e.what());
  }
  s.validate();
  return s;
}

json taskset_to_json(const TasksetFile& file) {
  json tasks = json::array();
  for (const Task& t : file.tasks) {
    tasks.push_back({{"id", t.id},
                     {"group_id", t.group_id ? json(*t.group_id) : json(nullptr)},
                     {"provenance", to_string(t.provenance)},
                     {"n_ways", t.n_ways},
                     {"support", batch_to_json(t.support)},
                     {"query", batch_to_json(t.query)}});
  }
  return {{"version", kTasksetVersion}, {"spec", file.spec}, {"tasks", std::move(tasks)}};
}

TasksetFile taskset_from_json(const json& j) {
  if (!j.is_object() || !j.contains("tasks") || !j.at("tasks").is_array())
    throw IoError("taskset: expected an object with a \"tasks\" array");
  if (j.value("version", kTasksetVersion) != kTasksetVersion)
    throw IoError("taskset: unsupported version");
  TasksetFile file;
  file.spec = j.value("spec", json(nullptr));
  for (const json& tj : j.at("tasks")) {
    try {
      Task t;
      t.id = tj.at("id").get<std::uint64_t>();
      const std::string where = "task " + std::to_string(t.id);
      if (tj.contains("group_id") && !tj.at("group_id").is_null())
        t.group_id = tj.at("group_id").get<std::uint64_t>();
      t.provenance = provenance_from_string(tj.value("provenance", std::string("regular")));
      t.support = batch_from_json(tj.at("support"), where + " support");
      t.query = batch_from_json(tj.at("query"), where + " query");
      if (tj.contains("n_ways")) {
        t.n_ways = tj.at("n_ways").get<int>();
      } else {
        int top = -1;
        for (const Batch* b : {&t.support, &t.query})
          for (int y : b->labels) top = std::max(top, y);
        t.n_ways = top + 1;
      }
      t.validate();
      file.tasks.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw IoError(std::string("taskset: malformed task entry: ") + e.what());
    } catch (const UsageError& e) {
      throw IoError(std::string("taskset: ") + e.what());
    }
  }
  return file;
}

void save_taskset(const std::filesystem::path& path, const TasksetFile& file) {
  write_text_file(path, taskset_to_json(file).dump() + "\n");
}

TasksetFile load_taskset(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": invalid JSON: " + e.what());
  }
  return taskset_from_json(j);
}

std::string encode_meta_params(const MetaParams& mp) {
  mp.validate();
  BinaryWriter w;
  w.bytes(kParamsMagic);
  w.u64(kParamsVersion);
  w.str(to_string(mp.learner.kind));
  w.f64(mp.learner.inner_lr);
  w.u64(mp.spec.widths.size());
  for (Index width : mp.spec.widths) w.u64(static_cast<std::uint64_t>(width));
  w.u64(mp.spec.activations.size());
  for (Activation a : mp.spec.activations) w.str(to_string(a));
  w.vec(mp.omega);
  return w.buffer();
}

MetaParams decode_meta_params(std::string bytes, const std::string& origin) {
  BinaryReader r(std::move(bytes), origin);
  r.expect_magic(kParamsMagic);
  if (r.u64() != kParamsVersion) throw IoError(origin + ": unsupported meta-parameter version");
  MetaParams mp;
  try {
    mp.learner.kind = learner_from_string(r.str());
    mp.learner.inner_lr = r.f64();
    const std::uint64_t layers = r.u64();
    if (layers > 1024) throw IoError(origin + ": implausible layer count");
    for (std::uint64_t i = 0; i < layers; ++i) mp.spec.widths.push_back(static_cast<Index>(r.u64()));
    const std::uint64_t acts = r.u64();
    if (acts > 1024) throw IoError(origin + ": implausible activation count");
    for (std::uint64_t i = 0; i < acts; ++i) mp.spec.activations.push_back(activation_from_string(r.str()));
    mp.omega = r.vec();
    r.expect_end();
    mp.validate();
  } catch (const UsageError& e) {
    throw IoError(origin + ": " + e.what());
  }
  return mp;
}

void save_meta_params(const std::filesystem::path& path, const MetaParams& mp) {
  write_text_file(path, encode_meta_params(mp));
}

MetaParams load_meta_params(const std::filesystem::path& path) {
  return decode_meta_params(read_text_file(path), path.string());
}

}  // namespace taskinf

// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0

#include "taskinf/taskgen.hpp"

#include <cmath>
#include <numeric>
#include <set>

#include "taskinf/rng.hpp"

namespace taskinf {

std::string to_string(TaskDistributionSpec::Kind k) {
  return k == TaskDistributionSpec::Kind::Clustered ? "clustered" : "noise";
}

TaskDistributionSpec::Kind distribution_kind_from_string(const std::string& name) {
  if (name == "clustered") return TaskDistributionSpec::Kind::Clustered;
  if (name == "noise") return TaskDistributionSpec::Kind::Noise;
  throw UsageError("unknown task distribution kind '" + name + "'");
}

void TaskDistributionSpec::validate() const {
  if (n_ways < 2) throw UsageError("task distribution: n_ways must be >= 2");
  if (dim < 1) throw UsageError("task distribution: dim must be >= 1");
  if (k_support < 1 || k_query < 1) throw UsageError("task distribution: shots must be >= 1");
  if (center_scale < 0.0 || within_class_noise < 0.0)
    throw UsageError("task distribution: scales must be non-negative");
}

namespace {

Batch draw_batch(const Mat& centers, Index shots, double noise, Rng& rng) {
  const Index c = centers.rows();
  const Index d = centers.cols();
  Batch b;
  b.inputs.resize(c * shots, d);
  for (Index s = 0; s < shots; ++s)
    for (Index k = 0; k < c; ++k) {
      const Index row = s * c + k;
      for (Index j = 0; j < d; ++j) b.inputs(row, j) = centers(k, j) + noise * rng.normal();
      b.labels.push_back(static_cast<int>(k));
    }
  return b;
}

}  // namespace

std::vector<Task> sample_taskset(const TaskDistributionSpec& spec, Index count, std::uint64_t first_id) {
  spec.validate();
  std::vector<Task> tasks;
  tasks.reserve(static_cast<std::size_t>(std::max<Index>(count, 0)));
  for (Index i = 0; i < count; ++i) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    Task t;
    t.id = first_id + static_cast<std::uint64_t>(i);
    t.n_ways = spec.n_ways;
    if (spec.kind == TaskDistributionSpec::Kind::Clustered) {
      t.provenance = Provenance::Regular;
      Mat centers(spec.n_ways, spec.dim);
      for (Index k = 0; k < spec.n_ways; ++k)
        for (Index j = 0; j < spec.dim; ++j) centers(k, j) = spec.center_scale * rng.normal();
      t.support = draw_batch(centers, spec.k_support, spec.within_class_noise, rng);
      t.query = draw_batch(centers, spec.k_query, spec.within_class_noise, rng);
    } else {
      t.provenance = Provenance::Noise;
      const double scale = std::hypot(spec.center_scale, spec.within_class_noise);
      const Mat origin = Mat::Zero(spec.n_ways, spec.dim);
      t.support = draw_batch(origin, spec.k_support, scale, rng);
      t.query = draw_batch(origin, spec.k_query, scale, rng);
    }
    tasks.push_back(std::move(t));
  }
  return tasks;
}

void DegradeParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("degrade: alpha must lie in [0, 1]");
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw UsageError("degrade: ratio must lie in [0, 1]");
}

Task degrade_task(const Task& task, const DegradeParams& dp, std::uint64_t seed, DegradeTarget target) {
  dp.validate();
  Task out = task;
  if (dp.alpha == 0.0 || dp.ratio == 0.0) return out;
  const double factor = 1.0 - dp.alpha;
  auto degrade = [&](Batch& b, std::uint64_t stream) {
    const Index n = b.size();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(derive_seed(derive_seed(seed, task.id), stream));
    rng.shuffle(std::span<Index>(order));
    const auto m = static_cast<Index>(std::llround(dp.ratio * static_cast<double>(n)));
    for (Index i = 0; i < m; ++i) b.inputs.row(order[static_cast<std::size_t>(i)]) *= factor;
  };
  if (target != DegradeTarget::Query) degrade(out.support, 0);
  if (target != DegradeTarget::Support) degrade(out.query, 1);
  return out;
}

Mat random_rotation(Index dim, double scale, std::uint64_t seed) {
  const Mat id = Mat::Identity(dim, dim);
  if (scale == 0.0) return id;
  Rng rng(seed);
  Mat a(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < dim; ++i) a(i, j) = rng.normal();
  const Mat k = scale * (a - a.transpose()) / (2.0 * std::sqrt(static_cast<double>(dim)));
  // Cayley transform of a skew matrix is orthogonal with determinant +1.
  return (id - k).partialPivLu().solve(id + k);
}

std::vector<Task> augment_group(const Task& task, Index count, double transform_scale, std::uint64_t seed,
                                std::uint64_t first_id) {
  if (count < 0) throw UsageError("augment_group: count must be non-negative");
  std::vector<Task> out;
  const std::uint64_t group = task.group();
  for (Index v = 0; v < count; ++v) {
    const Mat r = random_rotation(task.input_dim(), transform_scale,
                                  derive_seed(derive_seed(seed, task.id), static_cast<std::uint64_t>(v)));
    Task t = task;
    t.id = first_id + static_cast<std::uint64_t>(v);
    t.group_id = group;
    t.support.inputs = task.support.inputs * r.transpose();
    t.query.inputs = task.query.inputs * r.transpose();
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Task> mix_tasksets(const std::vector<Task>& regular, const std::vector<Task>& noise,
                               std::uint64_t seed) {
  std::vector<Task> out;
  out.reserve(regular.size() + noise.size());
  std::set<std::uint64_t> seen;
  auto add = [&](const Task& t, Provenance p) {
    if (!seen.insert(t.id).second)
      throw UsageError("mix_tasksets: duplicate task id " + std::to_string(t.id));
    out.push_back(t);
    out.back().provenance = p;
  };
  for (const Task& t : regular) add(t, Provenance::Regular);
  for (const Task& t : noise) add(t, Provenance::Noise);
  if (!noise.empty()) {
    Rng rng(seed);
    rng.shuffle(std::span<Task>(out));
  }
  return out;
}

}  // namespace taskinf

// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0

#include "taskinf/influence.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "taskinf/binary.hpp"

namespace taskinf {

InfluenceRecord influence_meta(const SpectralInverse& inv, const MetaParams& mp, const Task& train_task) {
  if (inv.pinv.dim() != mp.size())
    throw UsageError("influence_meta: inverse dimension does not match the meta-parameters");
  InfluenceRecord rec;
  rec.task_id = train_task.id;
  rec.group_id = train_task.group_id;
  rec.i_meta = -(inv.pinv * meta_grad(mp, train_task));
  return rec;
}

std::vector<InfluenceRecord> influence_meta_all(const SpectralInverse& inv, const MetaParams& mp,
                                                std::span<const Task> train_tasks) {
  std::vector<InfluenceRecord> out(train_tasks.size());
  parallel_for(train_tasks.size(), [&](std::size_t i) { out[i] = influence_meta(inv, mp, train_tasks[i]); });
  return out;
}

InfluenceRecord influence_group(std::span<const InfluenceRecord> records, std::uint64_t group) {
  InfluenceRecord out;
  out.task_id = group;
  out.group_id = group;
  bool any = false;
  for (const InfluenceRecord& r : records) {
    if (r.group() != group) continue;
    if (!any) {
      out.i_meta = r.i_meta;
      any = true;
    } else {
      if (r.i_meta.size() != out.i_meta.size()) throw UsageError("influence_group: record sizes differ");
      out.i_meta += r.i_meta;
    }
  }
  if (!any) throw UsageError("influence_group: group " + std::to_string(group) + " has no members");
  return out;
}

Vec influence_adapt(const MetaParams& mp, const Task& test_task, const InfluenceRecord& rec) {
  return adapt_jvp(mp, test_task, rec.i_meta);
}

double influence_perf(const MetaParams& mp, const Task& test_task, const InfluenceRecord& rec) {
  return query_grad_at_adapted(mp, test_task).dot(influence_adapt(mp, test_task, rec));
}

double sign_factor(ScoreSign s) { return s == ScoreSign::Helpful ? -1.0 : 1.0; }

std::string to_string(ScoreSign s) { return s == ScoreSign::Helpful ? "helpful_positive" : "raw"; }

std::vector<Index> rank_descending(const Eigen::Ref<const Vec>& scores, std::span<const std::uint64_t> ids) {
  std::vector<Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return ids[static_cast<std::size_t>(a)] < ids[static_cast<std::size_t>(b)];
  });
  return order;
}

Index ScoreTable::rank_of(Index test_row, Index train_col) const {
  const auto& r = ranking[static_cast<std::size_t>(test_row)];
  return static_cast<Index>(std::find(r.begin(), r.end(), train_col) - r.begin());
}

std::string ScoreTable::to_csv() const {
  std::string out = "test_id,train_id,score,rank\n";
  char buf[64];
  for (std::size_t t = 0; t < test_ids.size(); ++t) {
    std::vector<Index> rank(train_ids.size());
    for (std::size_t pos = 0; pos < ranking[t].size(); ++pos)
      rank[static_cast<std::size_t>(ranking[t][pos])] = static_cast<Index>(pos);
    for (std::size_t j = 0; j < train_ids.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", scores(static_cast<Index>(t), static_cast<Index>(j)));
      out += std::to_string(test_ids[t]) + "," + std::to_string(train_ids[j]) + "," + buf + "," +
             std::to_string(rank[j]) + "\n";
    }
  }
  return out;
}

ScoreTable score_table(const MetaParams& mp, std::span<const InfluenceRecord> records,
                       std::span<const Task> test_tasks, ScoreSign sign) {
  ScoreTable table;
  table.sign = sign;
  for (const InfluenceRecord& r : records) {
    if (r.i_meta.size() != mp.size()) throw UsageError("score_table: record size does not match omega");
    table.train_ids.push_back(r.task_id);
  }
  for (const Task& t : test_tasks) table.test_ids.push_back(t.id);
  const auto n_train = static_cast<Index>(records.size());
  Mat stacked(mp.size(), n_train);
  for (Index j = 0; j < n_train; ++j) stacked.col(j) = records[static_cast<std::size_t>(j)].i_meta;
  table.scores.resize(static_cast<Index>(test_tasks.size()), n_train);
  table.ranking.resize(test_tasks.size());
  const double factor = sign_factor(sign);
  // <dL/dtheta, J i_meta> = <J^T dL/dtheta, i_meta>: one pullback per test.
  parallel_for(test_tasks.size(), [&](std::size_t i) {
    const Task& test = test_tasks[i];
    const Vec pulled = adapt_vjp(mp, test, query_grad_at_adapted(mp, test));
    const Vec row = factor * (stacked.transpose() * pulled);
    if (!row.allFinite())
      throw NumericalError("score_table: non-finite score for test task " + std::to_string(test.id));
    table.scores.row(static_cast<Index>(i)) = row.transpose();
  });
  for (std::size_t i = 0; i < test_tasks.size(); ++i)
    table.ranking[i] = rank_descending(table.scores.row(static_cast<Index>(i)).transpose(), table.train_ids);
  return table;
}

ScoreTable score_table(const MetaParams& mp, const SpectralInverse& inv, std::span<const Task> train_tasks,
                       std::span<const Task> test_tasks, ScoreSign sign) {
  const auto records = influence_meta_all(inv, mp, train_tasks);
  return score_table(mp, records, test_tasks, sign);
}

Vec loo_retrain_oracle(const MetaParams& init, std::span<const Task> tasks, const TrainConfig& config,
                       std::size_t j, double epsilon, const Vec* baseline) {
  if (j >= tasks.size()) throw UsageError("loo_retrain_oracle: task index out of range");
  if (epsilon == 0.0) throw UsageError("loo_retrain_oracle: epsilon must be non-zero");
  std::vector<double> weights(tasks.size(), 1.0);
  weights[j] += static_cast<double>(tasks.size()) * epsilon;
  const Vec base = baseline ? *baseline : meta_train(init, tasks, config).params.omega;
  const Vec perturbed = meta_train(init, tasks, config, weights).params.omega;
  return (perturbed - base) / epsilon;
}

namespace {

constexpr std::string_view kRecordsMagic = "TIIR";
constexpr std::uint64_t kRecordsVersion = 1;

}  // namespace

std::string encode_records(std::span<const InfluenceRecord> records) {
  const Index q = records.empty() ? 0 : records.front().i_meta.size();
  BinaryWriter w;
  w.bytes(kRecordsMagic);
  w.u64(kRecordsVersion);
  w.u64(records.size());
  w.u64(static_cast<std::uint64_t>(q));
  for (const InfluenceRecord& r : records) {
    if (r.i_meta.size() != q) throw UsageError("encode_records: records have different sizes");
    w.u64(r.task_id);
    w.u64(r.group_id ? 1 : 0);
    w.u64(r.group_id.value_or(0));
  }
  for (const InfluenceRecord& r : records)
    for (Index k = 0; k < q; ++k) w.f64(r.i_meta(k));
  return w.buffer();
}

std::vector<InfluenceRecord> decode_records(std::string bytes, const std::string& origin) {
  BinaryReader r(std::move(bytes), origin);
  r.expect_magic(kRecordsMagic);
  if (r.u64() != kRecordsVersion) throw IoError(origin + ": unsupported influence store version");
  const std::uint64_t n = r.u64();
  const std::uint64_t q = r.u64();
  if (n > (1u << 24) || q > (1u << 24)) throw IoError(origin + ": implausible influence store size");
  std::vector<InfluenceRecord> out(static_cast<std::size_t>(n));
  for (InfluenceRecord& rec : out) {
    rec.task_id = r.u64();
    const std::uint64_t has = r.u64();
    const std::uint64_t group = r.u64();
    if (has > 1) throw IoError(origin + ": corrupt group flag");
    if (has) rec.group_id = group;
  }
  for (InfluenceRecord& rec : out) {
    rec.i_meta.resize(static_cast<Index>(q));
    for (Index k = 0; k < rec.i_meta.size(); ++k) rec.i_meta(k) = r.f64();
  }
  r.expect_end();
  return out;
}

void save_records(const std::filesystem::path& path, std::span<const InfluenceRecord> records) {
  write_text_file(path, encode_records(records));
}

std::vector<InfluenceRecord> load_records(const std::filesystem::path& path) {
  return decode_records(read_text_file(path), path.string());
}

}  // namespace taskinf

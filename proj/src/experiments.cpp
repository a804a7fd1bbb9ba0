// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0

#include "taskinf/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace taskinf {

using nlohmann::json;

double binomial_two_sided_p(Index successes, Index trials) {
  if (trials < 0 || successes < 0 || successes > trials)
    throw UsageError("binomial_two_sided_p: need 0 <= successes <= trials");
  const double n = static_cast<double>(trials);
  const double log_half_n = n * std::log(0.5);
  auto log_pmf = [&](Index k) {
    const double kk = static_cast<double>(k);
    return std::lgamma(n + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(n - kk + 1.0) + log_half_n;
  };
  const double observed = log_pmf(successes);
  // Relative slack so symmetric outcomes with rounding-level differences in
  // their log-probabilities are counted together.
  const double cutoff = observed + 1e-9;
  double p = 0.0;
  for (Index k = 0; k <= trials; ++k) {
    const double lp = log_pmf(k);
    if (lp <= cutoff) p += std::exp(lp);
  }
  return std::min(1.0, p);
}

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw UsageError("pearson: sequences differ in length");
  const std::size_t n = xs.size();
  if (n < 2) return std::nullopt;
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw UsageError("spearman: sequences differ in length");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = static_cast<Index>(values.size());
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

Mat stack_records(std::span<const InfluenceRecord> records, Index q) {
  Mat m(q, static_cast<Index>(records.size()));
  for (std::size_t j = 0; j < records.size(); ++j) {
    if (records[j].i_meta.size() != q) throw UsageError("influence record size does not match omega");
    m.col(static_cast<Index>(j)) = records[j].i_meta;
  }
  return m;
}

// Helpful-positive scores of one test task against stacked records.
Vec score_row(const MetaParams& mp, const Mat& stacked, const Task& test) {
  const Vec pulled = adapt_vjp(mp, test, query_grad_at_adapted(mp, test));
  return sign_factor(ScoreSign::Helpful) * (stacked.transpose() * pulled);
}

Index position_of(const std::vector<Index>& ranking, Index col) {
  return static_cast<Index>(std::find(ranking.begin(), ranking.end(), col) - ranking.begin());
}

}  // namespace

SelfRankReport run_self_rank(const MetaParams& mp, std::span<const InfluenceRecord> records,
                             std::span<const Task> train_tasks) {
  if (records.size() != train_tasks.size()) throw UsageError("run_self_rank: one record per training task required");
  const ScoreTable table = score_table(mp, records, train_tasks);
  SelfRankReport r;
  std::vector<double> ranks;
  Index zeros = 0;
  for (std::size_t i = 0; i < train_tasks.size(); ++i) {
    const auto row = static_cast<Index>(i);
    r.test_ids.push_back(train_tasks[i].id);
    const Index rank = table.rank_of(row, row);
    r.self_rank.push_back(rank);
    r.self_score.push_back(table.scores(row, row));
    ranks.push_back(static_cast<double>(rank));
    zeros += rank == 0;
  }
  r.rank_summary = summarize(ranks);
  r.fraction_rank0 = train_tasks.empty() ? 0.0 : static_cast<double>(zeros) / static_cast<double>(train_tasks.size());
  return r;
}

SelfRankReport run_self_rank(const MetaParams& mp, const SpectralInverse& inv, std::span<const Task> train_tasks) {
  const auto records = influence_meta_all(inv, mp, train_tasks);
  return run_self_rank(mp, records, train_tasks);
}

DegradationReport run_degradation(const MetaParams& mp, std::span<const InfluenceRecord> records,
                                  std::span<const Task> train_tasks, const DegradationConfig& config) {
  if (records.size() != train_tasks.size())
    throw UsageError("run_degradation: one record per training task required");
  const Mat stacked = stack_records(records, mp.size());
  std::vector<std::uint64_t> ids;
  for (const InfluenceRecord& rec : records) ids.push_back(rec.task_id);

  DegradationReport report;
  report.tasks.resize(train_tasks.size());
  parallel_for(train_tasks.size(), [&](std::size_t i) {
    DegradationTask& out = report.tasks[i];
    const Task& task = train_tasks[i];
    out.task_id = task.id;
    const auto col = static_cast<Index>(i);
    auto probe = [&](const DegradeParams& dp, std::vector<Index>& ranks, std::vector<double>& scores) {
      const Task degraded = degrade_task(task, dp, config.seed, config.target);
      const Vec row = score_row(mp, stacked, degraded);
      ranks.push_back(position_of(rank_descending(row, ids), col));
      scores.push_back(row(col));
    };
    for (double a : config.alphas) probe({a, config.fixed_ratio}, out.alpha_ranks, out.alpha_scores);
    for (double r : config.ratios) probe({config.fixed_alpha, r}, out.ratio_ranks, out.ratio_scores);
    const std::vector<double> ar(out.alpha_ranks.begin(), out.alpha_ranks.end());
    const std::vector<double> rr(out.ratio_ranks.begin(), out.ratio_ranks.end());
    out.alpha_rank_r = pearson(config.alphas, ar);
    out.alpha_score_r = pearson(config.alphas, out.alpha_scores);
    out.ratio_rank_r = pearson(config.ratios, rr);
    out.ratio_score_r = pearson(config.ratios, out.ratio_scores);
  });
  auto collect = [&](std::optional<double> DegradationTask::*field) {
    std::vector<double> vals;
    CorrelationSummary c;
    for (const DegradationTask& t : report.tasks) {
      if (const auto& v = t.*field)
        vals.push_back(*v);
      else
        ++c.excluded;
    }
    c.stats = summarize(vals);
    return c;
  };
  report.alpha_rank = collect(&DegradationTask::alpha_rank_r);
  report.alpha_score = collect(&DegradationTask::alpha_score_r);
  report.ratio_rank = collect(&DegradationTask::ratio_rank_r);
  report.ratio_score = collect(&DegradationTask::ratio_score_r);
  return report;
}

ProperOrderReport run_distribution_distinction(const MetaParams& mp, std::span<const InfluenceRecord> records,
                                               std::span<const Task> train_tasks, std::span<const Task> test_tasks,
                                               bool use_groups) {
  if (records.size() != train_tasks.size())
    throw UsageError("run_distribution_distinction: one record per training task required");
  std::vector<InfluenceRecord> units;
  std::vector<Provenance> provenance;
  if (use_groups) {
    std::map<std::uint64_t, Provenance> group_prov;
    std::vector<std::uint64_t> order;
    for (const Task& t : train_tasks) {
      const auto [it, fresh] = group_prov.emplace(t.group(), t.provenance);
      if (fresh)
        order.push_back(t.group());
      else if (it->second != t.provenance)
        throw UsageError("run_distribution_distinction: group " + std::to_string(t.group()) + " mixes provenance");
    }
    for (std::uint64_t g : order) {
      units.push_back(influence_group(records, g));
      provenance.push_back(group_prov.at(g));
    }
  } else {
    units.assign(records.begin(), records.end());
    for (const Task& t : train_tasks) provenance.push_back(t.provenance);
  }
  ProperOrderReport report;
  report.regular_units = std::count(provenance.begin(), provenance.end(), Provenance::Regular);
  report.noise_units = static_cast<Index>(provenance.size()) - report.regular_units;
  if (report.regular_units == 0 || report.noise_units == 0)
    throw UsageError("run_distribution_distinction: needs both regular and noise training tasks");

  const Mat stacked = stack_records(units, mp.size());
  report.entries.resize(test_tasks.size());
  parallel_for(test_tasks.size(), [&](std::size_t i) {
    const Vec row = score_row(mp, stacked, test_tasks[i]);
    std::vector<double> reg, noise;
    for (std::size_t j = 0; j < provenance.size(); ++j)
      (provenance[j] == Provenance::Regular ? reg : noise).push_back(row(static_cast<Index>(j)));
    ProperOrderEntry& e = report.entries[i];
    e.test_id = test_tasks[i].id;
    e.test_loss = meta_loss(mp, test_tasks[i]);
    e.mean_regular = summarize(reg).mean;
    e.mean_noise = summarize(noise).mean;
    e.median_regular = median(reg);
    e.median_noise = median(noise);
    e.proper_order_mean = e.mean_regular > e.mean_noise;
    e.proper_order_median = e.median_regular > e.median_noise;
  });
  std::stable_sort(report.entries.begin(), report.entries.end(), [](const auto& a, const auto& b) {
    if (a.test_loss != b.test_loss) return a.test_loss < b.test_loss;
    return a.test_id < b.test_id;
  });
  report.tests = static_cast<Index>(test_tasks.size());
  for (const auto& e : report.entries) {
    report.count_mean += e.proper_order_mean;
    report.count_median += e.proper_order_median;
  }
  report.p_value_mean = binomial_two_sided_p(report.count_mean, report.tests);
  report.p_value_median = binomial_two_sided_p(report.count_median, report.tests);
  return report;
}

ExactVsGnReport run_exact_vs_gn(const MetaParams& mp, std::span<const Task> train_tasks,
                                std::span<const Task> test_tasks, std::span<const Index> keep_grid,
                                std::span<const Index> capacity_grid) {
  if (test_tasks.empty()) test_tasks = train_tasks;
  ExactVsGnReport report;
  report.keeps.assign(keep_grid.begin(), keep_grid.end());
  report.capacities.assign(capacity_grid.begin(), capacity_grid.end());
  const auto nk = static_cast<Index>(keep_grid.size());
  const auto nb = static_cast<Index>(capacity_grid.size());
  report.mean = Mat::Zero(nb, nk);
  report.std = Mat::Zero(nb, nk);

  auto scores_for = [&](const SymMatrix& pinv) {
    SpectralInverse inv;
    inv.pinv = pinv;
    return score_table(mp, inv, train_tasks, test_tasks).scores;
  };
  const HessianRep exact = exact_meta_hessian(mp, train_tasks);
  const EigenDecomposition eig = eigh_symmetric(std::get<SymMatrix>(exact.value));
  std::vector<Mat> exact_scores;
  for (Index k : keep_grid) exact_scores.push_back(scores_for(pseudo_inverse_spectral(eig, Keep::largest(k))));

  for (Index b = 0; b < nb; ++b) {
    const HessianRep gn = accumulate_gn(mp, train_tasks, capacity_grid[static_cast<std::size_t>(b)]);
    const Mat gn_scores = scores_for(invert(gn, Keep::positive()).pinv);
    for (Index k = 0; k < nk; ++k) {
      const Mat& ex = exact_scores[static_cast<std::size_t>(k)];
      std::vector<double> rs;
      for (Index t = 0; t < ex.rows(); ++t) {
        const Vec a = ex.row(t).transpose();
        const Vec g = gn_scores.row(t).transpose();
        if (const auto r = pearson(std::span(a.data(), static_cast<std::size_t>(a.size())),
                                   std::span(g.data(), static_cast<std::size_t>(g.size()))))
          rs.push_back(*r);
      }
      const Summary s = summarize(rs);
      report.mean(b, k) = s.mean;
      report.std(b, k) = s.std;
    }
  }
  for (Index b = 0; b < nb; ++b) {
    Index arg = 0;
    if (nk > 0) report.mean.row(b).maxCoeff(&arg);
    report.row_argmax.push_back(arg);
    report.rows_near_diagonal += nk > 0 && std::abs(arg - b) <= 1;
  }
  return report;
}

json to_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.std}, {"count", s.count}}; }

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json correlation_json(const CorrelationSummary& c) {
  return {{"mean", c.stats.mean}, {"std", c.stats.std}, {"defined", c.stats.count}, {"excluded", c.excluded}};
}

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

json to_json(const SelfRankReport& r) {
  json per = json::array();
  for (std::size_t i = 0; i < r.test_ids.size(); ++i)
    per.push_back({{"test_id", r.test_ids[i]}, {"self_rank", r.self_rank[i]}, {"self_score", r.self_score[i]}});
  return {{"per_test", std::move(per)},
          {"summary", {{"mean", r.rank_summary.mean}, {"std", r.rank_summary.std}, {"fraction_rank0", r.fraction_rank0}}}};
}

json to_json(const DegradationReport& r) {
  json per = json::array();
  for (const DegradationTask& t : r.tasks)
    per.push_back({{"task_id", t.task_id},
                   {"alpha_ranks", t.alpha_ranks},
                   {"alpha_scores", t.alpha_scores},
                   {"ratio_ranks", t.ratio_ranks},
                   {"ratio_scores", t.ratio_scores},
                   {"r_alpha_rank", optional_json(t.alpha_rank_r)},
                   {"r_alpha_score", optional_json(t.alpha_score_r)},
                   {"r_ratio_rank", optional_json(t.ratio_rank_r)},
                   {"r_ratio_score", optional_json(t.ratio_score_r)}});
  return {{"per_task", std::move(per)},
          {"correlations",
           {{"alpha_rank", correlation_json(r.alpha_rank)},
            {"alpha_score", correlation_json(r.alpha_score)},
            {"ratio_rank", correlation_json(r.ratio_rank)},
            {"ratio_score", correlation_json(r.ratio_score)}}}};
}

json to_json(const ProperOrderReport& r) {
  json per = json::array();
  for (const ProperOrderEntry& e : r.entries)
    per.push_back({{"test_id", e.test_id},
                   {"test_loss", e.test_loss},
                   {"mean_regular", e.mean_regular},
                   {"mean_noise", e.mean_noise},
                   {"median_regular", e.median_regular},
                   {"median_noise", e.median_noise},
                   {"proper_order_mean", e.proper_order_mean},
                   {"proper_order_median", e.proper_order_median}});
  return {{"per_test", std::move(per)},
          {"tests", r.tests},
          {"regular_units", r.regular_units},
          {"noise_units", r.noise_units},
          {"count_mean", r.count_mean},
          {"count_median", r.count_median},
          {"p_value_mean", r.p_value_mean},
          {"p_value_median", r.p_value_median},
          {"binomial_test", "two_sided"}};
}

json to_json(const ExactVsGnReport& r) {
  return {{"keeps", r.keeps},
          {"capacities", r.capacities},
          {"mean", matrix_json(r.mean)},
          {"std", matrix_json(r.std)},
          {"row_argmax", r.row_argmax},
          {"rows_near_diagonal", r.rows_near_diagonal}};
}

json make_report(const json& config_echo, const json& results) {
  return {{"schema_version", kReportSchemaVersion}, {"config_echo", config_echo}, {"results", results}};
}

}  // namespace taskinf

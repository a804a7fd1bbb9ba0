// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion. Runs every criterion by
// default; pass criterion numbers as arguments to run a subset. Exit status is
// non-zero when any selected criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <string>

#include "taskinf/binary.hpp"
#include "taskinf/cli.hpp"
#include "taskinf/experiments.hpp"
#include "../test_util.hpp"

using namespace taskinf;
using namespace taskinf::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

MetaParams make_params(std::vector<Index> widths, LearnerKind kind, double alpha, std::uint64_t seed) {
  MetaParams mp;
  mp.spec = MlpSpec::make(std::move(widths));
  mp.learner = {kind, alpha};
  mp.omega = Mlp(mp.spec).init(seed);
  return mp;
}

double cosine(const Vec& a, const Vec& b) { return a.dot(b) / (a.norm() * b.norm()); }

// ---- 1: derivatives against central differences ---------------------------

Outcome derivative_correctness() {
  const std::vector<std::vector<Index>> shapes{{3, 4}, {4, 6, 3}, {5, 8, 4}, {6, 10, 8, 3}, {8, 16, 5}, {10, 20, 5}};
  int instances = 0;
  double worst = 0.0;
  std::string worst_what;
  auto track = [&](double err, const char* what) {
    if (err > worst) worst = err, worst_what = what;
  };
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    const auto& widths = shapes[seed % shapes.size()];
    Rng rng(1000 + seed);
    const Index d = widths.front();
    const int c = static_cast<int>(widths.back());
    const Mlp mlp(MlpSpec::make(widths));
    const Vec w = mlp.init(seed) + 0.1 * random_vector(mlp.parameter_count(), rng);
    const Batch batch = random_batch(7, d, c, rng);

    track(rel_err(mlp.grad(w, batch), fd_gradient([&](const Vec& x) { return mlp.loss(x, batch); }, w)), "grad");
    const Vec v = random_vector(w.size(), rng);
    track(rel_err(mlp.hvp(w, batch, v), fd_directional([&](const Vec& x) { return mlp.grad(x, batch); }, w, v)),
          "hvp");
    const Mat jac = mlp.output_jacobian(w, batch.inputs);
    Mat fd_jac(jac.rows(), jac.cols());
    for (Index j = 0; j < w.size(); ++j) {
      const Vec e = Vec::Unit(w.size(), j);
      const Vec col = fd_directional(
          [&](const Vec& x) {
            const Mat y = mlp.forward(x, batch.inputs);
            Vec flat(y.size());
            for (Index n = 0; n < y.rows(); ++n)
              for (Index k = 0; k < y.cols(); ++k) flat(n * y.cols() + k) = y(n, k);
            return flat;
          },
          w, e, 1e-5 * (1.0 + std::abs(w(j))));
      fd_jac.col(j) = col;
    }
    track(rel_err(jac, fd_jac), "output_jacobian");

    Task task;
    task.id = seed;
    task.n_ways = c;
    task.support = random_batch(2 * c, d, c, rng);
    task.query = random_batch(2 * c, d, c, rng);
    for (int k = 0; k < c; ++k) task.support.labels[static_cast<std::size_t>(k)] = k;
    for (int k = 0; k < c; ++k) task.query.labels[static_cast<std::size_t>(k)] = k;
    const MetaParams mp{mlp.spec(), {seed % 2 ? LearnerKind::ProtoNet : LearnerKind::Maml, 0.3}, w};
    track(rel_err(meta_grad(mp, task), fd_gradient(
                                           [&](const Vec& x) {
                                             MetaParams probe = mp;
                                             probe.omega = x;
                                             return meta_loss(probe, task);
                                           },
                                           w)),
          "meta_grad");
    ++instances;
  }
  return {instances >= 20 && worst <= 1e-4,
          format("%d instances, worst relative error %.2e (%s), tolerance 1e-4", instances, worst, worst_what.c_str())};
}

// ---- 2: influence against upweighted retraining ----------------------------

Outcome oracle_fidelity() {
  const auto tasks = sample_taskset(
      {.dim = 4, .n_ways = 3, .k_support = 5, .k_query = 5, .center_scale = 1.0, .within_class_noise = 1.0, .seed = 7},
      8);
  const auto tests = sample_taskset(
      {.dim = 4, .n_ways = 3, .k_support = 5, .k_query = 5, .center_scale = 1.0, .within_class_noise = 1.0, .seed = 8},
      4, 1000);
  const MetaParams init = make_params({4, 3}, LearnerKind::Maml, 0.0, 1);
  TrainConfig cfg;
  cfg.meta_batch = 0;
  cfg.optimizer = Optimizer::Sgd;
  cfg.lr = 2.0;
  cfg.steps = 3000;
  const MetaParams trained = meta_train(init, tasks, cfg).params;
  const SpectralInverse inv = invert(exact_meta_hessian(trained, tasks), Keep::positive());
  const auto records = influence_meta_all(inv, trained, tasks);

  constexpr double eps = 1e-3;
  double min_cos = 1.0;
  std::vector<MetaParams> shifted;
  for (std::size_t j = 0; j < tasks.size(); ++j) {
    const Vec oracle = loo_retrain_oracle(init, tasks, cfg, j, eps, &trained.omega);
    min_cos = std::min(min_cos, cosine(inv.projector * records[j].i_meta, oracle));
    MetaParams p = trained;
    p.omega += eps * oracle;
    shifted.push_back(std::move(p));
  }
  double min_rho = 1.0;
  for (const Task& test : tests) {
    std::vector<double> predicted, retrained;
    const double base = meta_loss(trained, test);
    for (std::size_t j = 0; j < tasks.size(); ++j) {
      predicted.push_back(influence_perf(trained, test, records[j]));
      retrained.push_back((meta_loss(shifted[j], test) - base) / eps);
    }
    min_rho = std::min(min_rho, spearman(predicted, retrained).value_or(-1.0));
  }
  return {min_rho >= 0.8 && min_cos >= 0.9,
          format("min Spearman over %zu tests %.4f (>= 0.8), min cosine over %zu tasks %.7f (>= 0.9)", tests.size(),
                 min_rho, tasks.size(), min_cos)};
}

// ---- 3: pseudo-inverse identities ------------------------------------------

Outcome pseudo_inverse_identities() {
  double worst_mp = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(3000 + seed);
    const Index n = 4 + static_cast<Index>(seed % 13);
    Vec spectrum(n);
    for (Index i = 0; i < n; ++i) {
      const double mag = 0.2 + 2.8 * rng.uniform();
      spectrum(i) = (i % 3 == 2) ? 0.0 : (i % 2 ? -mag : mag);
    }
    const Mat a = SymMatrix(with_spectrum(spectrum, rng)).matrix();
    const Mat p = pseudo_inverse_spectral(eigh_symmetric(SymMatrix(a)), Keep::nonzero()).matrix();
    const Mat proj = p * a;
    const double scale = std::max(1.0, a.norm());
    worst_mp = std::max({worst_mp, (a * p * a - a).norm() / scale, (p * a * p - p).norm() / std::max(1.0, p.norm()),
                         (a * p - (a * p).transpose()).norm(), (proj - proj.transpose()).norm(),
                         (proj * proj - proj).norm()});
  }
  double worst_factor = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(4000 + seed);
    const Index q = 2 + static_cast<Index>(seed % 15);
    const Index r = 1 + static_cast<Index>(seed % std::min<Index>(8, q));
    const FactorMatrix v(random_matrix(q, r, rng));
    const Mat from_factor = pseudo_inverse_from_factor(v).matrix();
    const Mat spectral = pseudo_inverse_spectral(eigh_symmetric(SymMatrix(v.outer())), Keep::positive()).matrix();
    worst_factor = std::max(worst_factor, rel_err(from_factor, spectral));
  }
  return {worst_mp <= 1e-8 && worst_factor <= 1e-7,
          format("Moore-Penrose/projector worst %.2e (<= 1e-8) on 50 matrices; factor vs spectral worst %.2e "
                 "(<= 1e-7) on 50 factors",
                 worst_mp, worst_factor)};
}

// ---- 4: Gauss-Newton approximation -----------------------------------------

Outcome gauss_newton_approximation() {
  double worst_psd = 0.0;
  double worst_factor = 0.0;
  int instances = 0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const bool proto = seed % 2;
    const MetaParams mp = make_params({5, 7, 3}, proto ? LearnerKind::ProtoNet : LearnerKind::Maml, 0.3, seed);
    const auto tasks = sample_taskset({.dim = 5, .n_ways = 3, .k_support = 3, .k_query = 4, .seed = 50 + seed}, 6);
    const HessianRep dense = gn_dense(mp, tasks);
    const Vec values = eigh_symmetric(std::get<SymMatrix>(dense.value)).values;
    worst_psd = std::max(worst_psd, -values.minCoeff() / values.maxCoeff());
    const HessianRep factored = accumulate_gn(mp, tasks, mp.size());
    worst_factor = std::max(worst_factor, rel_err(factored.dense(), dense.dense()));
    ++instances;
  }
  const auto tasks = sample_taskset(
      {.dim = 8, .n_ways = 5, .k_support = 5, .k_query = 5, .center_scale = 1.0, .within_class_noise = 0.5, .seed = 31},
      32);
  TrainConfig cfg;
  cfg.meta_batch = 0;
  cfg.steps = 2000;
  cfg.lr = 0.01;
  cfg.seed = 3;
  const TrainResult fit = meta_train(make_params({8, 16, 5}, LearnerKind::Maml, 0.1, 1), tasks, cfg);
  const Mat exact = exact_meta_hessian(fit.params, tasks).dense();
  const double frob = (exact - gn_dense(fit.params, tasks).dense()).norm() / exact.norm();
  return {worst_psd <= 1e-9 && worst_factor <= 1e-8 && fit.final_loss < 0.05 && frob < 0.2,
          format("min eigenvalue >= %.1e * lambda_max on %d instances; factored vs dense %.2e; fitted meta-loss %.4f, "
                 "exact vs GN relative Frobenius error %.4f (< 0.2)",
                 -worst_psd, instances, worst_factor, fit.final_loss, frob)};
}

// ---- 5 and 6: self-rank and degradation on one frozen run ------------------

struct FrozenRun {
  MetaParams trained;
  std::vector<Task> tasks;
  std::vector<InfluenceRecord> pruned, raw;
  Index negative = 0;
};

const FrozenRun& frozen_run() {
  static const FrozenRun run = [] {
    FrozenRun r;
    r.tasks = sample_taskset({.dim = 34,
                              .n_ways = 5,
                              .k_support = 5,
                              .k_query = 5,
                              .center_scale = 1.0,
                              .within_class_noise = 1.0,
                              .seed = 2024},
                             128);
    TrainConfig cfg;
    cfg.meta_batch = 32;
    cfg.steps = 1000;
    cfg.lr = 1e-3;
    cfg.seed = 3;
    r.trained = meta_train(make_params({34, 32, 5}, LearnerKind::Maml, 0.1, 1), r.tasks, cfg).params;
    const HessianRep h = exact_meta_hessian(r.trained, r.tasks);
    const SpectralInverse pruned = invert(h, Keep::positive());
    r.negative = pruned.discarded_negative;
    r.pruned = influence_meta_all(pruned, r.trained, r.tasks);
    r.raw = influence_meta_all(invert(h, Keep::nonzero()), r.trained, r.tasks);
    return r;
  }();
  return run;
}

Outcome self_rank() {
  const FrozenRun& run = frozen_run();
  const SelfRankReport pruned = run_self_rank(run.trained, run.pruned, run.tasks);
  const SelfRankReport raw = run_self_rank(run.trained, run.raw, run.tasks);
  return {pruned.fraction_rank0 >= 0.9,
          format("q %ld, %ld negative eigenvalues pruned: self-rank 0 in %.1f%% of 128 (>= 90%%); unpruned %.1f%%",
                 run.trained.size(), run.negative, 100.0 * pruned.fraction_rank0, 100.0 * raw.fraction_rank0)};
}

Outcome degradation_trend() {
  const FrozenRun& run = frozen_run();
  DegradationConfig cfg;
  cfg.seed = 99;
  const DegradationReport pruned = run_degradation(run.trained, run.pruned, run.tasks, cfg);
  const DegradationReport raw = run_degradation(run.trained, run.raw, run.tasks, cfg);
  auto mean_abs = [](const DegradationReport& r) {
    std::vector<double> v;
    for (const DegradationTask& t : r.tasks)
      if (t.alpha_score_r) v.push_back(std::abs(*t.alpha_score_r));
    return summarize(v).mean;
  };
  const double abs_pruned = mean_abs(pruned);
  const double abs_raw = mean_abs(raw);
  const double signed_pruned = pruned.alpha_score.stats.mean;
  return {abs_pruned > abs_raw && signed_pruned < 0.0,
          format("mean |r(alpha, self-score)| pruned %.4f > unpruned %.4f; mean r pruned %.4f (< 0); "
                 "mean r(alpha, self-rank) pruned %.4f",
                 abs_pruned, abs_raw, signed_pruned, pruned.alpha_rank.stats.mean)};
}

// ---- 7: group linearity ----------------------------------------------------

Outcome group_linearity() {
  Rng rng(7007);
  std::vector<InfluenceRecord> records;
  for (std::uint64_t i = 0; i < 40; ++i) records.push_back({i, std::nullopt, random_vector(53, rng)});
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::uint64_t groups = 1 + rng.below(8);
    for (auto& r : records) r.group_id = rng.below(groups);
    bool all = true;
    for (std::uint64_t g = 0; g < groups; ++g) {
      Vec expected = Vec::Zero(53);
      bool any = false;
      for (const auto& r : records)
        if (r.group() == g) expected += r.i_meta, any = true;
      if (!any) continue;
      all = all && influence_group(records, g).i_meta == expected;
    }
    exact += all;
  }
  return {exact == 100, format("%d of 100 random groupings bitwise equal to the ordered sum", exact)};
}

// ---- 8: distribution distinction -------------------------------------------

Outcome distribution_distinction() {
  double worst = 0.0;
  for (Index n = 1; n <= 200; ++n) {
    std::vector<long double> pmf(static_cast<std::size_t>(n + 1));
    long double coeff = 1.0L;
    for (Index k = 0; k <= n; ++k) {
      pmf[static_cast<std::size_t>(k)] = coeff * std::pow(0.5L, static_cast<long double>(n));
      coeff = coeff * static_cast<long double>(n - k) / static_cast<long double>(k + 1);
    }
    for (Index k = 0; k <= n; ++k) {
      long double tail = 0.0L;
      for (long double p : pmf)
        if (p <= pmf[static_cast<std::size_t>(k)] * (1.0L + 1e-9L)) tail += p;
      worst = std::max(worst, std::abs(binomial_two_sided_p(k, n) - static_cast<double>(std::min(1.0L, tail))));
    }
  }

  TrainingSetConfig set;
  set.regular = {{.dim = 16, .n_ways = 5, .k_support = 5, .k_query = 5, .within_class_noise = 1.0, .seed = 11}, 56, 0};
  set.noise = TasksetSource{{.kind = TaskDistributionSpec::Kind::Noise,
                             .dim = 16,
                             .n_ways = 5,
                             .k_support = 5,
                             .k_query = 40,
                             .within_class_noise = 1.0,
                             .seed = 12},
                            8,
                            100000};
  set.mix_seed = 13;
  const auto tests = sample_taskset(
      {.dim = 16, .n_ways = 5, .k_support = 5, .k_query = 5, .within_class_noise = 1.0, .seed = 15}, 128, 900000);

  auto regime = [&](Index augment, double weight_decay, Index steps) {
    TrainingSetConfig c = set;
    c.augmentation = {augment, 1.0, 14, 200000};
    const auto train = build_training_tasks(c);
    TrainConfig cfg;
    cfg.meta_batch = 32;
    cfg.steps = steps;
    cfg.lr = 1e-3;
    cfg.weight_decay = weight_decay;
    cfg.seed = 3;
    const MetaParams trained = meta_train(make_params({16, 16, 5}, LearnerKind::Maml, 0.5, 1), train, cfg).params;
    const SpectralInverse inv = invert(accumulate_gn(trained, train, trained.size()), Keep::positive());
    const auto records = influence_meta_all(inv, trained, train);
    return run_distribution_distinction(trained, records, train, tests, true);
  };
  const ProperOrderReport overfit = regime(0, 0.0, 10000);
  const ProperOrderReport general = regime(4, 1e-3, 2000);
  const bool overfit_proper = 2 * overfit.count_mean > overfit.tests;
  const bool general_proper = 2 * general.count_mean > general.tests;
  const bool tie = 2 * overfit.count_mean == overfit.tests || 2 * general.count_mean == general.tests;
  return {worst <= 1e-10 && !tie && overfit_proper != general_proper,
          format("binomial vs brute force worst %.1e (<= 1e-10); proper order overfit %ld/128 (p=%.2g), "
                 "augmented+weight decay %ld/128 (p=%.2g)",
                 worst, overfit.count_mean, overfit.p_value_mean, general.count_mean, general.p_value_mean)};
}

// ---- 9: exact versus Gauss-Newton grid -------------------------------------

Outcome exact_vs_gn_grid() {
  const auto tasks = sample_taskset(
      {.dim = 16, .n_ways = 5, .k_support = 5, .k_query = 5, .within_class_noise = 1.0, .seed = 21}, 32);
  TrainConfig cfg;
  cfg.meta_batch = 16;
  cfg.steps = 3000;
  cfg.lr = 1e-3;
  cfg.seed = 3;
  const MetaParams trained = meta_train(make_params({16, 16, 5}, LearnerKind::Maml, 0.1, 1), tasks, cfg).params;
  const std::vector<Index> grid{8, 16, 32, 64, 128, 256};
  const ExactVsGnReport r = run_exact_vs_gn(trained, tasks, {}, grid, grid);
  const double fraction = static_cast<double>(r.rows_near_diagonal) / static_cast<double>(grid.size());
  std::string argmax;
  for (Index a : r.row_argmax) argmax += std::to_string(a) + " ";
  return {fraction >= 0.6, format("q %ld, %ld of %zu rows peak on or next to the diagonal (>= 60%%); row argmax: %s",
                                  trained.size(), r.rows_near_diagonal, grid.size(), argmax.c_str())};
}

// ---- 10: end-to-end determinism --------------------------------------------

Outcome determinism() {
  const nlohmann::json config = nlohmann::json::parse(R"({
    "seed": 17,
    "model": {"widths": [6, 8, 4]},
    "learner": {"kind": "maml", "alpha": 0.2},
    "train_tasks": {
      "regular": {"dim": 6, "n_ways": 4, "k_support": 4, "k_query": 4, "count": 12},
      "noise": {"dim": 6, "n_ways": 4, "k_support": 4, "k_query": 8, "count": 3},
      "augmentation": {"count": 1}
    },
    "test_tasks": {"dim": 6, "n_ways": 4, "k_support": 4, "k_query": 4, "count": 6},
    "training": {"meta_batch": 8, "steps": 200, "lr": 0.003, "weight_decay": 0.001},
    "hessian": {"method": "exact", "keep": "positive"},
    "experiments": {
      "run": ["self_rank", "degradation", "distribution", "exact_vs_gn"],
      "raw_baseline": true,
      "keep_grid": [8, 16, 32],
      "capacity_grid": [8, 16, 32]
    }
  })");
  const fs::path root = fs::temp_directory_path() / "taskinf_acceptance_determinism";
  fs::remove_all(root);
  RunConfig first = run_config_from_json(config);
  first.output_dir = root / "a";
  RunConfig second = first;
  second.output_dir = root / "b";
  cmd_all(first);
  set_max_threads(1);
  cmd_all(second);
  set_max_threads(0);
  int files = 0, identical = 0;
  for (const auto& entry : fs::directory_iterator(first.output_dir)) {
    ++files;
    const fs::path other = second.output_dir / entry.path().filename();
    identical += fs::exists(other) && read_text_file(entry.path()) == read_text_file(other);
  }
  fs::remove_all(root);
  return {files >= 10 && identical == files,
          format("%d of %d artifact files byte-identical across two runs (second with one thread)", identical, files)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"derivative correctness", derivative_correctness},
      {"oracle fidelity", oracle_fidelity},
      {"pseudo-inverse identities", pseudo_inverse_identities},
      {"Gauss-Newton approximation", gauss_newton_approximation},
      {"self-rank after pruning", self_rank},
      {"degradation trend", degradation_trend},
      {"group linearity", group_linearity},
      {"distribution distinction", distribution_distinction},
      {"exact vs Gauss-Newton grid", exact_vs_gn_grid},
      {"determinism", determinism},
  };
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(static_cast<std::size_t>(std::stoul(argv[i])));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() && !selected.contains(i + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !outcome.pass;
    std::printf("%s criterion %zu (%s): %s [%.1fs]\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), outcome.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

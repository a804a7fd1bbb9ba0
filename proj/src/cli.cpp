// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0

#include "taskinf/cli.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "taskinf/binary.hpp"
#include "taskinf/io.hpp"
#include "taskinf/rng.hpp"

namespace taskinf {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Streams for seeds derived from the master seed.
enum SeedStream : std::uint64_t {
  kRegularStream = 1,
  kNoiseStream,
  kMixStream,
  kAugmentStream,
  kTestStream,
  kInitStream,
  kTrainStream,
  kDegradeStream,
};

const std::set<std::string> kExperimentNames{"self_rank", "degradation", "distribution", "exact_vs_gn"};

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

std::uint64_t seed_or(const json& j, const char* key, std::uint64_t master, SeedStream stream) {
  return get_or<std::uint64_t>(j, key, derive_seed(master, stream));
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      throw UsageError(where + ": unknown key \"" + key + "\"");
  }
}

TasksetSource source_from_json(const json& j, std::uint64_t master, SeedStream stream, std::uint64_t default_first_id,
                               TaskDistributionSpec::Kind kind) {
  if (!j.is_object()) throw UsageError("taskset entry must be a JSON object");
  json spec = j;
  spec.erase("count");
  spec.erase("first_id");
  if (!spec.contains("kind")) spec["kind"] = to_string(kind);
  TasksetSource s;
  s.spec = distribution_spec_from_json(spec);
  s.spec.seed = seed_or(j, "seed", master, stream);
  s.count = get_or<Index>(j, "count", 0);
  s.first_id = get_or<std::uint64_t>(j, "first_id", default_first_id);
  if (s.count < 0) throw UsageError("taskset count must be non-negative");
  return s;
}

json source_to_json(const TasksetSource& s) {
  json j = to_json(s.spec);
  j["count"] = s.count;
  j["first_id"] = s.first_id;
  return j;
}

Keep keep_from_json(const json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "positive") return Keep::positive();
    if (name == "nonzero") return Keep::nonzero();
    throw UsageError("unknown keep rule \"" + name + "\"");
  }
  if (j.is_object() && j.contains("largest")) return Keep::largest(j.at("largest").get<Index>());
  if (j.is_object() && j.contains("above")) return Keep::above(j.at("above").get<double>());
  throw UsageError("keep must be \"positive\", \"nonzero\", {\"largest\": k} or {\"above\": tau}");
}

json keep_to_json(const Keep& k) {
  switch (k.rule) {
    case Keep::Rule::Count: return {{"largest", k.count}};
    case Keep::Rule::RelativeThreshold: return {{"above", k.threshold}};
    case Keep::Rule::Positive: return "positive";
    case Keep::Rule::NonZero: return "nonzero";
  }
  return nullptr;
}

Optimizer optimizer_from_string(const std::string& name) {
  if (name == "adam") return Optimizer::Adam;
  if (name == "sgd") return Optimizer::Sgd;
  throw UsageError("unknown optimizer \"" + name + "\"");
}

std::string optimizer_name(Optimizer o) { return o == Optimizer::Adam ? "adam" : "sgd"; }

DegradeTarget target_from_string(const std::string& name) {
  if (name == "both") return DegradeTarget::Both;
  if (name == "support") return DegradeTarget::Support;
  if (name == "query") return DegradeTarget::Query;
  throw UsageError("unknown degradation target \"" + name + "\"");
}

std::string target_name(DegradeTarget t) {
  switch (t) {
    case DegradeTarget::Both: return "both";
    case DegradeTarget::Support: return "support";
    case DegradeTarget::Query: return "query";
  }
  return "both";
}

ScoreSign sign_from_string(const std::string& name) {
  if (name == to_string(ScoreSign::Helpful)) return ScoreSign::Helpful;
  if (name == to_string(ScoreSign::Raw)) return ScoreSign::Raw;
  throw UsageError("unknown score sign \"" + name + "\"");
}

RunConfig parse(const json& j, std::optional<std::uint64_t> seed_override) {
  if (!j.is_object()) throw UsageError("run config must be a JSON object");
  reject_unknown(j,
                 {"seed", "output_dir", "model", "learner", "init_seed", "train_tasks", "test_tasks", "training",
                  "hessian", "score_sign", "experiments"},
                 "run config");
  RunConfig c;
  c.seed = seed_override.value_or(get_or<std::uint64_t>(j, "seed", 0));
  const std::uint64_t m = c.seed;
  c.output_dir = get_or<std::string>(j, "output_dir", "run");

  if (!j.contains("model")) throw UsageError("run config: \"model\" is required");
  const json& model = j.at("model");
  c.model = MlpSpec::make(model.at("widths").get<std::vector<Index>>(),
                          activation_from_string(get_or<std::string>(model, "activation", "tanh")));

  const json learner = j.value("learner", json::object());
  c.learner.kind = learner_from_string(get_or<std::string>(learner, "kind", "maml"));
  c.learner.inner_lr = get_or<double>(learner, "alpha", c.learner.inner_lr);
  c.init_seed = seed_or(j, "init_seed", m, kInitStream);

  if (!j.contains("train_tasks")) throw UsageError("run config: \"train_tasks\" is required");
  const json& tt = j.at("train_tasks");
  reject_unknown(tt, {"regular", "noise", "mix_seed", "augmentation"}, "train_tasks");
  c.train_tasks.regular =
      source_from_json(tt.at("regular"), m, kRegularStream, 0, TaskDistributionSpec::Kind::Clustered);
  if (tt.contains("noise") && !tt.at("noise").is_null())
    c.train_tasks.noise = source_from_json(tt.at("noise"), m, kNoiseStream, 100000, TaskDistributionSpec::Kind::Noise);
  c.train_tasks.mix_seed = seed_or(tt, "mix_seed", m, kMixStream);
  const json aug = tt.value("augmentation", json::object());
  c.train_tasks.augmentation.count = get_or<Index>(aug, "count", 0);
  c.train_tasks.augmentation.scale = get_or<double>(aug, "scale", 1.0);
  c.train_tasks.augmentation.seed = seed_or(aug, "seed", m, kAugmentStream);
  c.train_tasks.augmentation.first_id = get_or<std::uint64_t>(aug, "first_id", 200000);

  if (j.contains("test_tasks") && !j.at("test_tasks").is_null())
    c.test_tasks = source_from_json(j.at("test_tasks"), m, kTestStream, 900000, TaskDistributionSpec::Kind::Clustered);

  const json tr = j.value("training", json::object());
  c.training.meta_batch = get_or<Index>(tr, "meta_batch", c.training.meta_batch);
  c.training.steps = get_or<Index>(tr, "steps", c.training.steps);
  c.training.optimizer = optimizer_from_string(get_or<std::string>(tr, "optimizer", "adam"));
  c.training.lr = get_or<double>(tr, "lr", c.training.lr);
  c.training.beta1 = get_or<double>(tr, "beta1", c.training.beta1);
  c.training.beta2 = get_or<double>(tr, "beta2", c.training.beta2);
  c.training.eps = get_or<double>(tr, "eps", c.training.eps);
  c.training.weight_decay = get_or<double>(tr, "weight_decay", c.training.weight_decay);
  c.training.seed = seed_or(tr, "seed", m, kTrainStream);

  const json h = j.value("hessian", json::object());
  c.hessian.method = hessian_method_from_string(get_or<std::string>(h, "method", "exact"));
  if (h.contains("keep")) c.hessian.keep = keep_from_json(h.at("keep"));
  if (h.contains("capacity") && !h.at("capacity").is_null()) c.hessian.capacity = h.at("capacity").get<Index>();
  c.hessian.dense_cap = get_or<Index>(h, "dense_cap", kDefaultDenseCap);

  c.sign = sign_from_string(get_or<std::string>(j, "score_sign", to_string(ScoreSign::Helpful)));

  const json ex = j.value("experiments", json::object());
  c.experiments.run = get_or<std::vector<std::string>>(ex, "run", {});
  const json dg = ex.value("degradation", json::object());
  DegradationConfig& d = c.experiments.degradation;
  d.alphas = get_or<std::vector<double>>(dg, "alphas", d.alphas);
  d.ratios = get_or<std::vector<double>>(dg, "ratios", d.ratios);
  d.fixed_ratio = get_or<double>(dg, "fixed_ratio", d.fixed_ratio);
  d.fixed_alpha = get_or<double>(dg, "fixed_alpha", d.fixed_alpha);
  d.seed = seed_or(dg, "seed", m, kDegradeStream);
  d.target = target_from_string(get_or<std::string>(dg, "target", "both"));
  c.experiments.raw_baseline = get_or<bool>(ex, "raw_baseline", false);
  c.experiments.use_groups = get_or<bool>(ex, "use_groups", true);
  c.experiments.keep_grid = get_or<std::vector<Index>>(ex, "keep_grid", {});
  c.experiments.capacity_grid = get_or<std::vector<Index>>(ex, "capacity_grid", {});
  return c;
}

void check_source(const TasksetSource& s, const RunConfig& c, const std::string& name) {
  if (s.spec.dim != c.model.input_dim())
    throw UsageError(name + ": task dim " + std::to_string(s.spec.dim) + " does not match model input width " +
                     std::to_string(c.model.input_dim()));
  if (c.learner.kind == LearnerKind::Maml && s.spec.n_ways != c.model.output_dim())
    throw UsageError(name + ": n_ways " + std::to_string(s.spec.n_ways) + " does not match model output width " +
                     std::to_string(c.model.output_dim()));
}

fs::path in_dir(const RunConfig& c, const char* name) { return c.output_dir / name; }

// Existing artifact or an IoError telling which stage produces it.
fs::path require(const RunConfig& c, const char* name, const char* stage) {
  const fs::path p = in_dir(c, name);
  if (!fs::exists(p))
    throw IoError("missing artifact " + p.string() + " (run the \"" + std::string(stage) + "\" stage first)");
  return p;
}

void ensure_output_dir(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + c.output_dir.string() + ": " + ec.message());
}

std::vector<Task> load_tasks(const RunConfig& c, const char* name, const char* stage) {
  return load_taskset(require(c, name, stage)).tasks;
}

MetaParams load_params(const RunConfig& c) { return load_meta_params(require(c, artifact::kParams, "train")); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  if (!(learner.inner_lr >= 0.0) || !std::isfinite(learner.inner_lr))
    throw UsageError("learner alpha must be finite and non-negative");
  check_source(train_tasks.regular, *this, "train_tasks.regular");
  if (train_tasks.noise) check_source(*train_tasks.noise, *this, "train_tasks.noise");
  if (test_tasks) check_source(*test_tasks, *this, "test_tasks");
  if (train_tasks.augmentation.count < 0) throw UsageError("augmentation count must be non-negative");
  if (training.steps < 0 || training.meta_batch < 0) throw UsageError("training steps and meta_batch must be >= 0");
  if (hessian.capacity && *hessian.capacity < 1) throw UsageError("hessian capacity must be positive");
  for (const std::string& name : experiments.run)
    if (!kExperimentNames.contains(name)) throw UsageError("unknown experiment \"" + name + "\"");
  const bool grid = std::find(experiments.run.begin(), experiments.run.end(), "exact_vs_gn") != experiments.run.end();
  if (grid && (experiments.keep_grid.empty() || experiments.capacity_grid.empty()))
    throw UsageError("exact_vs_gn needs non-empty keep_grid and capacity_grid");
}

RunConfig run_config_from_json(const json& j, std::optional<std::uint64_t> seed_override) {
  RunConfig c;
  try {
    c = parse(j, seed_override);
  } catch (const json::exception& e) {
    throw UsageError(std::string("run config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path, std::optional<std::uint64_t> seed_override) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j, seed_override);
}

json to_json(const RunConfig& c) {
  json activations = json::array();
  for (Activation a : c.model.activations) activations.push_back(to_string(a));
  json train = {{"regular", source_to_json(c.train_tasks.regular)},
                {"noise", c.train_tasks.noise ? source_to_json(*c.train_tasks.noise) : json(nullptr)},
                {"mix_seed", c.train_tasks.mix_seed},
                {"augmentation",
                 {{"count", c.train_tasks.augmentation.count},
                  {"scale", c.train_tasks.augmentation.scale},
                  {"seed", c.train_tasks.augmentation.seed},
                  {"first_id", c.train_tasks.augmentation.first_id}}}};
  const DegradationConfig& d = c.experiments.degradation;
  return {{"seed", c.seed},
          {"output_dir", c.output_dir.string()},
          {"model",
           {{"widths", c.model.widths},
            {"activation", c.model.activations.empty() ? "tanh" : to_string(c.model.activations.front())}}},
          {"learner", {{"kind", to_string(c.learner.kind)}, {"alpha", c.learner.inner_lr}}},
          {"init_seed", c.init_seed},
          {"train_tasks", std::move(train)},
          {"test_tasks", c.test_tasks ? source_to_json(*c.test_tasks) : json(nullptr)},
          {"training",
           {{"meta_batch", c.training.meta_batch},
            {"steps", c.training.steps},
            {"optimizer", optimizer_name(c.training.optimizer)},
            {"lr", c.training.lr},
            {"beta1", c.training.beta1},
            {"beta2", c.training.beta2},
            {"eps", c.training.eps},
            {"weight_decay", c.training.weight_decay},
            {"seed", c.training.seed}}},
          {"hessian",
           {{"method", to_string(c.hessian.method)},
            {"keep", keep_to_json(c.hessian.keep)},
            {"capacity", c.hessian.capacity ? json(*c.hessian.capacity) : json(nullptr)},
            {"dense_cap", c.hessian.dense_cap}}},
          {"score_sign", to_string(c.sign)},
          {"experiments",
           {{"run", c.experiments.run},
            {"degradation",
             {{"alphas", d.alphas},
              {"ratios", d.ratios},
              {"fixed_ratio", d.fixed_ratio},
              {"fixed_alpha", d.fixed_alpha},
              {"seed", d.seed},
              {"target", target_name(d.target)}}},
            {"raw_baseline", c.experiments.raw_baseline},
            {"use_groups", c.experiments.use_groups},
            {"keep_grid", c.experiments.keep_grid},
            {"capacity_grid", c.experiments.capacity_grid}}}};
}

std::vector<Task> build_training_tasks(const TrainingSetConfig& config) {
  const auto regular = sample_taskset(config.regular.spec, config.regular.count, config.regular.first_id);
  std::vector<Task> noise;
  if (config.noise) noise = sample_taskset(config.noise->spec, config.noise->count, config.noise->first_id);
  const std::vector<Task> base = mix_tasksets(regular, noise, config.mix_seed);
  const Augmentation& aug = config.augmentation;
  if (aug.count == 0) return base;
  std::vector<Task> out;
  out.reserve(base.size() * static_cast<std::size_t>(aug.count + 1));
  std::uint64_t next = aug.first_id;
  for (const Task& t : base) {
    Task grouped = t;
    grouped.group_id = t.group();
    out.push_back(grouped);
    for (Task& v : augment_group(grouped, aug.count, aug.scale, aug.seed, next)) out.push_back(std::move(v));
    next += static_cast<std::uint64_t>(aug.count);
  }
  return out;
}

std::string cmd_gen(const RunConfig& c) {
  ensure_output_dir(c);
  const auto train = build_training_tasks(c.train_tasks);
  const json train_echo = to_json(c)["train_tasks"];
  save_taskset(in_dir(c, artifact::kTrainTasks), {train_echo, train});

  std::vector<Task> tests;
  if (c.test_tasks) tests = sample_taskset(c.test_tasks->spec, c.test_tasks->count, c.test_tasks->first_id);
  save_taskset(in_dir(c, artifact::kTestTasks),
               {c.test_tasks ? source_to_json(*c.test_tasks) : json(nullptr), tests});

  const auto noise = std::count_if(train.begin(), train.end(),
                                   [](const Task& t) { return t.provenance == Provenance::Noise; });
  std::ostringstream out;
  out << "train tasks: " << train.size() << " (regular " << train.size() - static_cast<std::size_t>(noise)
      << ", noise " << noise << ")\n"
      << "test tasks: " << tests.size() << "\n";
  return out.str();
}

std::string cmd_train(const RunConfig& c) {
  const auto tasks = load_tasks(c, artifact::kTrainTasks, "gen");
  MetaParams init;
  init.spec = c.model;
  init.learner = c.learner;
  init.omega = Mlp(c.model).init(c.init_seed);
  const TrainResult result = meta_train(init, tasks, c.training);
  save_meta_params(in_dir(c, artifact::kParams), result.params);

  std::string log;
  for (const TrainLogEntry& e : result.log)
    log += json{{"step", e.step}, {"loss", e.loss}, {"grad_norm", e.grad_norm}}.dump() + "\n";
  write_text_file(in_dir(c, artifact::kTrainLog), log);

  std::ostringstream out;
  out << "q " << result.params.size() << ", steps " << c.training.steps << ", final meta-loss "
      << fmt(result.final_loss) << ", query accuracy " << fmt(result.final_accuracy) << "\n";
  return out.str();
}

std::string cmd_hessian(const RunConfig& c) {
  const MetaParams mp = load_params(c);
  const auto tasks = load_tasks(c, artifact::kTrainTasks, "gen");
  const HessianRep h = c.hessian.method == HessianMethod::Exact
                           ? exact_meta_hessian(mp, tasks, c.hessian.dense_cap)
                           : accumulate_gn(mp, tasks, c.hessian.capacity.value_or(mp.size()));
  save_hessian(in_dir(c, artifact::kHessian), h);

  json spectrum{{"method", to_string(h.meta.method)}, {"dim", h.dim()}, {"task_count", h.meta.task_count}};
  if (h.is_dense()) {
    const Vec values = eigh_symmetric(std::get<SymMatrix>(h.value)).values;
    spectrum["representation"] = "dense";
    spectrum["count_nonpositive"] = (values.array() <= 0.0).count();
    spectrum["lambda_max"] = values.maxCoeff();
    spectrum["lambda_min"] = values.minCoeff();
    spectrum["asymmetry"] = h.meta.asymmetry;
  } else {
    // V V^T with orthogonal columns: the squared column norms are the
    // non-zero eigenvalues, the rest of the spectrum is zero.
    const SpectralInverse inv = invert(h, Keep::nonzero());
    spectrum["representation"] = "factored";
    spectrum["capacity"] = h.meta.capacity ? json(*h.meta.capacity) : json(nullptr);
    spectrum["columns"] = inv.available;
    spectrum["count_nonpositive"] = h.dim() - inv.retained;
    spectrum["lambda_max"] = inv.spectrum.size() ? inv.spectrum.maxCoeff() : 0.0;
    spectrum["lambda_min"] = inv.retained < h.dim() ? 0.0 : inv.spectrum.minCoeff();
  }
  write_text_file(in_dir(c, artifact::kSpectrum), spectrum.dump(2) + "\n");

  std::ostringstream out;
  out << "hessian " << to_string(h.meta.method) << " q " << h.dim() << ": count<=0 "
      << spectrum["count_nonpositive"].get<Index>() << ", lambda_max " << fmt(spectrum["lambda_max"].get<double>())
      << ", lambda_min " << fmt(spectrum["lambda_min"].get<double>()) << "\n";
  return out.str();
}

std::string cmd_influence(const RunConfig& c) {
  const MetaParams mp = load_params(c);
  const HessianRep h = load_hessian(require(c, artifact::kHessian, "hessian"));
  if (h.dim() != mp.size())
    throw UsageError("hessian dimension " + std::to_string(h.dim()) + " does not match parameter count " +
                     std::to_string(mp.size()));
  const auto train = load_tasks(c, artifact::kTrainTasks, "gen");
  auto tests = load_tasks(c, artifact::kTestTasks, "gen");
  if (tests.empty()) tests = train;

  const SpectralInverse inv = invert(h, c.hessian.keep);
  const auto records = influence_meta_all(inv, mp, train);
  save_records(in_dir(c, artifact::kInfluence), records);
  const ScoreTable table = score_table(mp, records, tests, c.sign);
  write_text_file(in_dir(c, artifact::kScores), table.to_csv());

  std::ostringstream out;
  out << "records " << records.size() << ", retained directions " << inv.retained << " (discarded negative "
      << inv.discarded_negative << "), score rows " << records.size() * tests.size() << "\n";
  return out.str();
}

std::string cmd_experiment(const RunConfig& c) {
  json results = json::object();
  if (!c.experiments.run.empty()) {
    const MetaParams mp = load_params(c);
    const auto train = load_tasks(c, artifact::kTrainTasks, "gen");
    const auto records = load_records(require(c, artifact::kInfluence, "influence"));
    if (records.size() != train.size()) throw UsageError("influence store does not match the training taskset");
    for (const std::string& name : c.experiments.run) {
      if (name == "self_rank") {
        results[name] = to_json(run_self_rank(mp, records, train));
      } else if (name == "degradation") {
        results[name] = to_json(run_degradation(mp, records, train, c.experiments.degradation));
        if (c.experiments.raw_baseline) {
          const HessianRep h = load_hessian(require(c, artifact::kHessian, "hessian"));
          const auto raw = influence_meta_all(invert(h, Keep::nonzero()), mp, train);
          results["degradation_raw"] = to_json(run_degradation(mp, raw, train, c.experiments.degradation));
        }
      } else if (name == "distribution") {
        const auto tests = load_tasks(c, artifact::kTestTasks, "gen");
        if (tests.empty()) throw UsageError("distribution experiment needs test tasks");
        results[name] = to_json(run_distribution_distinction(mp, records, train, tests, c.experiments.use_groups));
      } else if (name == "exact_vs_gn") {
        results[name] = to_json(run_exact_vs_gn(mp, train, {}, c.experiments.keep_grid, c.experiments.capacity_grid));
      }
    }
  }
  ensure_output_dir(c);
  // The output location is where a run lands, not what it computes.
  json echo = to_json(c);
  echo.erase("output_dir");
  json report = make_report(echo, results);
  report["results_meta"] = {{"binomial_test", "two_sided"}, {"score_sign", to_string(c.sign)}};
  write_text_file(in_dir(c, artifact::kReport), report.dump(2) + "\n");
  return "experiments: " + std::to_string(results.size()) + " result block(s) written\n";
}

std::string cmd_report(const RunConfig& c) {
  const fs::path path = require(c, artifact::kReport, "experiment");
  json report;
  try {
    report = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (report.value("schema_version", -1) != kReportSchemaVersion)
    throw IoError(path.string() + ": unsupported report schema version");
  const json& r = report.at("results");
  std::ostringstream out;
  if (r.contains("self_rank")) {
    const json& s = r["self_rank"]["summary"];
    out << "self-rank: mean " << fmt(s["mean"]) << " std " << fmt(s["std"]) << ", rank 0 in "
        << fmt(100.0 * s["fraction_rank0"].get<double>()) << "% of tests\n";
  }
  for (const char* key : {"degradation", "degradation_raw"}) {
    if (!r.contains(key)) continue;
    const json& corr = r[key]["correlations"];
    out << key << ":\n";
    for (const char* field : {"alpha_rank", "alpha_score", "ratio_rank", "ratio_score"}) {
      const json& f = corr[field];
      out << "  r(" << field << ") mean " << fmt(f["mean"]) << " std " << fmt(f["std"]) << " (excluded "
          << f["excluded"].get<Index>() << ")\n";
    }
  }
  if (r.contains("distribution")) {
    const json& d = r["distribution"];
    out << "distribution: proper order (mean) " << d["count_mean"].get<Index>() << "/" << d["tests"].get<Index>()
        << " p=" << fmt(d["p_value_mean"]) << "; (median) " << d["count_median"].get<Index>() << "/"
        << d["tests"].get<Index>() << " p=" << fmt(d["p_value_median"]) << "\n";
  }
  if (r.contains("exact_vs_gn")) {
    const json& g = r["exact_vs_gn"];
    out << "exact vs gn: rows with argmax near the diagonal " << g["rows_near_diagonal"].get<Index>() << "/"
        << g["capacities"].size() << "\n";
  }
  if (r.empty()) out << "no experiment results\n";
  write_text_file(in_dir(c, artifact::kSummary), out.str());
  return out.str();
}

std::string cmd_all(const RunConfig& c) {
  std::string out = cmd_gen(c);
  out += cmd_train(c);
  out += cmd_hessian(c);
  out += cmd_influence(c);
  out += cmd_experiment(c);
  out += cmd_report(c);
  return out;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return 1;
  if (dynamic_cast<const NumericalError*>(&e)) return 2;
  if (dynamic_cast<const IoError*>(&e)) return 3;
  if (dynamic_cast<const json::exception*>(&e)) return 1;
  return 2;
}

}  // namespace taskinf

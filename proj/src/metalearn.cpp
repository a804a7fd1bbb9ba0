// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0

#include "taskinf/metalearn.hpp"

#include <cmath>
#include <sstream>

#include "taskinf/rng.hpp"

namespace taskinf {

std::string to_string(LearnerKind k) { return k == LearnerKind::Maml ? "maml" : "protonet"; }

LearnerKind learner_from_string(const std::string& name) {
  if (name == "maml") return LearnerKind::Maml;
  if (name == "protonet") return LearnerKind::ProtoNet;
  throw UsageError("unknown learner '" + name + "' (expected maml or protonet)");
}

void MetaParams::validate() const {
  spec.validate();
  if (omega.size() != spec.parameter_count()) {
    std::ostringstream msg;
    msg << "meta-parameters have " << omega.size() << " entries, spec expects "
        << spec.parameter_count();
    throw UsageError(msg.str());
  }
}

namespace {

void check_task(const MetaParams& mp, const Task& task) {
  task.validate();
  if (task.input_dim() != mp.spec.input_dim())
    throw UsageError("task " + std::to_string(task.id) + ": input dim does not match the model");
  if (mp.learner.kind == LearnerKind::Maml && task.n_ways != mp.spec.output_dim())
    throw UsageError("task " + std::to_string(task.id) +
                     ": MAML needs the output width to equal n_ways");
}

struct ProtoState {
  Mat support_emb;  // ns x e
  Mat query_emb;    // nq x e
  Mat centroids;    // c x e
  std::vector<Index> counts;
  Mat logits;       // nq x c
};

ProtoState proto_forward(const Mlp& mlp, const Vec& omega, const Task& task) {
  ProtoState st;
  st.support_emb = mlp.forward(omega, task.support.inputs);
  st.query_emb = mlp.forward(omega, task.query.inputs);
  const Index c = task.n_ways;
  const Index e = st.support_emb.cols();
  st.centroids = Mat::Zero(c, e);
  st.counts.assign(static_cast<std::size_t>(c), 0);
  for (Index s = 0; s < task.support.size(); ++s) {
    const int y = task.support.labels[static_cast<std::size_t>(s)];
    st.centroids.row(y) += st.support_emb.row(s);
    ++st.counts[static_cast<std::size_t>(y)];
  }
  for (Index k = 0; k < c; ++k) {
    if (st.counts[static_cast<std::size_t>(k)] == 0)
      throw UsageError("task " + std::to_string(task.id) + ": class " + std::to_string(k) +
                       " has no support samples");
    st.centroids.row(k) /= static_cast<double>(st.counts[static_cast<std::size_t>(k)]);
  }
  st.logits.resize(task.query.size(), c);
  for (Index n = 0; n < task.query.size(); ++n)
    for (Index k = 0; k < c; ++k)
      st.logits(n, k) = -(st.query_emb.row(n) - st.centroids.row(k)).squaredNorm();
  return st;
}

// Gradient of the ProtoNet query loss given dL/dlogits.
Vec proto_backward(const Mlp& mlp, const Vec& omega, const Task& task, const ProtoState& st,
                   const Mat& dlogits) {
  const Vec row_sums = dlogits.rowwise().sum();
  const Vec col_sums = dlogits.colwise().sum().transpose();
  // d/d f_n of -|f_n - c_k|^2 is -2 (f_n - c_k); d/d c_k is +2 (f_n - c_k).
  const Mat dquery = -2.0 * (row_sums.asDiagonal() * st.query_emb - dlogits * st.centroids);
  const Mat dcentroid = 2.0 * (dlogits.transpose() * st.query_emb - col_sums.asDiagonal() * st.centroids);
  Mat dsupport(task.support.size(), st.support_emb.cols());
  for (Index s = 0; s < task.support.size(); ++s) {
    const int y = task.support.labels[static_cast<std::size_t>(s)];
    dsupport.row(s) = dcentroid.row(y) / static_cast<double>(st.counts[static_cast<std::size_t>(y)]);
  }
  return mlp.vjp(omega, task.query.inputs, dquery) + mlp.vjp(omega, task.support.inputs, dsupport);
}

}  // namespace

AdaptResult adapt(const MetaParams& mp, const Task& task, bool want_jacobian) {
  check_task(mp, task);
  const Mlp mlp(mp.spec);
  const Index p = mlp.parameter_count();
  AdaptResult out;
  if (mp.learner.kind == LearnerKind::ProtoNet) {
    proto_forward(mlp, mp.omega, task);  // validates class coverage
    out.theta = mp.omega;
    if (want_jacobian) out.jacobian = Mat::Identity(p, p);
    return out;
  }
  const double alpha = mp.learner.inner_lr;
  out.theta = mp.omega - alpha * mlp.grad(mp.omega, task.support);
  if (want_jacobian) {
    Mat jac(p, p);
    for (Index j = 0; j < p; ++j)
      jac.col(j) = Vec::Unit(p, j) - alpha * mlp.hvp(mp.omega, task.support, Vec::Unit(p, j));
    // Exactly symmetric by construction of the true Jacobian.
    out.jacobian = (jac + jac.transpose()) * 0.5;
  }
  return out;
}

Mat adapted_query_logits(const MetaParams& mp, const Task& task) {
  check_task(mp, task);
  const Mlp mlp(mp.spec);
  if (mp.learner.kind == LearnerKind::ProtoNet) return proto_forward(mlp, mp.omega, task).logits;
  return mlp.forward(adapt(mp, task).theta, task.query.inputs);
}

double meta_loss(const MetaParams& mp, const Task& task) {
  return cross_entropy(adapted_query_logits(mp, task), task.query.labels);
}

double meta_accuracy(const MetaParams& mp, const Task& task) {
  const Mat logits = adapted_query_logits(mp, task);
  if (logits.rows() == 0) return 0.0;
  Index correct = 0;
  for (Index n = 0; n < logits.rows(); ++n) {
    Index arg = 0;
    logits.row(n).maxCoeff(&arg);
    correct += arg == task.query.labels[static_cast<std::size_t>(n)];
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

double meta_loss_and_grad(const MetaParams& mp, const Task& task, Vec& grad) {
  check_task(mp, task);
  const Mlp mlp(mp.spec);
  if (mp.learner.kind == LearnerKind::ProtoNet) {
    const ProtoState st = proto_forward(mlp, mp.omega, task);
    const Mat dlogits = cross_entropy_grad(st.logits, task.query.labels);
    grad = proto_backward(mlp, mp.omega, task, st, dlogits);
    return cross_entropy(st.logits, task.query.labels);
  }
  const double alpha = mp.learner.inner_lr;
  const Vec theta = mp.omega - alpha * mlp.grad(mp.omega, task.support);
  Vec gq;
  const double value = mlp.loss_and_grad(theta, task.query, gq);
  grad = alpha == 0.0 ? gq : Vec(gq - alpha * mlp.hvp(mp.omega, task.support, gq));
  return value;
}

Vec meta_grad(const MetaParams& mp, const Task& task) {
  Vec g;
  meta_loss_and_grad(mp, task, g);
  return g;
}

Vec adapt_jvp(const MetaParams& mp, const Task& task, const Vec& v) {
  check_task(mp, task);
  if (v.size() != mp.size()) throw UsageError("adapt_jvp: vector length does not match omega");
  if (mp.learner.kind == LearnerKind::ProtoNet || mp.learner.inner_lr == 0.0) return v;
  const Mlp mlp(mp.spec);
  return v - mp.learner.inner_lr * mlp.hvp(mp.omega, task.support, v);
}

Vec adapt_vjp(const MetaParams& mp, const Task& task, const Vec& v) { return adapt_jvp(mp, task, v); }

Vec query_grad_at_adapted(const MetaParams& mp, const Task& task) {
  if (mp.learner.kind == LearnerKind::ProtoNet) return meta_grad(mp, task);
  const Mlp mlp(mp.spec);
  return mlp.grad(adapt(mp, task).theta, task.query);
}

Mat meta_output_jacobian(const MetaParams& mp, const Task& task) {
  check_task(mp, task);
  const Mlp mlp(mp.spec);
  const Index c = task.n_ways;
  const Index nq = task.query.size();
  const Index p = mlp.parameter_count();
  Mat out(nq * c, p);
  if (mp.learner.kind == LearnerKind::ProtoNet) {
    const ProtoState st = proto_forward(mlp, mp.omega, task);
    const Index e = st.query_emb.cols();
    const Mat jq = mlp.output_jacobian(mp.omega, task.query.inputs);
    const Mat js = mlp.output_jacobian(mp.omega, task.support.inputs);
    std::vector<Mat> jc(static_cast<std::size_t>(c), Mat::Zero(e, p));
    for (Index s = 0; s < task.support.size(); ++s) {
      const int y = task.support.labels[static_cast<std::size_t>(s)];
      jc[static_cast<std::size_t>(y)] += js.middleRows(s * e, e);
    }
    for (Index k = 0; k < c; ++k) jc[static_cast<std::size_t>(k)] /= static_cast<double>(st.counts[static_cast<std::size_t>(k)]);
    for (Index n = 0; n < nq; ++n)
      for (Index k = 0; k < c; ++k) {
        const Vec diff = (st.query_emb.row(n) - st.centroids.row(k)).transpose();
        out.row(n * c + k) =
            -2.0 * diff.transpose() * (jq.middleRows(n * e, e) - jc[static_cast<std::size_t>(k)]);
      }
    return out;
  }
  const Vec theta = adapt(mp, task).theta;
  const Mat jy = mlp.output_jacobian(theta, task.query.inputs);
  for (Index r = 0; r < jy.rows(); ++r) out.row(r) = adapt_vjp(mp, task, jy.row(r).transpose()).transpose();
  return out;
}

Vec mean_meta_grad(const MetaParams& mp, std::span<const Task> tasks) {
  std::vector<Vec> grads(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) { grads[i] = meta_grad(mp, tasks[i]); });
  Vec sum = Vec::Zero(mp.size());
  for (const Vec& g : grads) sum += g;
  if (!tasks.empty()) sum /= static_cast<double>(tasks.size());
  return sum;
}

double total_meta_gradient_norm(const MetaParams& mp, std::span<const Task> tasks) {
  return mean_meta_grad(mp, tasks).norm();
}

std::pair<double, double> evaluate(const MetaParams& mp, std::span<const Task> tasks) {
  std::vector<double> losses(tasks.size()), accs(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    losses[i] = meta_loss(mp, tasks[i]);
    accs[i] = meta_accuracy(mp, tasks[i]);
  });
  double loss = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    loss += losses[i];
    acc += accs[i];
  }
  if (!tasks.empty()) {
    loss /= static_cast<double>(tasks.size());
    acc /= static_cast<double>(tasks.size());
  }
  return {loss, acc};
}

TrainResult meta_train(const MetaParams& init, std::span<const Task> tasks, const TrainConfig& config,
                       std::span<const double> task_weights) {
  init.validate();
  if (tasks.empty()) throw UsageError("meta_train: taskset is empty");
  if (!task_weights.empty() && task_weights.size() != tasks.size())
    throw UsageError("meta_train: task_weights must have one entry per task");
  if (config.steps < 0 || config.meta_batch < 0) throw UsageError("meta_train: negative steps or meta_batch");

  TrainResult result;
  result.params = init;
  Vec& omega = result.params.omega;
  const Index q = omega.size();
  Vec m = Vec::Zero(q);
  Vec v = Vec::Zero(q);
  Rng rng(config.seed);
  const bool full = config.meta_batch == 0;
  const std::size_t batch = full ? tasks.size() : static_cast<std::size_t>(config.meta_batch);
  std::vector<std::size_t> picks(batch);
  std::vector<Vec> grads(batch);
  std::vector<double> losses(batch);

  for (Index step = 0; step < config.steps; ++step) {
    for (std::size_t b = 0; b < batch; ++b) picks[b] = full ? b : static_cast<std::size_t>(rng.below(tasks.size()));
    parallel_for(batch, [&](std::size_t b) {
      losses[b] = meta_loss_and_grad(result.params, tasks[picks[b]], grads[b]);
    });
    Vec g = Vec::Zero(q);
    double loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const double wt = task_weights.empty() ? 1.0 : task_weights[picks[b]];
      g += wt * grads[b];
      loss += wt * losses[b];
    }
    g /= static_cast<double>(batch);
    loss /= static_cast<double>(batch);
    if (config.weight_decay != 0.0) {
      g += config.weight_decay * omega;
      loss += 0.5 * config.weight_decay * omega.squaredNorm();
    }
    if (!std::isfinite(loss) || !g.allFinite()) {
      std::ostringstream msg;
      msg << "meta_train: non-finite meta-loss at step " << step;
      throw NumericalError(msg.str());
    }
    result.log.push_back({step, loss, g.norm()});

    if (config.optimizer == Optimizer::Sgd) {
      omega -= config.lr * g;
    } else {
      const double t = static_cast<double>(step + 1);
      m = config.beta1 * m + (1.0 - config.beta1) * g;
      v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseAbs2();
      const double c1 = 1.0 - std::pow(config.beta1, t);
      const double c2 = 1.0 - std::pow(config.beta2, t);
      omega.array() -= config.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config.eps);
    }
  }
  if (!omega.allFinite()) throw NumericalError("meta_train: parameters diverged");
  std::tie(result.final_loss, result.final_accuracy) = evaluate(result.params, tasks);
  return result;
}

}  // namespace taskinf

// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0

#include "taskinf/model.hpp"

#include <cmath>
#include <sstream>

#include "taskinf/rng.hpp"

namespace taskinf {

namespace {

using RowMajorMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Derivative of the activation expressed through its output (tanh) or input (relu).
Mat activation_slope(Activation act, const Mat& z, const Mat& a) {
  if (act == Activation::Tanh) return (1.0 - a.array().square()).matrix();
  return (z.array() > 0.0).cast<double>().matrix();
}

Mat activation_curvature(Activation act, const Mat& a) {
  if (act == Activation::Tanh) return (-2.0 * a.array() * (1.0 - a.array().square())).matrix();
  return Mat::Zero(a.rows(), a.cols());
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "relu"; }

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw UsageError("unknown activation '" + name + "' (expected tanh or relu)");
}

MlpSpec MlpSpec::make(std::vector<Index> widths, Activation hidden) {
  MlpSpec spec;
  spec.widths = std::move(widths);
  if (spec.widths.size() >= 2) spec.activations.assign(spec.widths.size() - 2, hidden);
  spec.validate();
  return spec;
}

Index MlpSpec::parameter_count() const {
  Index p = 0;
  for (std::size_t l = 1; l < widths.size(); ++l) p += widths[l] * widths[l - 1] + widths[l];
  return p;
}

Index MlpSpec::layer_offset(Index l) const {
  Index p = 0;
  for (Index k = 1; k <= l; ++k) p += widths[k] * widths[k - 1] + widths[k];
  return p;
}

void MlpSpec::validate() const {
  if (widths.size() < 2) throw UsageError("MlpSpec: need at least one layer (input and output widths)");
  for (Index w : widths)
    if (w < 1) throw UsageError("MlpSpec: layer widths must be positive");
  if (activations.size() != widths.size() - 2)
    throw UsageError("MlpSpec: need exactly one activation per hidden layer");
}

void Batch::append(const Batch& other) {
  if (size() == 0) {
    *this = other;
    return;
  }
  if (other.inputs.cols() != inputs.cols()) throw UsageError("Batch::append: input dim mismatch");
  Mat merged(inputs.rows() + other.inputs.rows(), inputs.cols());
  merged << inputs, other.inputs;
  inputs = std::move(merged);
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

struct Mlp::Pass {
  std::vector<Mat> z;  // pre-activations, index 1..L (z[0] unused)
  std::vector<Mat> a;  // a[0] = inputs^T, a[L] = outputs; column per sample
};

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  p_ = spec_.parameter_count();
}

Vec Mlp::init(std::uint64_t seed) const {
  Rng rng(seed);
  Vec w = Vec::Zero(p_);
  for (Index l = 1; l <= spec_.layer_count(); ++l) {
    const Index in = spec_.widths[l - 1];
    const Index out = spec_.widths[l];
    const Index off = spec_.layer_offset(l - 1);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (Index i = 0; i < in * out; ++i) w(off + i) = scale * rng.normal();
  }
  return w;
}

void Mlp::check(const Vec& w, Index input_cols) const {
  if (w.size() != p_) {
    std::ostringstream msg;
    msg << "weight vector has " << w.size() << " entries, model expects " << p_;
    throw UsageError(msg.str());
  }
  if (input_cols != spec_.input_dim()) {
    std::ostringstream msg;
    msg << "input dim " << input_cols << " does not match model input " << spec_.input_dim();
    throw UsageError(msg.str());
  }
}

Mlp::Pass Mlp::run_forward(const Vec& w, const Mat& inputs) const {
  check(w, inputs.cols());
  const Index layers = spec_.layer_count();
  Pass pass;
  pass.z.resize(layers + 1);
  pass.a.resize(layers + 1);
  pass.a[0] = inputs.transpose();
  for (Index l = 1; l <= layers; ++l) {
    const Index in = spec_.widths[l - 1];
    const Index out = spec_.widths[l];
    const Index off = spec_.layer_offset(l - 1);
    ConstRowMajorMap weight(w.data() + off, out, in);
    const auto bias = w.segment(off + out * in, out);
    pass.z[l] = (weight * pass.a[l - 1]).colwise() + bias;
    if (l < layers) {
      if (spec_.activations[l - 1] == Activation::Tanh)
        pass.a[l] = pass.z[l].array().tanh().matrix();
      else
        pass.a[l] = pass.z[l].cwiseMax(0.0);
    } else {
      pass.a[l] = pass.z[l];
    }
  }
  return pass;
}

Vec Mlp::backward(const Vec& w, const Pass& pass, Mat delta) const {
  Vec g = Vec::Zero(p_);
  for (Index l = spec_.layer_count(); l >= 1; --l) {
    const Index in = spec_.widths[l - 1];
    const Index out = spec_.widths[l];
    const Index off = spec_.layer_offset(l - 1);
    RowMajorMap(g.data() + off, out, in) = delta * pass.a[l - 1].transpose();
    g.segment(off + out * in, out) = delta.rowwise().sum();
    if (l > 1) {
      ConstRowMajorMap weight(w.data() + off, out, in);
      const Mat back = weight.transpose() * delta;
      const Activation act = spec_.activations[l - 2];
      delta = back.cwiseProduct(activation_slope(act, pass.z[l - 1], pass.a[l - 1]));
    }
  }
  return g;
}

Mat Mlp::forward(const Vec& w, const Mat& inputs) const {
  return run_forward(w, inputs).a.back().transpose();
}

Mat softmax_rows(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (Index n = 0; n < logits.rows(); ++n) {
    const double m = logits.row(n).maxCoeff();
    const auto e = (logits.row(n).array() - m).exp();
    out.row(n) = e / e.sum();
  }
  return out;
}

namespace {
void check_labels(const std::vector<int>& labels, Index rows, Index classes) {
  if (static_cast<Index>(labels.size()) != rows) throw UsageError("label count does not match sample count");
  for (int y : labels)
    if (y < 0 || y >= classes) throw UsageError("label out of range for the output layer");
}
}  // namespace

double cross_entropy(const Mat& logits, const std::vector<int>& labels) {
  check_labels(labels, logits.rows(), logits.cols());
  if (logits.rows() == 0) return 0.0;
  double total = 0.0;
  for (Index n = 0; n < logits.rows(); ++n) {
    const double m = logits.row(n).maxCoeff();
    const double lse = m + std::log((logits.row(n).array() - m).exp().sum());
    total += lse - logits(n, labels[static_cast<std::size_t>(n)]);
  }
  return total / static_cast<double>(logits.rows());
}

Mat cross_entropy_grad(const Mat& logits, const std::vector<int>& labels) {
  check_labels(labels, logits.rows(), logits.cols());
  Mat g = softmax_rows(logits);
  for (Index n = 0; n < logits.rows(); ++n) g(n, labels[static_cast<std::size_t>(n)]) -= 1.0;
  if (logits.rows() > 0) g /= static_cast<double>(logits.rows());
  return g;
}

double Mlp::loss(const Vec& w, const Batch& batch) const {
  return cross_entropy(forward(w, batch.inputs), batch.labels);
}

double Mlp::accuracy(const Vec& w, const Batch& batch) const {
  if (batch.size() == 0) return 0.0;
  const Mat y = forward(w, batch.inputs);
  Index correct = 0;
  for (Index n = 0; n < y.rows(); ++n) {
    Index arg = 0;
    y.row(n).maxCoeff(&arg);
    correct += arg == batch.labels[static_cast<std::size_t>(n)];
  }
  return static_cast<double>(correct) / static_cast<double>(y.rows());
}

double Mlp::loss_and_grad(const Vec& w, const Batch& batch, Vec& grad) const {
  const Pass pass = run_forward(w, batch.inputs);
  const Mat logits = pass.a.back().transpose();
  const double value = cross_entropy(logits, batch.labels);
  grad = backward(w, pass, cross_entropy_grad(logits, batch.labels).transpose());
  return value;
}

Vec Mlp::grad(const Vec& w, const Batch& batch) const {
  Vec g;
  loss_and_grad(w, batch, g);
  return g;
}

Vec Mlp::vjp(const Vec& w, const Mat& inputs, const Mat& cotangent) const {
  const Pass pass = run_forward(w, inputs);
  if (cotangent.rows() != inputs.rows() || cotangent.cols() != spec_.output_dim())
    throw UsageError("vjp: cotangent shape does not match outputs");
  return backward(w, pass, cotangent.transpose());
}

Vec Mlp::hvp(const Vec& w, const Batch& batch, const Vec& v) const {
  if (v.size() != p_) throw UsageError("hvp: direction has wrong length");
  const Pass pass = run_forward(w, batch.inputs);
  const Index layers = spec_.layer_count();
  const Index n = batch.size();
  if (n == 0) return Vec::Zero(p_);

  // Forward directional derivatives R{z}, R{a}.
  std::vector<Mat> rz(layers + 1), ra(layers + 1);
  ra[0] = Mat::Zero(spec_.input_dim(), n);
  for (Index l = 1; l <= layers; ++l) {
    const Index in = spec_.widths[l - 1];
    const Index out = spec_.widths[l];
    const Index off = spec_.layer_offset(l - 1);
    ConstRowMajorMap weight(w.data() + off, out, in);
    ConstRowMajorMap dweight(v.data() + off, out, in);
    const auto dbias = v.segment(off + out * in, out);
    rz[l] = ((dweight * pass.a[l - 1] + weight * ra[l - 1]).colwise() + dbias);
    if (l < layers) {
      const Activation act = spec_.activations[l - 1];
      ra[l] = rz[l].cwiseProduct(activation_slope(act, pass.z[l], pass.a[l]));
    } else {
      ra[l] = rz[l];
    }
  }

  // Output layer: delta = (S - T)/n, R{delta} = (diag(s) - s s^T) R{y} / n.
  const Mat logits = pass.a.back().transpose();
  Mat delta = cross_entropy_grad(logits, batch.labels).transpose();
  const Mat s = softmax_rows(logits).transpose();
  Mat rdelta(s.rows(), n);
  for (Index k = 0; k < n; ++k) {
    const double proj = s.col(k).dot(rz[layers].col(k));
    rdelta.col(k) = (s.col(k).array() * (rz[layers].col(k).array() - proj)).matrix();
  }
  rdelta /= static_cast<double>(n);

  Vec hv = Vec::Zero(p_);
  for (Index l = layers; l >= 1; --l) {
    const Index in = spec_.widths[l - 1];
    const Index out = spec_.widths[l];
    const Index off = spec_.layer_offset(l - 1);
    RowMajorMap(hv.data() + off, out, in) =
        rdelta * pass.a[l - 1].transpose() + delta * ra[l - 1].transpose();
    hv.segment(off + out * in, out) = rdelta.rowwise().sum();
    if (l > 1) {
      ConstRowMajorMap weight(w.data() + off, out, in);
      ConstRowMajorMap dweight(v.data() + off, out, in);
      const Mat back = weight.transpose() * delta;
      const Mat rback = dweight.transpose() * delta + weight.transpose() * rdelta;
      const Activation act = spec_.activations[l - 2];
      const Mat slope = activation_slope(act, pass.z[l - 1], pass.a[l - 1]);
      const Mat curve = activation_curvature(act, pass.a[l - 1]);
      rdelta = curve.cwiseProduct(rz[l - 1]).cwiseProduct(back) + slope.cwiseProduct(rback);
      delta = back.cwiseProduct(slope);
    }
  }
  return hv;
}

Mat Mlp::output_jacobian(const Vec& w, const Mat& inputs) const {
  const Pass pass = run_forward(w, inputs);
  const Index layers = spec_.layer_count();
  const Index n = inputs.rows();
  const Index outputs = spec_.output_dim();
  Mat jt = Mat::Zero(p_, n * outputs);  // column n*outputs + k
  for (Index k = 0; k < outputs; ++k) {
    Mat delta = Mat::Zero(outputs, n);
    delta.row(k).setOnes();
    for (Index l = layers; l >= 1; --l) {
      const Index in = spec_.widths[l - 1];
      const Index out = spec_.widths[l];
      const Index off = spec_.layer_offset(l - 1);
      for (Index s = 0; s < n; ++s) {
        double* col = jt.col(s * outputs + k).data();
        RowMajorMap(col + off, out, in) = delta.col(s) * pass.a[l - 1].col(s).transpose();
        Eigen::Map<Vec>(col + off + out * in, out) = delta.col(s);
      }
      if (l > 1) {
        ConstRowMajorMap weight(w.data() + off, out, in);
        const Activation act = spec_.activations[l - 2];
        delta = (weight.transpose() * delta)
                    .cwiseProduct(activation_slope(act, pass.z[l - 1], pass.a[l - 1]));
      }
    }
  }
  return jt.transpose();
}

}  // namespace taskinf

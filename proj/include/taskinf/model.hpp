// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Fully-connected classifier with softmax cross-entropy and exact first- and
// second-order derivatives with respect to the flat weight vector.
//
// Parameter packing (stable, used by every file format): layers in order,
// and within a layer the weight matrix W (out x in, row-major) followed by
// the bias b (out).

#pragma once

#include <string>
#include <vector>

#include "taskinf/core.hpp"

namespace taskinf {

enum class Activation { Tanh, Relu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct MlpSpec {
  /// input dim, hidden widths..., output width.
  std::vector<Index> widths;
  /// One per hidden layer.
  std::vector<Activation> activations;

  static MlpSpec make(std::vector<Index> widths, Activation hidden = Activation::Tanh);

  Index input_dim() const { return widths.front(); }
  Index output_dim() const { return widths.back(); }
  Index layer_count() const { return static_cast<Index>(widths.size()) - 1; }
  Index parameter_count() const;
  /// Offset of layer l's weight block in the packed vector.
  Index layer_offset(Index l) const;
  void validate() const;

  bool operator==(const MlpSpec&) const = default;
};

/// n samples of dimension d with integer class labels.
struct Batch {
  Mat inputs;  // n x d
  std::vector<int> labels;

  Index size() const { return inputs.rows(); }
  /// Appends another batch's rows.
  void append(const Batch& other);
};

class Mlp {
 public:
  explicit Mlp(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  Index parameter_count() const { return p_; }

  /// Initial weights: Gaussian with std 1/sqrt(fan_in) for weights, zero biases.
  Vec init(std::uint64_t seed) const;

  /// Outputs of the last layer, n x out.
  Mat forward(const Vec& w, const Mat& inputs) const;

  /// Mean softmax cross-entropy over the batch.
  double loss(const Vec& w, const Batch& batch) const;
  /// Fraction of samples whose arg-max logit equals the label.
  double accuracy(const Vec& w, const Batch& batch) const;

  Vec grad(const Vec& w, const Batch& batch) const;
  /// Loss and gradient in one pass.
  double loss_and_grad(const Vec& w, const Batch& batch, Vec& grad) const;

  /// Exact Hessian-vector product of the mean loss (Pearlmutter R-operator).
  Vec hvp(const Vec& w, const Batch& batch, const Vec& v) const;

  /// Per-sample Jacobian of the outputs: row n*out + k holds d y_{nk} / d w.
  Mat output_jacobian(const Vec& w, const Mat& inputs) const;

  /// Gradient of sum_{n,k} cotangent(n, k) * y_{nk} with respect to w.
  Vec vjp(const Vec& w, const Mat& inputs, const Mat& cotangent) const;

 private:
  struct Pass;
  Pass run_forward(const Vec& w, const Mat& inputs) const;
  Vec backward(const Vec& w, const Pass& pass, Mat delta) const;
  void check(const Vec& w, Index input_cols) const;

  MlpSpec spec_;
  Index p_ = 0;
};

/// Row-wise softmax of an n x c logit matrix.
Mat softmax_rows(const Mat& logits);
/// Mean cross-entropy of row-wise logits against labels (log-sum-exp stable).
double cross_entropy(const Mat& logits, const std::vector<int>& labels);
/// d cross_entropy / d logits, n x c.
Mat cross_entropy_grad(const Mat& logits, const std::vector<int>& labels);

}  // namespace taskinf

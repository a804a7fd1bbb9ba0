// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <cmath>

#include "taskinf/linalg.hpp"
#include "taskinf/model.hpp"
#include "test_util.hpp"

using namespace taskinf;
using namespace taskinf::testing;

namespace {

// Straight loop reimplementation of the forward pass, used as a dual check.
Mat naive_forward(const MlpSpec& spec, const Vec& w, const Mat& x) {
  Mat out(x.rows(), spec.output_dim());
  for (Index n = 0; n < x.rows(); ++n) {
    std::vector<double> act(x.row(n).data(), x.row(n).data() + 0);
    act.clear();
    for (Index i = 0; i < x.cols(); ++i) act.push_back(x(n, i));
    Index off = 0;
    for (Index l = 1; l < static_cast<Index>(spec.widths.size()); ++l) {
      const Index in = spec.widths[l - 1], o = spec.widths[l];
      std::vector<double> next(static_cast<std::size_t>(o));
      for (Index r = 0; r < o; ++r) {
        double s = w(off + in * o + r);
        for (Index c = 0; c < in; ++c) s += w(off + r * in + c) * act[static_cast<std::size_t>(c)];
        const bool hidden = l + 1 < static_cast<Index>(spec.widths.size());
        if (hidden) s = spec.activations[l - 1] == Activation::Tanh ? std::tanh(s) : std::max(0.0, s);
        next[static_cast<std::size_t>(r)] = s;
      }
      off += in * o + o;
      act = next;
    }
    for (Index k = 0; k < spec.output_dim(); ++k) out(n, k) = act[static_cast<std::size_t>(k)];
  }
  return out;
}

double naive_loss(const Mat& logits, const std::vector<int>& labels) {
  double total = 0.0;
  for (Index n = 0; n < logits.rows(); ++n) {
    double z = 0.0;
    for (Index k = 0; k < logits.cols(); ++k) z += std::exp(logits(n, k));
    total += -std::log(std::exp(logits(n, labels[static_cast<std::size_t>(n)])) / z);
  }
  return total / static_cast<double>(logits.rows());
}

struct Instance {
  Mlp mlp;
  Vec w;
  Batch batch;
};

Instance random_instance(std::uint64_t seed, Activation act = Activation::Tanh) {
  Rng rng(seed);
  const Index d = 2 + static_cast<Index>(rng.below(5));
  const Index h = 2 + static_cast<Index>(rng.below(6));
  const int c = 2 + static_cast<int>(rng.below(4));
  std::vector<Index> widths{d, h};
  if (rng.below(2)) widths.push_back(2 + static_cast<Index>(rng.below(4)));
  widths.push_back(c);
  Mlp mlp(MlpSpec::make(widths, act));
  Vec w = mlp.init(seed + 1) + 0.1 * random_vector(mlp.parameter_count(), rng);
  Batch batch = random_batch(3 + static_cast<Index>(rng.below(6)), d, c, rng);
  return {std::move(mlp), std::move(w), std::move(batch)};
}

}  // namespace

TEST_CASE("MlpSpec: parameter count and validation") {
  const auto spec = MlpSpec::make({34, 32, 5});
  CHECK(spec.parameter_count() == 34 * 32 + 32 + 32 * 5 + 5);
  CHECK(spec.parameter_count() == 1285);
  CHECK(spec.layer_offset(1) == 34 * 32 + 32);
  CHECK_THROWS_AS(MlpSpec::make({4}), UsageError);
  CHECK_THROWS_AS(MlpSpec::make({4, 0, 3}), UsageError);
  MlpSpec bad = spec;
  bad.activations.clear();
  CHECK_THROWS_AS(bad.validate(), UsageError);
  CHECK(activation_from_string("relu") == Activation::Relu);
  CHECK_THROWS_AS(activation_from_string("gelu"), UsageError);
}

TEST_CASE("forward: zero weights, one-layer identity, dual implementation") {
  Rng rng(1);
  Mlp tanh_net(MlpSpec::make({4, 6, 3}));
  const Mat x = random_matrix(5, 4, rng);
  CHECK(tanh_net.forward(Vec::Zero(tanh_net.parameter_count()), x).isZero(0.0));

  Mlp linear(MlpSpec::make({3, 3}));
  Vec w = Vec::Zero(linear.parameter_count());
  for (Index i = 0; i < 9; ++i) w(i) = static_cast<double>(i + 1);  // W row-major
  const Mat unit = Mat::Identity(3, 3);
  const Mat y = linear.forward(w, unit);
  for (Index n = 0; n < 3; ++n)
    for (Index k = 0; k < 3; ++k) CHECK(y(n, k) == w(k * 3 + n));

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (auto act : {Activation::Tanh, Activation::Relu}) {
      auto inst = random_instance(seed, act);
      const Mat got = inst.mlp.forward(inst.w, inst.batch.inputs);
      CHECK((got - naive_forward(inst.mlp.spec(), inst.w, inst.batch.inputs)).norm() < 1e-12);
    }
  }
  CHECK_THROWS_AS(tanh_net.forward(Vec::Zero(3), x), UsageError);
  CHECK_THROWS_AS(tanh_net.forward(Vec::Zero(tanh_net.parameter_count()), Mat::Zero(2, 5)),
                  UsageError);
}

TEST_CASE("loss: uniform, saturated, reference formula, shift invariance") {
  Mat equal = Mat::Constant(4, 5, 0.3);
  CHECK(cross_entropy(equal, {0, 1, 2, 4}) == doctest::Approx(std::log(5.0)).epsilon(1e-14));

  Mat sat = Mat::Constant(2, 3, -20.0);
  sat(0, 1) = 20.0;
  sat(1, 2) = 20.0;
  CHECK(cross_entropy(sat, {1, 2}) <= 1e-8);

  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const Mat logits = random_matrix(6, 4, rng);
    std::vector<int> labels;
    for (int i = 0; i < 6; ++i) labels.push_back(static_cast<int>(rng.below(4)));
    CHECK(cross_entropy(logits, labels) == doctest::Approx(naive_loss(logits, labels)).epsilon(1e-12));
    Mat shifted = logits;
    shifted.row(2).array() += 7.5;
    CHECK(std::abs(cross_entropy(shifted, labels) - cross_entropy(logits, labels)) < 1e-10);
  }
  // Large logits stay finite.
  Mat huge = Mat::Zero(1, 2);
  huge(0, 0) = 1e4;
  CHECK(std::isfinite(cross_entropy(huge, {1})));
  CHECK_THROWS_AS(cross_entropy(equal, {0, 1, 2, 5}), UsageError);
}

TEST_CASE("grad: finite differences, stationary point, batch linearity") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = random_instance(seed);
    const Vec g = inst.mlp.grad(inst.w, inst.batch);
    const Vec fd = fd_gradient([&](const Vec& w) { return inst.mlp.loss(w, inst.batch); }, inst.w);
    CHECK(rel_err(g, fd) < 1e-5);
  }

  // Zero weights + balanced labels is a stationary point.
  Mlp mlp(MlpSpec::make({3, 4, 2}));
  Rng rng(2);
  Batch balanced;
  balanced.inputs = random_matrix(4, 3, rng);
  balanced.labels = {0, 1, 0, 1};
  CHECK(mlp.grad(Vec::Zero(mlp.parameter_count()), balanced).norm() == 0.0);

  auto inst = random_instance(42);
  Rng rng2(3);
  const Batch other = random_batch(7, inst.mlp.spec().input_dim(),
                                   static_cast<int>(inst.mlp.spec().output_dim()), rng2);
  Batch joined = inst.batch;
  joined.append(other);
  const double na = static_cast<double>(inst.batch.size());
  const double nb = static_cast<double>(other.size());
  const Vec mixed =
      (na * inst.mlp.grad(inst.w, inst.batch) + nb * inst.mlp.grad(inst.w, other)) / (na + nb);
  CHECK(rel_err(inst.mlp.grad(inst.w, joined), mixed) < 1e-13);
}

TEST_CASE("hvp: zero direction, finite differences, symmetry") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (auto act : {Activation::Tanh, Activation::Relu}) {
      auto inst = random_instance(100 + seed, act);
      Rng rng(seed);
      const Index p = inst.mlp.parameter_count();
      const Vec u = random_vector(p, rng);
      const Vec v = random_vector(p, rng);
      CHECK(inst.mlp.hvp(inst.w, inst.batch, Vec::Zero(p)).isZero(0.0));
      const Vec hv = inst.mlp.hvp(inst.w, inst.batch, v);
      const Vec fd = fd_directional([&](const Vec& w) { return inst.mlp.grad(w, inst.batch); },
                                    inst.w, v);
      CHECK(rel_err(hv, fd) < 1e-4);
      const Vec hu = inst.mlp.hvp(inst.w, inst.batch, u);
      CHECK(std::abs(u.dot(hv) - v.dot(hu)) <= 1e-8 * (1.0 + std::abs(u.dot(hv))));
    }
  }
  auto inst = random_instance(7);
  const Index p = inst.mlp.parameter_count();
  Mat h(p, p);
  for (Index j = 0; j < p; ++j) h.col(j) = inst.mlp.hvp(inst.w, inst.batch, Vec::Unit(p, j));
  CHECK((h - h.transpose()).norm() <= 1e-9 * h.norm());
}

TEST_CASE("output_jacobian: finite differences and structure") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = random_instance(200 + seed);
    const Index c = inst.mlp.spec().output_dim();
    const Mat jac = inst.mlp.output_jacobian(inst.w, inst.batch.inputs);
    REQUIRE(jac.rows() == inst.batch.size() * c);
    REQUIRE(jac.cols() == inst.mlp.parameter_count());
    for (Index n = 0; n < inst.batch.size(); ++n) {
      for (Index k = 0; k < c; ++k) {
        const Vec fd = fd_gradient(
            [&](const Vec& w) { return inst.mlp.forward(w, inst.batch.inputs)(n, k); }, inst.w);
        CHECK(rel_err(Vec(jac.row(n * c + k).transpose()), fd) < 1e-5);
      }
    }
  }
  Mlp mlp(MlpSpec::make({3, 4, 3}));
  Rng rng(9);
  const Vec w = mlp.init(1) + 0.1 * random_vector(mlp.parameter_count(), rng);
  const Mat zero_in = Mat::Zero(2, 3);
  const Mat jac = mlp.output_jacobian(w, zero_in);
  const Index bias_off = mlp.spec().layer_offset(1) + 4 * 3;
  for (Index n = 0; n < 2; ++n)
    for (Index k = 0; k < 3; ++k) {
      for (Index j = 0; j < 3; ++j) CHECK(jac(n * 3 + k, bias_off + j) == (j == k ? 1.0 : 0.0));
      CHECK(jac.row(n * 3 + k).head(12).isZero(0.0));  // first-layer weights
    }
}

TEST_CASE("vjp matches the Jacobian transpose product") {
  auto inst = random_instance(77);
  Rng rng(1);
  const Index c = inst.mlp.spec().output_dim();
  const Mat cot = random_matrix(inst.batch.size(), c, rng);
  const Mat jac = inst.mlp.output_jacobian(inst.w, inst.batch.inputs);
  Vec want = Vec::Zero(inst.mlp.parameter_count());
  for (Index n = 0; n < inst.batch.size(); ++n)
    for (Index k = 0; k < c; ++k) want += cot(n, k) * jac.row(n * c + k).transpose();
  CHECK(rel_err(inst.mlp.vjp(inst.w, inst.batch.inputs, cot), want) < 1e-12);
}

TEST_CASE("Gauss-Newton matrix from output_jacobian is PSD") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto inst = random_instance(300 + seed);
    const Index c = inst.mlp.spec().output_dim();
    const Mat jac = inst.mlp.output_jacobian(inst.w, inst.batch.inputs);
    const Mat s = softmax_rows(inst.mlp.forward(inst.w, inst.batch.inputs));
    Mat gn = Mat::Zero(inst.mlp.parameter_count(), inst.mlp.parameter_count());
    for (Index n = 0; n < inst.batch.size(); ++n) {
      const Vec sn = s.row(n).transpose();
      const Mat a = Mat(sn.asDiagonal()) - sn * sn.transpose();
      const Mat jn = jac.middleRows(n * c, c);
      gn += jn.transpose() * a * jn;
    }
    const auto e = eigh_symmetric(SymMatrix(gn));
    CHECK(e.values(e.dim() - 1) >= -1e-9 * e.values(0));
  }
}

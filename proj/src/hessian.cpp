// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0

#include "taskinf/hessian.hpp"

#include <cmath>
#include <sstream>

#include "taskinf/binary.hpp"

namespace taskinf {

std::string to_string(HessianMethod m) { return m == HessianMethod::Exact ? "exact" : "gn"; }

HessianMethod hessian_method_from_string(const std::string& name) {
  if (name == "exact") return HessianMethod::Exact;
  if (name == "gn" || name == "gauss_newton") return HessianMethod::GaussNewton;
  throw UsageError("unknown hessian method '" + name + "' (expected exact or gn)");
}

Index HessianRep::dim() const {
  if (const auto* d = std::get_if<SymMatrix>(&value)) return d->dim();
  return std::get<FactorMatrix>(value).rows();
}

Mat HessianRep::dense() const {
  if (const auto* d = std::get_if<SymMatrix>(&value)) return d->matrix();
  return std::get<FactorMatrix>(value).outer();
}

HessianRep exact_meta_hessian(const MetaParams& mp, std::span<const Task> tasks, Index dense_cap) {
  mp.validate();
  const Index q = mp.size();
  if (q > dense_cap) {
    std::ostringstream msg;
    msg << "exact meta-Hessian: q = " << q << " exceeds the dense cap " << dense_cap;
    throw UsageError(msg.str());
  }
  if (tasks.empty()) throw UsageError("exact meta-Hessian: taskset is empty");
  const double inv_m = 1.0 / static_cast<double>(tasks.size());
  Mat h(q, q);
  parallel_for(static_cast<std::size_t>(q), [&](std::size_t jj) {
    const auto j = static_cast<Index>(jj);
    const double step = 1e-4 * (1.0 + std::abs(mp.omega(j)));
    MetaParams up = mp, down = mp;
    up.omega(j) += step;
    down.omega(j) -= step;
    Vec col = Vec::Zero(q);
    for (const Task& t : tasks) {
      const Vec diff = (meta_grad(up, t) - meta_grad(down, t)) / (2.0 * step);
      if (!diff.allFinite()) {
        std::ostringstream msg;
        msg << "exact meta-Hessian: non-finite entry for task " << t.id << " at coordinate " << j;
        throw NumericalError(msg.str());
      }
      col += diff;
    }
    h.col(j) = col * inv_m;
  });
  HessianRep rep{SymMatrix(h), {static_cast<Index>(tasks.size()), HessianMethod::Exact, std::nullopt, 0.0}};
  const double norm = h.norm();
  rep.meta.asymmetry = norm > 0.0 ? (h - h.transpose()).norm() / norm : 0.0;
  return rep;
}

namespace {

// Per-sample Gauss-Newton curvature of softmax cross-entropy: diag(s) - s s^T.
Mat softmax_curvature(const Eigen::RowVectorXd& logits) {
  const Mat s = softmax_rows(Mat(logits));
  const Vec sig = s.row(0).transpose();
  Mat a = -sig * sig.transpose();
  a.diagonal() += sig;
  return a;
}

}  // namespace

FactorMatrix gn_columns_for_task(const MetaParams& mp, const Task& task, Index task_count) {
  if (task_count < 1) throw UsageError("gn_columns_for_task: task_count must be positive");
  const Mat jac = meta_output_jacobian(mp, task);
  const Mat logits = adapted_query_logits(mp, task);
  const Index c = task.n_ways;
  const Index nq = task.query.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(nq) * static_cast<double>(task_count));
  Mat cols(mp.size(), nq * c);
  Index used = 0;
  for (Index n = 0; n < nq; ++n) {
    const Mat root = psd_sqrt_small(SymMatrix(softmax_curvature(logits.row(n))));
    const auto jn = jac.middleRows(n * c, c);  // c x q
    for (Index k = 0; k < root.cols(); ++k) {
      if (root.col(k).squaredNorm() == 0.0) continue;
      cols.col(used++) = scale * (jn.transpose() * root.col(k));
    }
  }
  return FactorMatrix(Mat(cols.leftCols(used)));
}

HessianRep accumulate_gn(const MetaParams& mp, std::span<const Task> tasks, Index capacity) {
  mp.validate();
  if (capacity < 1) throw UsageError("accumulate_gn: capacity must be at least 1");
  const auto m = static_cast<Index>(tasks.size());
  FactorMatrix buffer(mp.size());
  // Columns are generated in parallel chunks; insertion stays in task order.
  const std::size_t chunk = std::max<std::size_t>(1, max_threads());
  std::vector<FactorMatrix> pending;
  for (std::size_t start = 0; start < tasks.size(); start += chunk) {
    const std::size_t count = std::min(chunk, tasks.size() - start);
    pending.assign(count, FactorMatrix());
    parallel_for(count, [&](std::size_t i) { pending[i] = gn_columns_for_task(mp, tasks[start + i], m); });
    for (const FactorMatrix& cols : pending) {
      buffer.append(cols.matrix());
      buffer = orthogonalize_keep_largest(buffer, capacity);
    }
  }
  return {buffer, {m, HessianMethod::GaussNewton, capacity, 0.0}};
}

HessianRep gn_dense(const MetaParams& mp, std::span<const Task> tasks) {
  mp.validate();
  const Index q = mp.size();
  const auto m = static_cast<Index>(tasks.size());
  std::vector<Mat> parts(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    const Task& task = tasks[i];
    const Mat jac = meta_output_jacobian(mp, task);
    const Mat logits = adapted_query_logits(mp, task);
    const Index c = task.n_ways;
    Mat acc = Mat::Zero(q, q);
    for (Index n = 0; n < task.query.size(); ++n) {
      const auto jn = jac.middleRows(n * c, c);
      acc.noalias() += jn.transpose() * softmax_curvature(logits.row(n)) * jn;
    }
    if (task.query.size() > 0) acc /= static_cast<double>(task.query.size());
    parts[i] = std::move(acc);
  });
  Mat sum = Mat::Zero(q, q);
  for (const Mat& p : parts) sum += p;
  if (m > 0) sum /= static_cast<double>(m);
  return {SymMatrix(sum), {m, HessianMethod::GaussNewton, std::nullopt, 0.0}};
}

SpectralInverse invert(const HessianRep& h, const Keep& keep) {
  SpectralInverse out;
  const Index q = h.dim();
  if (const auto* dense = std::get_if<SymMatrix>(&h.value)) {
    const EigenDecomposition e = eigh_symmetric(*dense);
    out.spectrum = e.values;
    out.available = q;
    out.clamped = keep.rule == Keep::Rule::Count && keep.count > q;
    const std::vector<Index> kept = retained_indices(e.values, keep);
    out.pinv = pseudo_inverse_spectral(e, keep);
    out.retained = static_cast<Index>(kept.size());
    Mat basis(q, out.retained);
    std::vector<bool> in(static_cast<std::size_t>(q), false);
    for (Index c = 0; c < out.retained; ++c) {
      const Index i = kept[static_cast<std::size_t>(c)];
      basis.col(c) = e.vectors.col(i);
      in[static_cast<std::size_t>(i)] = true;
    }
    for (Index i = 0; i < q; ++i) out.discarded_negative += !in[static_cast<std::size_t>(i)] && e.values(i) < 0.0;
    out.projector = SymMatrix(basis * basis.transpose());
    return out;
  }
  const FactorMatrix& factor = std::get<FactorMatrix>(h.value);
  const Mat w = orthogonal_columns(factor.matrix(), 0.0, 1e-10);
  const Index r = w.cols();
  out.spectrum = w.colwise().squaredNorm().transpose();
  out.available = r;
  out.clamped = keep.rule == Keep::Rule::Count && keep.count > r;
  const Index kept = retained_count(out.spectrum, keep);
  out.retained = kept;
  const auto kept_cols = w.leftCols(kept);
  const Vec n2 = out.spectrum.head(kept);
  const Mat pinv = kept_cols * n2.cwiseAbs2().cwiseInverse().asDiagonal() * kept_cols.transpose();
  const Mat proj = kept_cols * n2.cwiseInverse().asDiagonal() * kept_cols.transpose();
  out.pinv = SymMatrix(pinv);
  out.projector = SymMatrix(proj);
  return out;
}

namespace {

constexpr std::string_view kHessianMagic = "TIHS";
constexpr std::uint64_t kHessianVersion = 1;

}  // namespace

std::string encode_hessian(const HessianRep& h) {
  BinaryWriter w;
  w.bytes(kHessianMagic);
  w.u64(kHessianVersion);
  const Index q = h.dim();
  const Mat& payload = h.is_dense() ? std::get<SymMatrix>(h.value).matrix() : std::get<FactorMatrix>(h.value).matrix();
  w.u64(h.is_dense() ? 0 : 1);
  w.u64(static_cast<std::uint64_t>(q));
  w.u64(static_cast<std::uint64_t>(payload.cols()));
  w.u64(h.meta.method == HessianMethod::Exact ? 0 : 1);
  w.u64(static_cast<std::uint64_t>(h.meta.capacity.value_or(0)));
  w.u64(static_cast<std::uint64_t>(h.meta.task_count));
  w.f64(h.meta.asymmetry);
  for (Index i = 0; i < q; ++i)
    for (Index j = 0; j < payload.cols(); ++j) w.f64(payload(i, j));
  return w.buffer();
}

HessianRep decode_hessian(std::string bytes, const std::string& origin) {
  BinaryReader r(std::move(bytes), origin);
  r.expect_magic(kHessianMagic);
  if (r.u64() != kHessianVersion) throw IoError(origin + ": unsupported hessian version");
  const std::uint64_t variant = r.u64();
  const std::uint64_t q = r.u64();
  const std::uint64_t cols = r.u64();
  const std::uint64_t method = r.u64();
  const std::uint64_t capacity = r.u64();
  const std::uint64_t tasks = r.u64();
  const double asymmetry = r.f64();
  if (variant > 1 || method > 1) throw IoError(origin + ": corrupt hessian header");
  if (variant == 0 && cols != q) throw IoError(origin + ": dense hessian must be square");
  if (q > (1u << 20) || cols > (1u << 20)) throw IoError(origin + ": implausible hessian size");
  Mat payload(static_cast<Index>(q), static_cast<Index>(cols));
  for (Index i = 0; i < payload.rows(); ++i)
    for (Index j = 0; j < payload.cols(); ++j) payload(i, j) = r.f64();
  r.expect_end();
  HessianMeta meta{static_cast<Index>(tasks), method == 0 ? HessianMethod::Exact : HessianMethod::GaussNewton,
                   capacity == 0 ? std::nullopt : std::optional<Index>(static_cast<Index>(capacity)), asymmetry};
  if (variant == 0) return {SymMatrix(payload), meta};
  return {FactorMatrix(std::move(payload)), meta};
}

void save_hessian(const std::filesystem::path& path, const HessianRep& h) {
  write_text_file(path, encode_hessian(h));
}

HessianRep load_hessian(const std::filesystem::path& path) {
  return decode_hessian(read_text_file(path), path.string());
}

}  // namespace taskinf

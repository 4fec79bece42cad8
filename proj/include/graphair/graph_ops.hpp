#pragma once

// Differentiable graph operations on the autodiff tape: normalised message
// passing over fixed or learned edge weights, pairwise edge scoring,
// straight-through relaxed Bernoulli sampling, and products restricted to a
// sparse feature pattern.

#include "graphair/autodiff.hpp"
#include "graphair/graph.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <memory>

namespace graphair {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Candidate node pairs (i < j) that carry an edge weight. A complete set
/// enumerates every pair in row-major order and enables dense kernels.
class PairSet {
 public:
  PairSet() = default;

  static PairSet complete(int num_nodes) {
    PairSet p;
    p.num_nodes_ = num_nodes;
    p.complete_ = true;
    const auto n = static_cast<std::size_t>(num_nodes);
    p.pairs_.reserve(n * (n > 0 ? n - 1 : 0) / 2);
    for (int i = 0; i < num_nodes; ++i) {
      for (int j = i + 1; j < num_nodes; ++j) p.pairs_.push_back({i, j});
    }
    return p;
  }

  /// Pairs are canonicalised but kept in the given order; duplicates and
  /// self pairs are rejected.
  static PairSet from_pairs(int num_nodes, std::vector<Edge> pairs) {
    PairSet p;
    p.num_nodes_ = num_nodes;
    for (Edge& e : pairs) {
      if (e.u == e.v) throw DimensionError("pair set cannot contain self pairs");
      if (e.u < 0 || e.v < 0 || e.u >= num_nodes || e.v >= num_nodes) {
        throw DimensionError("pair endpoint out of range");
      }
      e = canonical(e.u, e.v);
    }
    std::vector<Edge> sorted = pairs;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw DimensionError("pair set contains duplicates");
    }
    p.pairs_ = std::move(pairs);
    return p;
  }

  int num_nodes() const noexcept { return num_nodes_; }
  bool is_complete() const noexcept { return complete_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  const std::vector<Edge>& pairs() const noexcept { return pairs_; }
  const Edge& operator[](std::size_t p) const { return pairs_[p]; }

  /// 0/1 column with 1 where the pair is an edge of `graph`.
  Matrix targets(const Graph& graph) const {
    Matrix t(static_cast<Index>(pairs_.size()), 1);
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      t(static_cast<Index>(p), 0) = graph.has_edge(pairs_[p].u, pairs_[p].v) ? 1.0 : 0.0;
    }
    return t;
  }

  /// Symmetric dense matrix with values[p] at (i,j) and (j,i).
  Matrix scatter_dense(const Matrix& values) const {
    Matrix out = Matrix::Zero(num_nodes_, num_nodes_);
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      const double v = values(static_cast<Index>(p), 0);
      out(pairs_[p].u, pairs_[p].v) = v;
      out(pairs_[p].v, pairs_[p].u) = v;
    }
    return out;
  }

  Matrix gather_dense(const Matrix& dense) const {
    Matrix out(static_cast<Index>(pairs_.size()), 1);
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      out(static_cast<Index>(p), 0) = dense(pairs_[p].u, pairs_[p].v);
    }
    return out;
  }

 private:
  int num_nodes_ = 0;
  bool complete_ = false;
  std::vector<Edge> pairs_;
};

/// D^{-1/2} (A + I) D^{-1/2} for the unweighted adjacency of `graph`.
inline std::shared_ptr<const SparseMatrix> normalized_adjacency(const Graph& graph) {
  const int n = graph.num_nodes();
  Vector inv_sqrt(n);
  for (int i = 0; i < n; ++i) inv_sqrt(i) = 1.0 / std::sqrt(1.0 + graph.degree(i));
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) + 2 * graph.num_edges());
  for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, inv_sqrt(i) * inv_sqrt(i));
  for (const Edge& e : graph.edges()) {
    const double w = inv_sqrt(e.u) * inv_sqrt(e.v);
    triplets.emplace_back(e.u, e.v, w);
    triplets.emplace_back(e.v, e.u, w);
  }
  auto a = std::make_shared<SparseMatrix>(n, n);
  a->setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

namespace ad {

/// Fixed symmetric propagation: A_hat * M.
inline Var propagate(std::shared_ptr<const SparseMatrix> a_hat, const Var& m) {
  require_dims(a_hat->cols() == m.rows(), "propagate: adjacency/feature row mismatch");
  Matrix out = (*a_hat) * m.value();
  return m.tape()->record(std::move(out), {m}, [a_hat, m](Tape& tape, const Matrix& g) {
    tape.accumulate(m, Matrix((*a_hat) * g));  // A_hat is symmetric
  });
}

/// Normalised propagation over a learned weighted adjacency:
///   out = D^{-1/2} (W + I) D^{-1/2} M,  D = diag(1 + W 1),
/// where W is symmetric with W_ij = W_ji = weights[p] for pair p = (i, j).
/// Differentiable in both the pair weights and M.
inline Var weighted_propagate(const PairSet& pairs, const Var& weights, const Var& m) {
  const int n = pairs.num_nodes();
  require_dims(weights.rows() == static_cast<Index>(pairs.size()) && weights.cols() == 1,
               "weighted_propagate: one weight per pair expected");
  require_dims(m.rows() == n, "weighted_propagate: feature rows must equal node count");
  const Matrix& w = weights.value();

  if (pairs.is_complete()) {
    Matrix a = pairs.scatter_dense(w);
    Vector deg = a.rowwise().sum().array() + 1.0;
    Vector s = deg.cwiseSqrt().cwiseInverse();
    a.diagonal().setOnes();
    a = s.asDiagonal() * a * s.asDiagonal();
    Matrix out = a * m.value();
    auto shared_a = std::make_shared<Matrix>(std::move(a));
    const Matrix out_copy = out;
    return m.tape()->record(std::move(out), {weights, m},
                            [&pairs, weights, m, shared_a, s, deg, out_copy](Tape& tape, const Matrix& g) {
      const Matrix& a_hat = *shared_a;
      const Matrix dm = a_hat * g;
      if (m.requires_grad()) tape.accumulate(m, dm);
      if (!weights.requires_grad()) return;
      const Vector dd = -(g.cwiseProduct(out_copy).rowwise().sum() + m.value().cwiseProduct(dm).rowwise().sum())
                             .cwiseQuotient(2.0 * deg);
      const Matrix gm = g * m.value().transpose();
      Matrix dw(static_cast<Index>(pairs.size()), 1);
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const int i = pairs[p].u, j = pairs[p].v;
        dw(static_cast<Index>(p), 0) = s(i) * s(j) * (gm(i, j) + gm(j, i)) + dd(i) + dd(j);
      }
      tape.accumulate(weights, dw);
    });
  }

  Vector deg = Vector::Ones(n);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const double wp = w(static_cast<Index>(p), 0);
    deg(pairs[p].u) += wp;
    deg(pairs[p].v) += wp;
  }
  Vector s = deg.cwiseSqrt().cwiseInverse();
  // The forward and the dM backward are the same symmetric sparse product.
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * pairs.size() + static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, s(i) * s(i));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const double wp = w(static_cast<Index>(p), 0);
    if (wp == 0.0) continue;
    const int i = pairs[p].u, j = pairs[p].v;
    const double v = wp * s(i) * s(j);
    triplets.emplace_back(i, j, v);
    triplets.emplace_back(j, i, v);
  }
  auto a_hat = std::make_shared<SparseMatrix>(n, n);
  a_hat->setFromTriplets(triplets.begin(), triplets.end());
  Matrix out = (*a_hat) * m.value();
  const Matrix out_copy = out;
  return m.tape()->record(std::move(out), {weights, m},
                          [&pairs, weights, m, a_hat, s, deg, out_copy](Tape& tape, const Matrix& g) {
    const Matrix dm = (*a_hat) * g;
    if (m.requires_grad()) tape.accumulate(m, dm);
    if (!weights.requires_grad()) return;
    const Vector dd = -(g.cwiseProduct(out_copy).rowwise().sum() + m.value().cwiseProduct(dm).rowwise().sum())
                           .cwiseQuotient(2.0 * deg);
    const Matrix& mv = m.value();
    Matrix dw(static_cast<Index>(pairs.size()), 1);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const int i = pairs[p].u, j = pairs[p].v;
      const double q = g.row(i).dot(mv.row(j)) + g.row(j).dot(mv.row(i));
      dw(static_cast<Index>(p), 0) = s(i) * s(j) * q + dd(i) + dd(j);
    }
    tape.accumulate(weights, dw);
  });
}

/// Pair scores t_i . t_j for every pair, as a column.
inline Var pair_dot(const Var& t, const PairSet& pairs) {
  require_dims(t.rows() == pairs.num_nodes(), "pair_dot: embedding rows must equal node count");
  Matrix out(static_cast<Index>(pairs.size()), 1);
  const Matrix& tv = t.value();
  if (pairs.is_complete()) {
    const Matrix gram = tv * tv.transpose();
    out = pairs.gather_dense(gram);
  } else {
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      out(static_cast<Index>(p), 0) = tv.row(pairs[p].u).dot(tv.row(pairs[p].v));
    }
  }
  return t.tape()->record(std::move(out), {t}, [&pairs, t](Tape& tape, const Matrix& g) {
    const Matrix& tv = t.value();
    if (pairs.is_complete()) {
      tape.accumulate(t, pairs.scatter_dense(g) * tv);
      return;
    }
    Matrix dt = Matrix::Zero(tv.rows(), tv.cols());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const double gp = g(static_cast<Index>(p), 0);
      dt.row(pairs[p].u) += gp * tv.row(pairs[p].v);
      dt.row(pairs[p].v) += gp * tv.row(pairs[p].u);
    }
    tape.accumulate(t, dt);
  });
}

/// Binary-concrete sample y = sigmoid((logit + noise) / temperature) with
/// logistic `noise`. With `hard`, the forward value is 1[y > 0.5] and the
/// gradient is that of the relaxed y (straight-through). Infinite logits give
/// exact 0/1 samples.
inline Var relaxed_bernoulli(const Var& logits, const Matrix& noise, double temperature, bool hard) {
  require_dims(noise.rows() == logits.rows() && noise.cols() == logits.cols(),
               "relaxed_bernoulli: noise shape mismatch");
  if (!(temperature > 0)) throw Error("relaxed_bernoulli: temperature must be positive");
  const Matrix& l = logits.value();
  Matrix y(l.rows(), l.cols());
  for (Index k = 0; k < l.size(); ++k) {
    const double lk = l.data()[k];
    if (std::isinf(lk)) {
      y.data()[k] = lk > 0 ? 1.0 : 0.0;
    } else {
      y.data()[k] = stable_sigmoid((lk + noise.data()[k]) / temperature);
    }
  }
  Matrix value = y;
  if (hard) value = (y.array() > 0.5).cast<double>().matrix();
  return logits.tape()->record(std::move(value), {logits}, [logits, y, temperature](Tape& tape, const Matrix& g) {
    tape.accumulate(logits, g.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())) / temperature);
  });
}

/// S(values) * w for a fixed sparsity pattern whose stored values are the
/// nnz x 1 column `values` (in storage order).
inline Var spmm(std::shared_ptr<const SparseMatrix> pattern, const Var& values, const Var& w) {
  require_dims(values.rows() == pattern->nonZeros() && values.cols() == 1, "spmm: one value per stored entry expected");
  require_dims(pattern->cols() == w.rows(), "spmm: inner dimensions differ");
  auto s = std::make_shared<SparseMatrix>(*pattern);
  std::copy(values.value().data(), values.value().data() + values.rows(), s->valuePtr());
  Matrix out = (*s) * w.value();
  return w.tape()->record(std::move(out), {values, w}, [pattern, s, values, w](Tape& tape, const Matrix& g) {
    if (w.requires_grad()) tape.accumulate(w, Matrix(s->transpose() * g));
    if (!values.requires_grad()) return;
    const Matrix& wv = w.value();
    Matrix dv(values.rows(), 1);
    for (Index i = 0; i < pattern->outerSize(); ++i) {
      for (SparseMatrix::InnerIterator it(*pattern, i); it; ++it) {
        dv(&it.value() - pattern->valuePtr(), 0) = g.row(i).dot(wv.row(it.col()));
      }
    }
    tape.accumulate(values, dv);
  });
}

/// Entries of a * b + bias (bias broadcast over rows) at the stored
/// positions of `pattern`, as an nnz x 1 column in storage order.
inline Var sddmm(std::shared_ptr<const SparseMatrix> pattern, const Var& a, const Var& b, const Var& bias) {
  require_dims(a.rows() == pattern->rows() && b.cols() == pattern->cols() && a.cols() == b.rows(),
               "sddmm: shape mismatch");
  require_dims(bias.rows() == 1 && bias.cols() == b.cols(), "sddmm: bias width mismatch");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const Matrix& cv = bias.value();
  Matrix out(pattern->nonZeros(), 1);
  const double* base = pattern->valuePtr();
  for (Index i = 0; i < pattern->outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(*pattern, i); it; ++it) {
      out(&it.value() - base, 0) = av.row(i).dot(bv.col(it.col())) + cv(0, it.col());
    }
  }
  return a.tape()->record(std::move(out), {a, b, bias}, [pattern, a, b, bias](Tape& tape, const Matrix& g) {
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    Matrix da = Matrix::Zero(av.rows(), av.cols());
    Matrix db = Matrix::Zero(bv.rows(), bv.cols());
    Matrix dc = Matrix::Zero(1, bv.cols());
    const double* base = pattern->valuePtr();
    for (Index i = 0; i < pattern->outerSize(); ++i) {
      for (SparseMatrix::InnerIterator it(*pattern, i); it; ++it) {
        const double gk = g(&it.value() - base, 0);
        if (gk == 0.0) continue;
        da.row(i) += gk * bv.col(it.col()).transpose();
        db.col(it.col()) += gk * av.row(i).transpose();
        dc(0, it.col()) += gk;
      }
    }
    if (a.requires_grad()) tape.accumulate(a, da);
    if (b.requires_grad()) tape.accumulate(b, db);
    if (bias.requires_grad()) tape.accumulate(bias, dc);
  });
}

}  // namespace ad
}  // namespace graphair

#pragma once

// Minimal reverse-mode automatic differentiation over dense Eigen matrices.
//
// A Tape records every operation applied to its variables. Node ids grow
// monotonically, so replaying the nodes in reverse id order is a valid
// topological order for the backward pass.

#include "graphair/common.hpp"

#include <cmath>
#include <deque>
#include <functional>
#include <initializer_list>
#include <utility>
#include <vector>

namespace graphair::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while its tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double item() const;
  bool requires_grad() const;
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  /// Receives dL/d(output) and pushes contributions to inputs via accumulate().
  using Backward = std::function<void(Tape&, const Matrix&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value) { return push(std::move(value), false, nullptr); }
  Var variable(Matrix value) { return push(std::move(value), true, nullptr); }

  /// Records an op result. `backward` is dropped when no input needs a grad.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
    return record_impl(std::move(value), inputs.begin(), inputs.end(), std::move(backward));
  }

  Var record(Matrix value, const std::vector<Var>& inputs, Backward backward) {
    return record_impl(std::move(value), inputs.begin(), inputs.end(), std::move(backward));
  }

  const Matrix& value(const Var& v) const { return node(v.id()).value; }
  bool requires_grad(const Var& v) const { return node(v.id()).requires_grad; }

  /// Gradient of the last backward() root w.r.t. `v`; zeros if `v` was not
  /// reached.
  Matrix grad(const Var& v) const {
    const Node& n = node(v.id());
    if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  template <typename Derived>
  void accumulate(const Var& v, const Eigen::MatrixBase<Derived>& contribution) {
    Node& n = node(v.id());
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = contribution;
    } else {
      n.grad += contribution;
    }
  }

  /// Runs the backward pass from a 1x1 root.
  void backward(const Var& root) {
    check_owner(root);
    Node& r = node(root.id());
    require_dims(r.value.rows() == 1 && r.value.cols() == 1, "backward() root must be a scalar");
    for (Node& n : nodes_) n.grad.resize(0, 0);
    r.grad = Matrix::Ones(1, 1);
    for (std::size_t id = root.id() + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (!n.backward || n.grad.size() == 0) continue;
      n.backward(*this, n.grad);
    }
  }

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };

  template <typename It>
  Var record_impl(Matrix value, It first, It last, Backward backward) {
    bool needs = false;
    for (It it = first; it != last; ++it) {
      check_owner(*it);
      needs = needs || node(it->id()).requires_grad;
    }
    return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
  }

  Var push(Matrix value, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, std::move(backward)});
    return Var(this, nodes_.size() - 1);
  }

  void check_owner(const Var& v) const {
    if (v.tape() != this) throw Error("variable belongs to a different tape");
  }

  Node& node(std::size_t id) { return nodes_.at(id); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }

  // deque keeps element addresses stable while new nodes are appended.
  std::deque<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }
inline bool Var::requires_grad() const { return tape_->requires_grad(*this); }
inline double Var::item() const {
  require_dims(value().size() == 1, "item() requires a 1x1 variable");
  return value()(0, 0);
}

// ---------------------------------------------------------------------------
// Elementary ops

inline void require_same_shape(const Var& a, const Var& b, const char* op) {
  require_dims(a.rows() == b.rows() && a.cols() == b.cols(),
               std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                   std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                   std::to_string(b.cols()) + ")");
}

inline Var matmul(const Var& a, const Var& b) {
  require_dims(a.cols() == b.rows(), "matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                                         " vs " + std::to_string(b.rows()) + ")");
  Tape& t = *a.tape();
  return t.record(a.value() * b.value(), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    if (a.requires_grad()) tape.accumulate(a, g * b.value().transpose());
    if (b.requires_grad()) tape.accumulate(b, a.value().transpose() * g);
  });
}

inline Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return a.tape()->record(a.value() + b.value(), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, g);
  });
}

inline Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return a.tape()->record(a.value() - b.value(), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, -g);
  });
}

/// Elementwise product.
inline Var hadamard(const Var& a, const Var& b) {
  require_same_shape(a, b, "hadamard");
  return a.tape()->record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    if (a.requires_grad()) tape.accumulate(a, g.cwiseProduct(b.value()));
    if (b.requires_grad()) tape.accumulate(b, g.cwiseProduct(a.value()));
  });
}

inline Var scale(const Var& a, double s) {
  return a.tape()->record(a.value() * s, {a}, [a, s](Tape& tape, const Matrix& g) { tape.accumulate(a, g * s); });
}

/// a + row, with the 1xc `row` broadcast over every row of a.
inline Var add_row(const Var& a, const Var& row) {
  require_dims(row.rows() == 1 && row.cols() == a.cols(), "add_row: bias width mismatch");
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return a.tape()->record(std::move(out), {a, row}, [a, row](Tape& tape, const Matrix& g) {
    tape.accumulate(a, g);
    if (row.requires_grad()) tape.accumulate(row, g.colwise().sum());
  });
}

inline Var relu(const Var& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape()->record(std::move(out), {a}, [a](Tape& tape, const Matrix& g) {
    tape.accumulate(a, (a.value().array() > 0.0).cast<double>().matrix().cwiseProduct(g));
  });
}

inline double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Var sigmoid(const Var& a) {
  Matrix out = a.value().unaryExpr([](double x) { return stable_sigmoid(x); });
  if (!a.requires_grad()) return a.tape()->constant(std::move(out));
  Matrix s = out;
  return a.tape()->record(std::move(out), {a}, [a, s = std::move(s)](Tape& tape, const Matrix& g) {
    tape.accumulate(a, g.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix())));
  });
}

/// Row-wise softmax.
inline Var softmax_rows(const Var& a) {
  Matrix out = a.value();
  for (Index i = 0; i < out.rows(); ++i) {
    const double m = out.row(i).maxCoeff();
    out.row(i) = (out.row(i).array() - m).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  Matrix p = out;
  return a.tape()->record(std::move(out), {a}, [a, p = std::move(p)](Tape& tape, const Matrix& g) {
    // d softmax: p * (g - <g, p>) row-wise
    const Vector inner = g.cwiseProduct(p).rowwise().sum();
    Matrix d = g;
    d.colwise() -= inner;
    tape.accumulate(a, p.cwiseProduct(d));
  });
}

/// Sum of all entries, as a 1x1 variable.
inline Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const Index r = a.rows(), c = a.cols();
  return a.tape()->record(std::move(out), {a}, [a, r, c](Tape& tape, const Matrix& g) {
    tape.accumulate(a, Matrix::Constant(r, c, g(0, 0)));
  });
}

/// Weighted sum of 1x1 variables.
inline Var linear_combination(const std::vector<Var>& terms, const std::vector<double>& weights) {
  require_dims(!terms.empty() && terms.size() == weights.size(), "linear_combination: size mismatch");
  Tape& t = *terms.front().tape();
  Matrix out = Matrix::Zero(1, 1);
  bool needs = false;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    require_dims(terms[k].value().size() == 1, "linear_combination: terms must be scalars");
    out(0, 0) += weights[k] * terms[k].item();
    needs = needs || terms[k].requires_grad();
  }
  if (!needs) return t.constant(std::move(out));
  return t.record(std::move(out), terms, [terms, weights](Tape& tape, const Matrix& g) {
    for (std::size_t k = 0; k < terms.size(); ++k) {
      if (weights[k] != 0.0) tape.accumulate(terms[k], g * weights[k]);
    }
  });
}

/// Value of `hard` in the forward pass, gradient routed to `soft`
/// (straight-through estimator).
inline Var straight_through(const Matrix& hard, const Var& soft) {
  require_dims(hard.rows() == soft.rows() && hard.cols() == soft.cols(), "straight_through: shape mismatch");
  return soft.tape()->record(hard, {soft}, [soft](Tape& tape, const Matrix& g) { tape.accumulate(soft, g); });
}

/// Stops gradient flow.
inline Var detach(const Var& a) { return a.tape()->constant(a.value()); }

}  // namespace graphair::ad

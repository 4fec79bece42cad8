#pragma once

#include "graphair/autodiff.hpp"
#include "graphair/random.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace graphair {

struct Parameter {
  std::string name;
  Matrix value;
};

/// Ordered, named collection of parameter matrices.
class ParameterSet {
 public:
  void add(std::string name, Matrix value) {
    if (index_.count(name)) throw Error("duplicate parameter '" + name + "'");
    index_.emplace(name, items_.size());
    items_.push_back({std::move(name), std::move(value)});
  }

  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  bool contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }
  std::size_t index_of(std::string_view name) const {
    const auto it = index_.find(std::string(name));
    if (it == index_.end()) throw Error("unknown parameter '" + std::string(name) + "'");
    return it->second;
  }

  Matrix& operator[](std::string_view name) { return items_[index_of(name)].value; }
  const Matrix& operator[](std::string_view name) const { return items_[index_of(name)].value; }
  Parameter& at(std::size_t k) { return items_.at(k); }
  const Parameter& at(std::size_t k) const { return items_.at(k); }

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  Index num_scalars() const {
    Index total = 0;
    for (const auto& p : items_) total += p.value.size();
    return total;
  }

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    if (a.items_.size() != b.items_.size()) return false;
    for (std::size_t k = 0; k < a.items_.size(); ++k) {
      if (a.items_[k].name != b.items_[k].name) return false;
      if (a.items_[k].value.rows() != b.items_[k].value.rows() ||
          a.items_[k].value.cols() != b.items_[k].value.cols()) {
        return false;
      }
      if (a.items_[k].value != b.items_[k].value) return false;
    }
    return true;
  }

 private:
  std::vector<Parameter> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// A ParameterSet placed on a tape, either as trainable leaves or constants.
class BoundParameters {
 public:
  BoundParameters(ad::Tape& tape, const ParameterSet& params, bool trainable) : params_(&params) {
    vars_.reserve(params.size());
    for (const auto& p : params) vars_.push_back(trainable ? tape.variable(p.value) : tape.constant(p.value));
  }

  ad::Var operator[](std::string_view name) const { return vars_[params_->index_of(name)]; }

  std::vector<Matrix> grads(const ad::Tape& tape) const {
    std::vector<Matrix> out;
    out.reserve(vars_.size());
    for (const auto& v : vars_) out.push_back(tape.grad(v));
    return out;
  }

 private:
  const ParameterSet* params_;
  std::vector<ad::Var> vars_;
};

// ---------------------------------------------------------------------------
// Layers

/// Glorot-uniform weight (in x out) and zero bias (1 x out).
inline void add_linear(ParameterSet& params, const std::string& prefix, Index in, Index out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  Matrix w(in, out);
  for (Index k = 0; k < w.size(); ++k) w.data()[k] = (2.0 * uniform_open(rng) - 1.0) * limit;
  params.add(prefix + ".W", std::move(w));
  params.add(prefix + ".b", Matrix::Zero(1, out));
}

inline ad::Var linear(const BoundParameters& p, const std::string& prefix, const ad::Var& x) {
  return ad::add_row(ad::matmul(x, p[prefix + ".W"]), p[prefix + ".b"]);
}

/// Two-layer perceptron: linear -> ReLU -> linear.
inline ad::Var mlp2(const BoundParameters& p, const std::string& prefix, const ad::Var& x) {
  return linear(p, prefix + ".1", ad::relu(linear(p, prefix + ".0", x)));
}

inline void add_mlp2(ParameterSet& params, const std::string& prefix, Index in, Index hidden, Index out, Rng& rng) {
  add_linear(params, prefix + ".0", in, hidden, rng);
  add_linear(params, prefix + ".1", hidden, out, rng);
}

/// Applies a (normalised) adjacency to a node matrix.
using Propagation = std::function<ad::Var(const ad::Var&)>;

/// Two graph-convolution layers, P(X W0) + b0 -> ReLU -> P(H W1) + b1, given
/// the first projection X W0.
inline ad::Var gcn2_projected(const BoundParameters& p, const std::string& prefix, const Propagation& propagate,
                              const ad::Var& xw0) {
  const ad::Var h1 = ad::relu(ad::add_row(propagate(xw0), p[prefix + ".0.b"]));
  return ad::add_row(propagate(ad::matmul(h1, p[prefix + ".1.W"])), p[prefix + ".1.b"]);
}

// ---------------------------------------------------------------------------
// Optimiser

struct AdamConfig {
  double lr = 1e-4;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with L2 weight decay folded into the gradient.
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig config) : config_(config) {
    if (!(config_.lr > 0)) throw Error("learning rate must be positive");
  }

  void step(ParameterSet& params, const std::vector<Matrix>& grads) {
    require_dims(grads.size() == params.size(), "Adam: one gradient per parameter expected");
    if (first_.empty()) {
      for (const auto& p : params) {
        first_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
        second_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
      }
    }
    ++steps_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Matrix& w = params.at(k).value;
      require_dims(grads[k].rows() == w.rows() && grads[k].cols() == w.cols(), "Adam: gradient shape mismatch");
      const Matrix g = grads[k] + config_.weight_decay * w;
      first_[k] = config_.beta1 * first_[k] + (1.0 - config_.beta1) * g;
      second_[k] = config_.beta2 * second_[k] + (1.0 - config_.beta2) * g.cwiseProduct(g);
      w.array() -= config_.lr * (first_[k].array() / c1) / ((second_[k].array() / c2).sqrt() + config_.eps);
    }
  }

  long steps() const noexcept { return steps_; }
  const AdamConfig& config() const noexcept { return config_; }
  const std::vector<Matrix>& first_moments() const noexcept { return first_; }
  const std::vector<Matrix>& second_moments() const noexcept { return second_; }

  void restore(long steps, std::vector<Matrix> first, std::vector<Matrix> second) {
    steps_ = steps;
    first_ = std::move(first);
    second_ = std::move(second);
  }

 private:
  AdamConfig config_;
  long steps_ = 0;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
};

}  // namespace graphair

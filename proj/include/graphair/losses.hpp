#pragma once

// Training objectives of the augmentation model:
//   L_adv      = (1/n) sum_i [S_i log S_hat_i + (1 - S_i) log(1 - S_hat_i)]
//   L_con      = (1/2n) sum_i [l(h_i, h'_i) + l(h'_i, h_i)]
//   L_reconst  = BCE(A, A_tilde') + lambda ||X - X'||_F^2
//   L          = alpha L_adv + beta L_con + gamma L_reconst
// The adversary maximises L_adv; the encoder and augmenter minimise L.
//
// Each loss has a plain function returning its value and (optionally) its
// analytic gradient, plus a tape op wrapping it.

#include "graphair/autodiff.hpp"
#include "graphair/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace graphair {

/// Clip bound for every log argument.
inline constexpr double kLogEpsilon = 1e-8;

class NonFiniteLossError : public Error {
 public:
  using Error::Error;
};

struct LossWeights {
  double alpha = 1.0;
  double beta = 0.1;
  double gamma = 0.1;
  double lambda = 1.0;
  double tau = 1.0;

  void validate() const {
    if (alpha < 0 || beta < 0 || gamma < 0 || lambda < 0) {
      throw Error("loss weights alpha, beta, gamma, lambda must be non-negative");
    }
    if (!(tau > 0)) throw Error("contrastive temperature tau must be positive");
  }
};

struct LossBreakdown {
  double adv = 0.0;
  double con = 0.0;
  double reconst = 0.0;
  double total = 0.0;

  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

/// total = alpha*adv + beta*con + gamma*reconst. Throws NonFiniteLossError
/// naming the offending component.
inline LossBreakdown total_loss(const LossWeights& w, double adv, double con, double reconst) {
  if (!std::isfinite(adv)) throw NonFiniteLossError("adversarial loss is not finite");
  if (!std::isfinite(con)) throw NonFiniteLossError("contrastive loss is not finite");
  if (!std::isfinite(reconst)) throw NonFiniteLossError("reconstruction loss is not finite");
  return LossBreakdown{adv, con, reconst, w.alpha * adv + w.beta * con + w.gamma * reconst};
}

// ---------------------------------------------------------------------------
// Adversarial loss

namespace detail {

inline double clip_probability(double p) { return std::clamp(p, kLogEpsilon, 1.0 - kLogEpsilon); }

inline bool inside_clip(double p) { return p > kLogEpsilon && p < 1.0 - kLogEpsilon; }

}  // namespace detail

/// Log-likelihood of the true sensitive values under the adversary.
/// `probs` is n x |S| (row-stochastic) or n x 1 holding S_hat for binary S.
/// For binary S the literal binary form is used with S_hat = probs(:, last);
/// for |S| > 2 it is the categorical (1/n) sum_i log probs(i, S_i).
/// Always <= 0.
inline double adversarial_loss(std::span<const int> sensitive, const Matrix& probs, Matrix* grad = nullptr) {
  const auto n = static_cast<Index>(sensitive.size());
  require_dims(probs.rows() == n && n > 0, "adversarial_loss: one probability row per node expected");
  if (grad != nullptr) *grad = Matrix::Zero(probs.rows(), probs.cols());
  if (!probs.allFinite()) throw NonFiniteLossError("adversarial_loss: non-finite probability");
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  if (probs.cols() <= 2) {
    const Index col = probs.cols() - 1;
    for (Index i = 0; i < n; ++i) {
      const int s = sensitive[static_cast<std::size_t>(i)];
      if (s < 0 || s > 1) throw DimensionError("adversarial_loss: binary form needs S in {0, 1}");
      const double raw = probs(i, col);
      const double p = detail::clip_probability(raw);
      total += s == 1 ? std::log(p) : std::log(1.0 - p);
      if (grad != nullptr && detail::inside_clip(raw)) {
        (*grad)(i, col) = inv_n * (s == 1 ? 1.0 / p : -1.0 / (1.0 - p));
      }
    }
  } else {
    for (Index i = 0; i < n; ++i) {
      const int s = sensitive[static_cast<std::size_t>(i)];
      if (s < 0 || s >= probs.cols()) throw DimensionError("adversarial_loss: sensitive value out of range");
      const double raw = probs(i, s);
      const double p = detail::clip_probability(raw);
      total += std::log(p);
      if (grad != nullptr && detail::inside_clip(raw)) (*grad)(i, s) = inv_n / p;
    }
  }
  return total * inv_n;
}

// ---------------------------------------------------------------------------
// Contrastive loss (cosine similarity)

namespace detail {

/// Row-normalises `h`; zero rows stay zero and are counted.
inline Matrix normalize_rows(const Matrix& h, Vector& norms, std::size_t& zero_rows) {
  norms = h.rowwise().norm();
  Matrix u = h;
  zero_rows = 0;
  for (Index i = 0; i < h.rows(); ++i) {
    if (norms(i) > 0) {
      u.row(i) /= norms(i);
    } else {
      ++zero_rows;
    }
  }
  return u;
}

/// Backward of row normalisation: dh = (du - u (u . du)) / |h|.
inline Matrix normalize_rows_backward(const Matrix& u, const Vector& norms, const Matrix& du) {
  Matrix dh = Matrix::Zero(u.rows(), u.cols());
  for (Index i = 0; i < u.rows(); ++i) {
    if (norms(i) > 0) dh.row(i) = (du.row(i) - u.row(i) * u.row(i).dot(du.row(i))) / norms(i);
  }
  return dh;
}

/// sum_i l(u_i, v_i) over all anchors i for unit rows u, v; accumulates
/// coefficient * d/du and d/dv when the grad outputs are non-null.
inline double contrastive_direction(const Matrix& u, const Matrix& v, double tau, double coefficient,
                                    Matrix* du, Matrix* dv) {
  constexpr Index kBlock = 512;
  const Index n = u.rows();
  const double inv_tau = 1.0 / tau;
  double total = 0.0;
  for (Index start = 0; start < n; start += kBlock) {
    const Index b = std::min(kBlock, n - start);
    const auto ub = u.middleRows(start, b);
    Matrix s_uu = (ub * u.transpose()) * inv_tau;
    Matrix s_uv = (ub * v.transpose()) * inv_tau;
    Vector positive(b);
    for (Index r = 0; r < b; ++r) {
      const Index i = start + r;
      positive(r) = s_uv(r, i);
      s_uv(r, i) = -std::numeric_limits<double>::infinity();  // excluded: j == i
    }
    const Vector row_max = s_uu.rowwise().maxCoeff().cwiseMax(s_uv.rowwise().maxCoeff());
    s_uu = (s_uu.colwise() - row_max).array().exp().matrix();
    s_uv = (s_uv.colwise() - row_max).array().exp().matrix();
    const Vector denom = s_uu.rowwise().sum() + s_uv.rowwise().sum();
    for (Index r = 0; r < b; ++r) total += -positive(r) + row_max(r) + std::log(denom(r));
    if (du == nullptr) continue;
    // s_uu, s_uv now hold softmax weights A, B after dividing by denom.
    const Vector inv_denom = denom.cwiseInverse();
    s_uu = inv_denom.asDiagonal() * s_uu;
    s_uv = inv_denom.asDiagonal() * s_uv;
    for (Index r = 0; r < b; ++r) s_uv(r, start + r) -= 1.0;  // G_uv = B - I
    const double c = coefficient * inv_tau;
    du->middleRows(start, b) += c * (s_uu * u + s_uv * v);
    *du += c * (s_uu.transpose() * ub);
    *dv += c * (s_uv.transpose() * ub);
  }
  return total;
}

}  // namespace detail

struct ContrastiveResult {
  double value = 0.0;
  Matrix grad_h;        // empty unless requested
  Matrix grad_h_prime;  // empty unless requested
  std::size_t zero_norm_rows = 0;
};

/// L_con over all nodes. sim is cosine similarity; zero-norm rows have
/// similarity 0 with everything and receive no gradient.
inline ContrastiveResult contrastive_loss(const Matrix& h, const Matrix& h_prime, double tau, bool want_grad = false,
                                          Warnings* warnings = nullptr) {
  require_dims(h.rows() == h_prime.rows() && h.cols() == h_prime.cols() && h.rows() > 0,
               "contrastive_loss: H and H' must have the same non-empty shape");
  if (!(tau > 0)) throw Error("contrastive_loss: tau must be positive");
  Vector norm_u, norm_v;
  std::size_t zu = 0, zv = 0;
  const Matrix u = detail::normalize_rows(h, norm_u, zu);
  const Matrix v = detail::normalize_rows(h_prime, norm_v, zv);
  const Index n = h.rows();
  const double coefficient = 1.0 / (2.0 * static_cast<double>(n));
  ContrastiveResult result;
  result.zero_norm_rows = zu + zv;
  if (result.zero_norm_rows > 0) {
    warn(warnings, "contrastive_loss: " + std::to_string(result.zero_norm_rows) +
                       " zero-norm embedding rows treated as similarity 0");
  }
  Matrix du, dv;
  if (want_grad) {
    du = Matrix::Zero(u.rows(), u.cols());
    dv = Matrix::Zero(v.rows(), v.cols());
  }
  double total = detail::contrastive_direction(u, v, tau, coefficient, want_grad ? &du : nullptr,
                                               want_grad ? &dv : nullptr);
  total += detail::contrastive_direction(v, u, tau, coefficient, want_grad ? &dv : nullptr,
                                         want_grad ? &du : nullptr);
  result.value = coefficient * total;
  if (want_grad) {
    result.grad_h = detail::normalize_rows_backward(u, norm_u, du);
    result.grad_h_prime = detail::normalize_rows_backward(v, norm_v, dv);
  }
  return result;
}

/// l(h_i, h'_i) for one anchor, following the pair loss term by term.
inline double pairwise_contrastive(Index i, const Matrix& h, const Matrix& h_prime, double tau) {
  require_dims(h.rows() == h_prime.rows() && h.cols() == h_prime.cols(), "pairwise_contrastive: shape mismatch");
  require_dims(i >= 0 && i < h.rows(), "pairwise_contrastive: anchor out of range");
  Vector nu, nv;
  std::size_t zu = 0, zv = 0;
  const Matrix u = detail::normalize_rows(h, nu, zu);
  const Matrix v = detail::normalize_rows(h_prime, nv, zv);
  const Matrix s_uu = (u.row(i) * u.transpose()) / tau;
  Matrix s_uv = (u.row(i) * v.transpose()) / tau;
  const double positive = s_uv(0, i);
  s_uv(0, i) = -std::numeric_limits<double>::infinity();
  const double m = std::max(s_uu.maxCoeff(), s_uv.maxCoeff());
  const double denom = (s_uu.array() - m).exp().sum() + (s_uv.array() - m).exp().sum();
  return -(positive - m - std::log(denom));
}

// ---------------------------------------------------------------------------
// Reconstruction loss

/// sum_k multiplicity * -[t_k log p_k + (1 - t_k) log(1 - p_k)] with p clipped
/// to [eps, 1 - eps]; `targets` and `probs` are equally shaped.
inline double bce_sum(const Matrix& targets, const Matrix& probs, double multiplicity = 1.0, Matrix* grad = nullptr) {
  require_dims(targets.rows() == probs.rows() && targets.cols() == probs.cols(), "bce_sum: shape mismatch");
  if (grad != nullptr) *grad = Matrix::Zero(probs.rows(), probs.cols());
  double total = 0.0;
  for (Index k = 0; k < probs.size(); ++k) {
    const double t = targets.data()[k];
    const double raw = probs.data()[k];
    const double p = detail::clip_probability(raw);
    total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    if (grad != nullptr && detail::inside_clip(raw)) {
      grad->data()[k] = -multiplicity * (t / p - (1.0 - t) / (1.0 - p));
    }
  }
  return multiplicity * total;
}

/// ||X - X'||_F^2.
inline double frobenius_sq_diff(const Matrix& x, const Matrix& x_prime, Matrix* grad_x_prime = nullptr) {
  require_dims(x.rows() == x_prime.rows() && x.cols() == x_prime.cols(), "frobenius_sq_diff: shape mismatch");
  const Matrix diff = x - x_prime;
  if (grad_x_prime != nullptr) *grad_x_prime = -2.0 * diff;
  return diff.squaredNorm();
}

/// Literal double-sum form over dense matrices:
///   -sum_ij [A_ij log A~'_ij + (1 - A_ij) log(1 - A~'_ij)] + lambda ||X - X'||_F^2
inline double reconstruction_loss(const Matrix& adjacency, const Matrix& edge_probs, const Matrix& x,
                                  const Matrix& x_prime, double lambda) {
  return bce_sum(adjacency, edge_probs) + lambda * frobenius_sq_diff(x, x_prime);
}

// ---------------------------------------------------------------------------
// Tape ops

namespace ad {

inline Var adversarial_loss(std::span<const int> sensitive, const Var& probs) {
  Matrix g;
  const double value = graphair::adversarial_loss(sensitive, probs.value(), &g);
  return probs.tape()->record(Matrix::Constant(1, 1, value), {probs},
                              [probs, g = std::move(g)](Tape& tape, const Matrix& up) {
                                tape.accumulate(probs, g * up(0, 0));
                              });
}

inline Var contrastive_loss(const Var& h, const Var& h_prime, double tau, Warnings* warnings = nullptr) {
  const bool need = h.requires_grad() || h_prime.requires_grad();
  auto r = graphair::contrastive_loss(h.value(), h_prime.value(), tau, need, warnings);
  return h.tape()->record(Matrix::Constant(1, 1, r.value), {h, h_prime},
                          [h, h_prime, gh = std::move(r.grad_h), ghp = std::move(r.grad_h_prime)](
                              Tape& tape, const Matrix& up) {
                            tape.accumulate(h, gh * up(0, 0));
                            tape.accumulate(h_prime, ghp * up(0, 0));
                          });
}

inline Var bce_sum(const Matrix& targets, const Var& probs, double multiplicity = 1.0) {
  Matrix g;
  const double value = graphair::bce_sum(targets, probs.value(), multiplicity, &g);
  return probs.tape()->record(Matrix::Constant(1, 1, value), {probs},
                              [probs, g = std::move(g)](Tape& tape, const Matrix& up) {
                                tape.accumulate(probs, g * up(0, 0));
                              });
}

inline Var frobenius_sq_diff(const Matrix& x, const Var& x_prime) {
  Matrix g;
  const double value = graphair::frobenius_sq_diff(x, x_prime.value(), &g);
  return x_prime.tape()->record(Matrix::Constant(1, 1, value), {x_prime},
                                [x_prime, g = std::move(g)](Tape& tape, const Matrix& up) {
                                  tape.accumulate(x_prime, g * up(0, 0));
                                });
}

}  // namespace ad
}  // namespace graphair

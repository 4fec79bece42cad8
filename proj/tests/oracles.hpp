#pragma once

// Independent reference implementations used by the unit and acceptance
// tests: scalar loops, exhaustive counting and central differences.

#include "graphair/graphair.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <vector>

namespace oracle {

using graphair::Index;
using graphair::Matrix;

inline double cosine(const Matrix& a, Index i, const Matrix& b, Index j) {
  double dot = 0, na = 0, nb = 0;
  for (Index c = 0; c < a.cols(); ++c) {
    dot += a(i, c) * b(j, c);
    na += a(i, c) * a(i, c);
    nb += b(j, c) * b(j, c);
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// l(h_i, h'_i) term by term.
inline double pair_loss(Index i, const Matrix& h, const Matrix& hp, double tau) {
  const double num = std::exp(cosine(h, i, hp, i) / tau);
  double den = 0;
  for (Index j = 0; j < h.rows(); ++j) den += std::exp(cosine(h, i, h, j) / tau);
  for (Index j = 0; j < h.rows(); ++j) {
    if (j != i) den += std::exp(cosine(h, i, hp, j) / tau);
  }
  return -std::log(num / den);
}

inline double contrastive(const Matrix& h, const Matrix& hp, double tau) {
  double total = 0;
  for (Index i = 0; i < h.rows(); ++i) total += pair_loss(i, h, hp, tau) + pair_loss(i, hp, h, tau);
  return total / (2.0 * static_cast<double>(h.rows()));
}

inline double delta_dp(const std::vector<int>& y_hat, const std::vector<int>& d) {
  std::map<int, int> pos, cnt;
  for (std::size_t i = 0; i < d.size(); ++i) {
    cnt[d[i]] += 1;
    pos[d[i]] += y_hat[i];
  }
  double lo = 2, hi = -1;
  for (auto [g, c] : cnt) {
    const double r = static_cast<double>(pos[g]) / c;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return cnt.empty() ? 0.0 : hi - lo;
}

/// Max-min gap of P(Y_hat = 1 | Y = y, D = d) over groups that have Y = y.
inline double conditional_gap(const std::vector<int>& y, const std::vector<int>& y_hat, const std::vector<int>& d,
                              int label) {
  std::map<int, int> hit, cnt;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (y[i] != label) continue;
    cnt[d[i]] += 1;
    hit[d[i]] += y_hat[i];
  }
  double lo = 2, hi = -1;
  for (auto [g, c] : cnt) {
    const double r = static_cast<double>(hit[g]) / c;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return cnt.empty() ? 0.0 : hi - lo;
}

/// Pairwise counting: wins + ties / 2 over all (positive, negative) pairs.
inline double auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

/// Central difference of `f` w.r.t. every entry of `x`.
inline Matrix numeric_grad(const std::function<double()>& f, Matrix& x, double h = 1e-6) {
  Matrix g(x.rows(), x.cols());
  for (Index k = 0; k < x.size(); ++k) {
    const double keep = x.data()[k];
    x.data()[k] = keep + h;
    const double up = f();
    x.data()[k] = keep - h;
    const double down = f();
    x.data()[k] = keep;
    g.data()[k] = (up - down) / (2 * h);
  }
  return g;
}

/// ||a - n|| / max(||a||, ||n||); 0 when both are below `floor`.
inline double relative_error(const Matrix& analytic, const Matrix& numeric, double floor = 1e-9) {
  const double scale = std::max(analytic.norm(), numeric.norm());
  if (scale < floor) return 0.0;
  return (analytic - numeric).norm() / scale;
}

/// A small random graph with a binary sensitive attribute.
inline graphair::Graph tiny_graph(int n, int d, std::uint64_t seed) {
  auto rng = graphair::make_rng(seed, "oracle-graph");
  std::vector<graphair::Edge> edges;
  for (int i = 1; i < n; ++i) edges.push_back({static_cast<int>(graphair::uniform_index(rng, i)), i});
  Matrix x(n, d);
  for (Index k = 0; k < x.size(); ++k) x.data()[k] = graphair::standard_normal(rng);
  std::vector<int> s(n), y(n);
  for (int i = 0; i < n; ++i) {
    s[i] = i % 2;
    y[i] = (i / 2) % 2;
  }
  return graphair::Graph(n, edges, x, s, y);
}

struct ObjectiveCheck {
  double adv = 0, con = 0, reconst = 0, total = 0;
};

/// Analytic vs central-difference gradients of each objective term w.r.t.
/// all g, f and k parameters on the relaxed sample. Returns the worst
/// relative error per term.
inline ObjectiveCheck objective_gradients(int n, int d, std::uint64_t seed, bool sparse_features = false) {
  using namespace graphair;
  Graph graph = tiny_graph(n, d, seed);
  if (sparse_features) {
    Matrix x = graph.features();
    for (Index r = 0; r < x.rows(); ++r) {
      for (Index c = 0; c < x.cols(); ++c) {
        if ((r + c) % 3 != 0) x(r, c) = 0.0;
      }
    }
    const auto s = graph.sensitive();
    const auto y = graph.labels();
    graph = Graph(graph.num_nodes(), graph.edges(), x, {s.begin(), s.end()}, {y.begin(), y.end()});
  }
  ModelConfig mc;
  mc.hidden = 3;
  mc.embedding = 3;
  mc.adversary_hidden = 3;
  Rng init = make_rng(seed, "oracle-init");
  AugmentorParams g = make_augmentor(d, mc, init);
  EncoderParams f = make_encoder(d, mc, init);
  AdversaryParams k = make_adversary(mc.embedding, 2, mc, init);
  // Nonzero biases so that no term sits exactly at a symmetric point.
  for (auto* set : {&g.params, &f.params, &k.params}) {
    for (auto& p : *set) {
      for (Index q = 0; q < p.value.size(); ++q) p.value.data()[q] += 0.05 * standard_normal(init);
    }
  }
  const FeatureInput features = FeatureInput::from(graph.features(), sparse_features ? 0.5 : 0.0);
  const PairSet pairs = PairSet::complete(n);
  const Matrix targets = pairs.targets(graph);
  Rng noise_rng = make_rng(seed, "oracle-noise");
  const AugmentNoise noise = draw_noise(pairs, features.mask_rows(), features.mask_cols(), noise_rng);

  ObjectiveInputs in;
  in.graph = &graph;
  in.a_hat = normalized_adjacency(graph);
  in.features = &features;
  in.pairs = &pairs;
  in.targets = &targets;
  in.noise = &noise;
  in.weights = LossWeights{1.0, 0.1, 0.1, 1.0, 1.0};
  in.options = AugmentOptions{false, false, true};

  enum Term { kAdv, kCon, kReconst, kTotal };
  auto pick = [](const Objective& o, int term) {
    switch (term) {
      case kAdv: return o.adv;
      case kCon: return o.con;
      case kReconst: return o.reconst;
      default: return o.total;
    }
  };
  auto value = [&](int term) {
    ad::Tape tape;
    const BoundParameters bg(tape, g.params, false), bf(tape, f.params, false), bk(tape, k.params, false);
    return pick(build_objective(bg, bf, bk, tape, in), term).item();
  };

  ObjectiveCheck out;
  for (int term : {kAdv, kCon, kReconst, kTotal}) {
    ad::Tape tape;
    const BoundParameters bg(tape, g.params, true), bf(tape, f.params, true), bk(tape, k.params, true);
    Objective o = build_objective(bg, bf, bk, tape, in);
    tape.backward(pick(o, term));
    // Compared as one vector over every parameter of g, f and k.
    std::vector<double> analytic, numeric;
    const std::vector<std::pair<ParameterSet*, std::vector<Matrix>>> groups = {
        {&g.params, bg.grads(tape)}, {&f.params, bf.grads(tape)}, {&k.params, bk.grads(tape)}};
    for (const auto& [set, grads] : groups) {
      for (std::size_t p = 0; p < set->size(); ++p) {
        const Matrix fd = numeric_grad([&] { return value(term); }, set->at(p).value);
        analytic.insert(analytic.end(), grads[p].data(), grads[p].data() + grads[p].size());
        numeric.insert(numeric.end(), fd.data(), fd.data() + fd.size());
      }
    }
    const auto as_matrix = [](std::vector<double>& v) {
      return Matrix(Eigen::Map<Matrix>(v.data(), static_cast<Index>(v.size()), 1));
    };
    const double err = relative_error(as_matrix(analytic), as_matrix(numeric), 1e-7);
    (term == kAdv ? out.adv : term == kCon ? out.con : term == kReconst ? out.reconst : out.total) = err;
  }
  return out;
}

}  // namespace oracle

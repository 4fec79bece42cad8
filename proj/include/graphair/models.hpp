#pragma once

// Augmentation model g (encoder g_enc, edge head T_A, feature-mask head T_X),
// representation encoder f, and adversary k.

#include "graphair/graph_ops.hpp"
#include "graphair/nn.hpp"

#include <algorithm>
#include <limits>

namespace graphair {

struct ModelConfig {
  Index hidden = 128;
  Index embedding = 128;
  Index adversary_hidden = 128;
  double temperature = 1.0;
  /// Graphs with more nodes score only edges plus sampled non-edges.
  int dense_pair_threshold = 5000;
  /// Features at most this dense take the sparse-pattern path in training.
  double sparse_feature_density = 0.1;
};

struct AugmentorParams {
  ParameterSet params;
  Index in_features = 0;
  Index hidden = 0;
  double temperature = 1.0;
};

struct EncoderParams {
  ParameterSet params;
  Index in_features = 0;
  Index embedding = 0;
};

struct AdversaryParams {
  ParameterSet params;
  Index in_features = 0;
  int num_groups = 0;
};

inline AugmentorParams make_augmentor(Index in_features, const ModelConfig& config, Rng& rng) {
  if (!(config.temperature > 0)) throw Error("temperature must be positive");
  AugmentorParams g;
  g.in_features = in_features;
  g.hidden = config.hidden;
  g.temperature = config.temperature;
  add_linear(g.params, "g_enc.0", in_features, config.hidden, rng);
  add_linear(g.params, "g_enc.1", config.hidden, config.hidden, rng);
  add_mlp2(g.params, "edge", config.hidden, config.hidden, config.hidden, rng);
  g.params.add("edge.bias", Matrix::Zero(1, 1));
  add_mlp2(g.params, "mask", config.hidden, config.hidden, in_features, rng);
  return g;
}

inline EncoderParams make_encoder(Index in_features, const ModelConfig& config, Rng& rng) {
  EncoderParams f;
  f.in_features = in_features;
  f.embedding = config.embedding;
  add_linear(f.params, "f.0", in_features, config.hidden, rng);
  add_linear(f.params, "f.1", config.hidden, config.embedding, rng);
  return f;
}

inline AdversaryParams make_adversary(Index in_features, int num_groups, const ModelConfig& config, Rng& rng) {
  if (num_groups < 1) throw Error("adversary needs at least one sensitive group");
  AdversaryParams k;
  k.in_features = in_features;
  k.num_groups = num_groups;
  add_mlp2(k.params, "k", in_features, config.adversary_hidden, num_groups, rng);
  return k;
}

// ---------------------------------------------------------------------------
// Candidate pairs and noise

/// All pairs when n <= threshold; otherwise the edges of `graph` plus an equal
/// number of uniformly sampled non-edges.
inline PairSet candidate_pairs(const Graph& graph, int dense_threshold, Rng& rng) {
  const int n = graph.num_nodes();
  if (n <= dense_threshold) return PairSet::complete(n);
  std::vector<Edge> pairs = graph.edges();
  const std::size_t wanted = pairs.size();
  const std::size_t total = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
  const std::size_t available = total - pairs.size();
  const std::size_t target = std::min(wanted, available);
  std::vector<Edge> sampled;
  sampled.reserve(target);
  std::size_t guard = 0;
  while (sampled.size() < target) {
    const int a = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n)));
    const int b = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n)));
    if (a == b || graph.has_edge(a, b)) continue;
    sampled.push_back(canonical(a, b));
    if (++guard % 4096 == 0 || sampled.size() == target) {
      std::sort(sampled.begin(), sampled.end());
      sampled.erase(std::unique(sampled.begin(), sampled.end()), sampled.end());
    }
  }
  pairs.insert(pairs.end(), sampled.begin(), sampled.end());
  return PairSet::from_pairs(n, std::move(pairs));
}

/// Node features as seen by the tape: dense, or a fixed sparsity pattern
/// with its stored values as an nnz x 1 column.
struct FeatureInput {
  Matrix dense;
  std::shared_ptr<const SparseMatrix> pattern;
  Matrix values;

  bool is_sparse() const noexcept { return pattern != nullptr; }

  /// Chooses the sparse form when at most `max_density` of X is nonzero.
  static FeatureInput from(const Matrix& x, double max_density) {
    FeatureInput in;
    in.dense = x;
    const Index nnz = (x.array() != 0.0).count();
    const double density = x.size() > 0 ? static_cast<double>(nnz) / static_cast<double>(x.size()) : 1.0;
    if (density <= max_density) {
      auto sp = std::make_shared<SparseMatrix>(x.sparseView());
      sp->makeCompressed();
      in.values = Eigen::Map<const Vector>(sp->valuePtr(), sp->nonZeros());
      in.pattern = std::move(sp);
    }
    return in;
  }

  Index mask_rows() const { return is_sparse() ? values.rows() : dense.rows(); }
  Index mask_cols() const { return is_sparse() ? 1 : dense.cols(); }

  /// Dense n x d matrix from values in the pattern's storage order.
  Matrix densify(const Matrix& stored) const {
    if (!is_sparse()) return stored;
    SparseMatrix s = *pattern;
    std::copy(stored.data(), stored.data() + stored.rows(), s.valuePtr());
    return Matrix(s);
  }
};

struct FeatureVar {
  ad::Var dense;
  std::shared_ptr<const SparseMatrix> pattern;
  ad::Var values;

  bool is_sparse() const noexcept { return pattern != nullptr; }
  /// Dense n x d, or nnz x 1 stored values.
  const ad::Var& data() const noexcept { return is_sparse() ? values : dense; }
};

inline FeatureVar dense_features(ad::Tape& tape, const Matrix& x) { return FeatureVar{tape.constant(x), nullptr, {}}; }

inline FeatureVar place(ad::Tape& tape, const FeatureInput& in) {
  FeatureVar x;
  x.pattern = in.pattern;
  if (in.is_sparse()) {
    x.values = tape.constant(in.values);
  } else {
    x.dense = tape.constant(in.dense);
  }
  return x;
}

/// X W for either feature form.
inline ad::Var project(const FeatureVar& x, const ad::Var& w) {
  return x.is_sparse() ? ad::spmm(x.pattern, x.values, w) : ad::matmul(x.dense, w);
}

inline ad::Var gcn2(const BoundParameters& p, const std::string& prefix, const Propagation& propagate,
                    const FeatureVar& x) {
  return gcn2_projected(p, prefix, propagate, project(x, p[prefix + ".0.W"]));
}

struct AugmentNoise {
  Matrix edge;  ///< |pairs| x 1 logistic noise
  Matrix mask;  ///< logistic noise shaped like the mask (n x d, or nnz x 1)
};

inline Matrix logistic_matrix(Index rows, Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = logistic_noise(rng);
  return m;
}

inline AugmentNoise draw_noise(const PairSet& pairs, Index mask_rows, Index mask_cols, Rng& rng) {
  AugmentNoise noise;
  noise.edge = logistic_matrix(static_cast<Index>(pairs.size()), 1, rng);
  noise.mask = logistic_matrix(mask_rows, mask_cols, rng);
  return noise;
}

// ---------------------------------------------------------------------------
// Tape-level forward passes

inline Propagation fixed_propagation(std::shared_ptr<const SparseMatrix> a_hat) {
  return [a_hat = std::move(a_hat)](const ad::Var& m) { return ad::propagate(a_hat, m); };
}

inline Propagation learned_propagation(const PairSet& pairs, const ad::Var& weights) {
  return [&pairs, weights](const ad::Var& m) { return ad::weighted_propagate(pairs, weights, m); };
}

/// Intermediate quantities of one augmentation on a tape. In the sparse
/// feature form the mask quantities are nnz x 1 columns.
struct AugmentTrace {
  ad::Var z;
  ad::Var edge_logits;
  ad::Var edge_probs;
  ad::Var edge_weights;  ///< sample on the candidate pairs
  ad::Var mask_probs;
  ad::Var mask;
  FeatureVar x_prime;
  bool ep_ablated = false;
  bool fm_ablated = false;
};

struct AugmentOptions {
  bool ablate_ep = false;
  bool ablate_fm = false;
  /// Use the relaxed sample instead of the hard one (gradient checks).
  bool relaxed = false;
};

/// encode -> (perturb_edges, mask_features). With EP ablated the candidate
/// pairs must be the edges of the input graph and the view keeps them all.
inline AugmentTrace augment_on_tape(const BoundParameters& g, double temperature, const Propagation& original,
                                    const FeatureVar& x, const PairSet& pairs, const AugmentNoise& noise,
                                    const AugmentOptions& options) {
  ad::Tape& tape = *x.data().tape();
  AugmentTrace t;
  t.ep_ablated = options.ablate_ep;
  t.fm_ablated = options.ablate_fm;
  t.z = ad::relu(gcn2(g, "g_enc", original, x));

  if (options.ablate_ep) {
    const Matrix ones = Matrix::Ones(static_cast<Index>(pairs.size()), 1);
    t.edge_logits = tape.constant(Matrix::Constant(ones.rows(), 1, std::numeric_limits<double>::infinity()));
    t.edge_probs = tape.constant(ones);
    t.edge_weights = tape.constant(ones);
  } else {
    const ad::Var tz = mlp2(g, "edge", t.z);
    const ad::Var scores = ad::pair_dot(tz, pairs);
    const ad::Var bias = ad::matmul(tape.constant(Matrix::Ones(scores.rows(), 1)), g["edge.bias"]);
    t.edge_logits = ad::add(scores, bias);
    t.edge_probs = ad::sigmoid(t.edge_logits);
    t.edge_weights = ad::relaxed_bernoulli(t.edge_logits, noise.edge, temperature, !options.relaxed);
  }

  if (options.ablate_fm) {
    t.mask_probs = tape.constant(Matrix::Ones(x.data().rows(), x.data().cols()));
    t.mask = t.mask_probs;
    t.x_prime = x;
    return t;
  }
  const ad::Var hidden = ad::relu(linear(g, "mask.0", t.z));
  const ad::Var logits = x.is_sparse() ? ad::sddmm(x.pattern, hidden, g["mask.1.W"], g["mask.1.b"])
                                       : linear(g, "mask.1", hidden);
  t.mask_probs = ad::sigmoid(logits);
  t.mask = ad::relaxed_bernoulli(logits, noise.mask, temperature, !options.relaxed);
  t.x_prime.pattern = x.pattern;
  if (x.is_sparse()) {
    t.x_prime.values = ad::hadamard(x.values, t.mask);
  } else {
    t.x_prime.dense = ad::hadamard(x.dense, t.mask);
  }
  return t;
}

inline ad::Var represent_on_tape(const BoundParameters& f, const Propagation& propagate, const FeatureVar& x) {
  return gcn2(f, "f", propagate, x);
}

inline ad::Var adversary_on_tape(const BoundParameters& k, const ad::Var& h) {
  return ad::softmax_rows(mlp2(k, "k", h));
}

// ---------------------------------------------------------------------------
// Value-level API

/// G' = {A', X', S} together with the probabilities it was sampled from.
struct AugmentedView {
  PairSet pairs;
  Matrix edge_probs;       ///< |pairs| x 1
  Matrix edge_sample;      ///< |pairs| x 1, 0/1
  std::vector<Edge> sampled_edges;
  Matrix mask_probs;       ///< n x d
  Matrix masked_features;  ///< X'
  bool ep_ablated = false;
  bool fm_ablated = false;

  int num_nodes() const { return pairs.num_nodes(); }

  /// Dense symmetric A~' (zero outside the candidate set and on the diagonal).
  Matrix dense_edge_probs() const { return pairs.scatter_dense(edge_probs); }
  Matrix dense_sampled_adjacency() const { return pairs.scatter_dense(edge_sample); }

  Graph as_graph(const Graph& original) const {
    const auto s = original.sensitive();
    const auto y = original.labels();
    const auto r = original.roles();
    return Graph(original.num_nodes(), sampled_edges, masked_features, {s.begin(), s.end()}, {y.begin(), y.end()},
                 {r.begin(), r.end()}, original.num_sensitive_groups());
  }
};

inline void require_feature_width(const Graph& graph, Index expected) {
  require_dims(graph.num_features() == expected, "feature width " + std::to_string(graph.num_features()) +
                                                     " does not match model input width " +
                                                     std::to_string(expected));
}

inline Matrix encode(const AugmentorParams& params, const Graph& graph) {
  require_feature_width(graph, params.in_features);
  ad::Tape tape;
  const BoundParameters g(tape, params.params, false);
  const FeatureVar x = dense_features(tape, graph.features());
  return ad::relu(gcn2(g, "g_enc", fixed_propagation(normalized_adjacency(graph)), x)).value();
}

inline std::vector<Edge> edges_from_sample(const PairSet& pairs, const Matrix& sample) {
  std::vector<Edge> out;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (sample(static_cast<Index>(p), 0) > 0.5) out.push_back(pairs[p]);
  }
  return out;
}

struct EdgePerturbation {
  PairSet pairs;
  Matrix edge_probs;
  Matrix sampled;
  std::vector<Edge> sampled_edges;
};

/// T_A on embeddings Z: scores candidate pairs and samples A'.
inline EdgePerturbation perturb_edges(const AugmentorParams& params, const Matrix& z, const Graph& graph, Rng& rng,
                                      int dense_threshold = 5000) {
  require_dims(z.rows() == graph.num_nodes(), "perturb_edges: Z must have one row per node");
  EdgePerturbation out;
  out.pairs = candidate_pairs(graph, dense_threshold, rng);
  const Matrix noise = logistic_matrix(static_cast<Index>(out.pairs.size()), 1, rng);
  ad::Tape tape;
  const BoundParameters g(tape, params.params, false);
  const ad::Var tz = mlp2(g, "edge", tape.constant(z));
  const ad::Var scores = ad::pair_dot(tz, out.pairs);
  const ad::Var logits =
      ad::add(scores, ad::matmul(tape.constant(Matrix::Ones(scores.rows(), 1)), g["edge.bias"]));
  out.edge_probs = ad::sigmoid(logits).value();
  out.sampled = ad::relaxed_bernoulli(logits, noise, params.temperature, true).value();
  out.sampled_edges = edges_from_sample(out.pairs, out.sampled);
  return out;
}

struct FeatureMask {
  Matrix mask_probs;
  Matrix masked_features;
};

/// T_X on embeddings Z: per-entry mask probabilities and X' = X * mask.
inline FeatureMask mask_features(const AugmentorParams& params, const Matrix& z, const Graph& graph, Rng& rng) {
  require_dims(z.rows() == graph.num_nodes(), "mask_features: Z must have one row per node");
  require_feature_width(graph, params.in_features);
  const Matrix noise = logistic_matrix(graph.num_nodes(), graph.num_features(), rng);
  ad::Tape tape;
  const BoundParameters g(tape, params.params, false);
  const ad::Var logits = mlp2(g, "mask", tape.constant(z));
  FeatureMask out;
  out.mask_probs = ad::sigmoid(logits).value();
  const Matrix mask = ad::relaxed_bernoulli(logits, noise, params.temperature, true).value();
  out.masked_features = graph.features().cwiseProduct(mask);
  return out;
}

/// Draws one augmented view. The rng is consumed in the same order as a
/// training step: candidate pairs, edge noise, mask noise.
inline AugmentedView augment(const AugmentorParams& params, const Graph& graph, Rng& rng, bool ablate_ep = false,
                             bool ablate_fm = false, int dense_threshold = 5000) {
  require_feature_width(graph, params.in_features);
  AugmentedView view;
  view.pairs = ablate_ep ? PairSet::from_pairs(graph.num_nodes(), graph.edges())
                         : candidate_pairs(graph, dense_threshold, rng);
  const AugmentNoise noise = draw_noise(view.pairs, graph.num_nodes(), graph.num_features(), rng);
  ad::Tape tape;
  const BoundParameters g(tape, params.params, false);
  const FeatureVar x = dense_features(tape, graph.features());
  const AugmentTrace t = augment_on_tape(g, params.temperature, fixed_propagation(normalized_adjacency(graph)), x,
                                         view.pairs, noise, AugmentOptions{ablate_ep, ablate_fm, false});
  view.edge_probs = t.edge_probs.value();
  view.edge_sample = t.edge_weights.value();
  view.sampled_edges = edges_from_sample(view.pairs, view.edge_sample);
  view.mask_probs = t.mask_probs.value();
  view.masked_features = t.x_prime.dense.value();
  view.ep_ablated = ablate_ep;
  view.fm_ablated = ablate_fm;
  return view;
}

/// f applied to a graph (normalised adjacency with self-loops).
inline Matrix represent(const EncoderParams& params, const Graph& graph) {
  require_feature_width(graph, params.in_features);
  ad::Tape tape;
  const BoundParameters f(tape, params.params, false);
  return represent_on_tape(f, fixed_propagation(normalized_adjacency(graph)), dense_features(tape, graph.features())).value();
}

/// f applied to an explicit adjacency and feature matrix.
inline Matrix represent(const EncoderParams& params, const Graph& structure, const Matrix& features) {
  require_dims(features.rows() == structure.num_nodes(), "represent: feature rows must equal node count");
  require_dims(features.cols() == params.in_features, "represent: feature width mismatch");
  ad::Tape tape;
  const BoundParameters f(tape, params.params, false);
  return represent_on_tape(f, fixed_propagation(normalized_adjacency(structure)), dense_features(tape, features)).value();
}

inline Matrix represent(const EncoderParams& params, const AugmentedView& view) {
  require_dims(view.masked_features.cols() == params.in_features, "represent: feature width mismatch");
  ad::Tape tape;
  const BoundParameters f(tape, params.params, false);
  const ad::Var w = tape.constant(view.edge_sample);
  return represent_on_tape(f, learned_propagation(view.pairs, w), dense_features(tape, view.masked_features)).value();
}

inline Matrix adversary_predict(const AdversaryParams& params, const Matrix& h) {
  require_dims(h.cols() == params.in_features, "adversary_predict: embedding width mismatch");
  ad::Tape tape;
  const BoundParameters k(tape, params.params, false);
  return adversary_on_tape(k, tape.constant(h)).value();
}

}  // namespace graphair

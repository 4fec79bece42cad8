#pragma once

#include "graphair/common.hpp"
#include "graphair/random.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace graphair {

/// Undirected edge stored in canonical order (u < v).
struct Edge {
  int u = 0;
  int v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge canonical(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

/// Node role; one role per node keeps the train/val/test masks disjoint.
enum class NodeRole : std::uint8_t { none = 0, train, val, test };

inline constexpr int kUnlabeled = -1;

/// Immutable attributed graph G = {A, X, S} with optional labels and node
/// roles. The adjacency is kept as a sorted list of canonical edges plus a
/// CSR neighbour index.
class Graph {
 public:
  Graph() = default;

  /// `num_sensitive_groups` defaults to max(S)+1. Throws DataError on any
  /// invariant violation (self loop, out-of-range endpoint or sensitive value,
  /// shape mismatch). Duplicate edges and (b,a)/(a,b) pairs are merged.
  Graph(int num_nodes, std::vector<Edge> edges, Matrix features, std::vector<int> sensitive,
        std::vector<int> labels = {}, std::vector<NodeRole> roles = {},
        int num_sensitive_groups = 0)
      : num_nodes_(num_nodes),
        edges_(std::move(edges)),
        features_(std::move(features)),
        sensitive_(std::move(sensitive)),
        labels_(std::move(labels)),
        roles_(std::move(roles)) {
    if (num_nodes_ < 0) throw DataError("negative node count");
    if (features_.rows() != num_nodes_) {
      throw DataError("feature matrix has " + std::to_string(features_.rows()) +
                      " rows for " + std::to_string(num_nodes_) + " nodes");
    }
    if (static_cast<int>(sensitive_.size()) != num_nodes_) {
      throw DataError("sensitive vector length does not match node count");
    }
    if (!labels_.empty() && static_cast<int>(labels_.size()) != num_nodes_) {
      throw DataError("label vector length does not match node count");
    }
    if (roles_.empty()) roles_.assign(static_cast<std::size_t>(num_nodes_), NodeRole::none);
    if (static_cast<int>(roles_.size()) != num_nodes_) {
      throw DataError("node role vector length does not match node count");
    }
    int max_s = -1;
    for (int s : sensitive_) {
      if (s < 0) throw DataError("negative sensitive value");
      max_s = std::max(max_s, s);
    }
    num_groups_ = num_sensitive_groups > 0 ? num_sensitive_groups : max_s + 1;
    if (max_s >= num_groups_) throw DataError("sensitive value exceeds group count");

    for (Edge& e : edges_) {
      if (e.u == e.v) throw DataError("self loop on node " + std::to_string(e.u));
      if (e.u < 0 || e.v < 0 || e.u >= num_nodes_ || e.v >= num_nodes_) {
        throw DataError("edge endpoint out of range");
      }
      e = canonical(e.u, e.v);
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    build_csr();
  }

  int num_nodes() const noexcept { return num_nodes_; }
  /// Undirected edge count (each pair once).
  std::size_t num_edges() const noexcept { return edges_.size(); }
  Index num_features() const noexcept { return features_.cols(); }
  int num_sensitive_groups() const noexcept { return num_groups_; }

  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Matrix& features() const noexcept { return features_; }
  std::span<const int> sensitive() const noexcept { return sensitive_; }
  bool has_labels() const noexcept { return !labels_.empty(); }
  std::span<const int> labels() const noexcept { return labels_; }
  std::span<const NodeRole> roles() const noexcept { return roles_; }

  std::span<const int> neighbors(int node) const {
    const auto begin = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(node)]);
    const auto end = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(node) + 1]);
    return std::span<const int>(adjacency_).subspan(begin, end - begin);
  }

  int degree(int node) const { return static_cast<int>(neighbors(node).size()); }

  bool has_edge(int a, int b) const {
    if (a == b) return false;
    const auto nb = neighbors(a);
    return std::binary_search(nb.begin(), nb.end(), b);
  }

  std::vector<int> nodes_with_role(NodeRole role) const {
    std::vector<int> out;
    for (int i = 0; i < num_nodes_; ++i) {
      if (roles_[static_cast<std::size_t>(i)] == role) out.push_back(i);
    }
    return out;
  }

  /// Dense symmetric 0/1 adjacency; only meant for small graphs and tests.
  Matrix dense_adjacency() const {
    Matrix a = Matrix::Zero(num_nodes_, num_nodes_);
    for (const Edge& e : edges_) {
      a(e.u, e.v) = 1.0;
      a(e.v, e.u) = 1.0;
    }
    return a;
  }

  Graph with_edges(std::vector<Edge> edges) const {
    return Graph(num_nodes_, std::move(edges), features_, sensitive_, labels_, roles_, num_groups_);
  }

  Graph with_features(Matrix features) const {
    return Graph(num_nodes_, edges_, std::move(features), sensitive_, labels_, roles_, num_groups_);
  }

  Graph with_roles(std::vector<NodeRole> roles) const {
    return Graph(num_nodes_, edges_, features_, sensitive_, labels_, std::move(roles), num_groups_);
  }

 private:
  void build_csr() {
    std::vector<int> degree(static_cast<std::size_t>(num_nodes_), 0);
    for (const Edge& e : edges_) {
      ++degree[static_cast<std::size_t>(e.u)];
      ++degree[static_cast<std::size_t>(e.v)];
    }
    offsets_.assign(static_cast<std::size_t>(num_nodes_) + 1, 0);
    for (int i = 0; i < num_nodes_; ++i) {
      offsets_[static_cast<std::size_t>(i) + 1] =
          offsets_[static_cast<std::size_t>(i)] + degree[static_cast<std::size_t>(i)];
    }
    adjacency_.assign(static_cast<std::size_t>(offsets_.back()), 0);
    std::vector<std::int64_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const Edge& e : edges_) {
      adjacency_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.u)]++)] = e.v;
      adjacency_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.v)]++)] = e.u;
    }
    for (int i = 0; i < num_nodes_; ++i) {
      std::sort(adjacency_.begin() + offsets_[static_cast<std::size_t>(i)],
                adjacency_.begin() + offsets_[static_cast<std::size_t>(i) + 1]);
    }
  }

  int num_nodes_ = 0;
  int num_groups_ = 0;
  std::vector<Edge> edges_;
  Matrix features_;
  std::vector<int> sensitive_;
  std::vector<int> labels_;
  std::vector<NodeRole> roles_;
  std::vector<std::int64_t> offsets_{0};
  std::vector<int> adjacency_;
};

/// Checks that every value 0..|S|-1 occurs. Run at ingestion time; induced
/// subgraphs keep the parent's group count even if a group is not sampled.
inline void require_contiguous_sensitive(const Graph& graph) {
  std::vector<char> seen(static_cast<std::size_t>(graph.num_sensitive_groups()), 0);
  for (int s : graph.sensitive()) seen[static_cast<std::size_t>(s)] = 1;
  for (std::size_t g = 0; g < seen.size(); ++g) {
    if (!seen[g]) {
      throw DataError("sensitive values are not contiguous: value " + std::to_string(g) +
                      " never occurs");
    }
  }
}

// ---------------------------------------------------------------------------
// Node splits

struct NodeSplitConfig {
  double train = 0.5;
  double val = 0.25;
  double test = 0.25;
  /// Upper bound on training nodes; 0 means unbounded.
  int max_train = 0;
  std::uint64_t seed = 20;
};

/// Shuffles the labelled nodes with `config.seed` and assigns the first
/// min(train*L, max_train) to train, the next val*L to validation and the
/// last test*L to test. Unlabelled nodes keep NodeRole::none.
inline std::vector<NodeRole> assign_node_roles(const Graph& graph, const NodeSplitConfig& config) {
  if (config.train < 0 || config.val < 0 || config.test < 0 ||
      config.train + config.val + config.test > 1.0 + 1e-9) {
    throw DataError("node split ratios must be non-negative and sum to at most 1");
  }
  std::vector<int> labelled;
  const auto labels = graph.labels();
  for (int i = 0; i < graph.num_nodes(); ++i) {
    if (labels.empty() || labels[static_cast<std::size_t>(i)] != kUnlabeled) labelled.push_back(i);
  }
  Rng rng = make_rng(config.seed, "node-split");
  shuffle(labelled, rng);
  const auto total = static_cast<double>(labelled.size());
  auto n_train = static_cast<std::size_t>(config.train * total);
  if (config.max_train > 0) n_train = std::min(n_train, static_cast<std::size_t>(config.max_train));
  const auto val_begin = static_cast<std::size_t>(config.train * total);
  const auto val_end = static_cast<std::size_t>((config.train + config.val) * total);
  const auto test_begin = labelled.size() - static_cast<std::size_t>(config.test * total);

  std::vector<NodeRole> roles(static_cast<std::size_t>(graph.num_nodes()), NodeRole::none);
  for (std::size_t k = 0; k < n_train; ++k) roles[static_cast<std::size_t>(labelled[k])] = NodeRole::train;
  for (std::size_t k = val_begin; k < val_end && k < labelled.size(); ++k) {
    roles[static_cast<std::size_t>(labelled[k])] = NodeRole::val;
  }
  for (std::size_t k = std::max(test_begin, val_end); k < labelled.size(); ++k) {
    roles[static_cast<std::size_t>(labelled[k])] = NodeRole::test;
  }
  return roles;
}

// ---------------------------------------------------------------------------
// Edge splits for link prediction

struct EdgeSplitRatios {
  double train = 0.85;
  double val = 0.05;
  double test = 0.10;
};

struct EdgeSplit {
  std::vector<Edge> train_pos, val_pos, test_pos;
  std::vector<Edge> train_neg, val_neg, test_neg;
  EdgeSplitRatios ratios;
  std::uint64_t seed = 0;

  friend bool operator==(const EdgeSplit& a, const EdgeSplit& b) {
    return a.train_pos == b.train_pos && a.val_pos == b.val_pos && a.test_pos == b.test_pos &&
           a.train_neg == b.train_neg && a.val_neg == b.val_neg && a.test_neg == b.test_neg &&
           a.seed == b.seed;
  }
};

/// Partitions the edge set into train/val/test positives (val and test sizes
/// are floor(ratio * m), train takes the rest) and draws one uniformly random
/// non-edge per positive, without replacement across all splits.
inline EdgeSplit split_edges(const Graph& graph, EdgeSplitRatios ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw DataError("edge split ratios must be non-negative and sum to 1");
  }
  const std::size_t m = graph.num_edges();
  if (m < 10) throw DataError("graph too small for an edge split: need at least 10 edges");

  const auto n = static_cast<std::uint64_t>(graph.num_nodes());
  const std::uint64_t total_pairs = n * (n - 1) / 2;
  if (total_pairs - m < m) {
    throw DataError("insufficient non-edges: need " + std::to_string(m) + ", graph has " +
                    std::to_string(total_pairs - m));
  }

  EdgeSplit split;
  split.ratios = ratios;
  split.seed = seed;

  std::vector<Edge> edges = graph.edges();
  Rng rng = make_rng(seed, "edge-split");
  shuffle(edges, rng);
  const auto n_val = static_cast<std::size_t>(std::floor(ratios.val * static_cast<double>(m) + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(ratios.test * static_cast<double>(m) + 1e-9));
  const std::size_t n_train = m - n_val - n_test;
  split.train_pos.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val_pos.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_train),
                       edges.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test_pos.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), edges.end());

  // Rejection sampling is fine while non-edges are plentiful; fall back to
  // enumerating the complement when the graph is nearly complete.
  std::vector<Edge> negatives;
  negatives.reserve(m);
  if (total_pairs - m >= 4 * m) {
    std::vector<Edge> chosen;
    auto taken = [&](const Edge& e) { return std::binary_search(chosen.begin(), chosen.end(), e); };
    std::vector<Edge> pending;
    while (negatives.size() < m) {
      const auto a = static_cast<int>(uniform_index(rng, n));
      const auto b = static_cast<int>(uniform_index(rng, n));
      if (a == b || graph.has_edge(a, b)) continue;
      const Edge e = canonical(a, b);
      if (taken(e) || std::find(pending.begin(), pending.end(), e) != pending.end()) continue;
      negatives.push_back(e);
      pending.push_back(e);
      if (pending.size() >= 256) {
        chosen.insert(chosen.end(), pending.begin(), pending.end());
        std::sort(chosen.begin(), chosen.end());
        pending.clear();
      }
    }
  } else {
    std::vector<Edge> complement;
    for (int a = 0; a < graph.num_nodes(); ++a) {
      for (int b = a + 1; b < graph.num_nodes(); ++b) {
        if (!graph.has_edge(a, b)) complement.push_back({a, b});
      }
    }
    shuffle(complement, rng);
    negatives.assign(complement.begin(), complement.begin() + static_cast<std::ptrdiff_t>(m));
  }
  split.train_neg.assign(negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val_neg.assign(negatives.begin() + static_cast<std::ptrdiff_t>(n_train),
                       negatives.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test_neg.assign(negatives.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), negatives.end());
  return split;
}

// ---------------------------------------------------------------------------
// Induced subgraphs

/// Induced subgraph on `nodes` (in the given order). Node i of the result is
/// nodes[i] of the parent.
inline Graph induced_subgraph(const Graph& graph, std::span<const int> nodes) {
  std::vector<int> local(static_cast<std::size_t>(graph.num_nodes()), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const int node = nodes[i];
    if (node < 0 || node >= graph.num_nodes()) throw DataError("subgraph node out of range");
    if (local[static_cast<std::size_t>(node)] != -1) throw DataError("duplicate subgraph node");
    local[static_cast<std::size_t>(node)] = static_cast<int>(i);
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (int nb : graph.neighbors(nodes[i])) {
      const int j = local[static_cast<std::size_t>(nb)];
      if (j > static_cast<int>(i)) edges.push_back({static_cast<int>(i), j});
    }
  }
  const auto k = static_cast<Index>(nodes.size());
  Matrix features(k, graph.num_features());
  std::vector<int> sensitive(nodes.size());
  std::vector<int> labels;
  std::vector<NodeRole> roles(nodes.size());
  if (graph.has_labels()) labels.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto src = static_cast<std::size_t>(nodes[i]);
    features.row(static_cast<Index>(i)) = graph.features().row(static_cast<Index>(src));
    sensitive[i] = graph.sensitive()[src];
    roles[i] = graph.roles()[src];
    if (graph.has_labels()) labels[i] = graph.labels()[src];
  }
  return Graph(static_cast<int>(k), std::move(edges), std::move(features), std::move(sensitive),
               std::move(labels), std::move(roles), graph.num_sensitive_groups());
}

/// Uniform node sample without replacement of the given size, returned in
/// ascending parent order.
inline std::vector<int> sample_nodes(int num_nodes, int size, std::uint64_t seed) {
  if (size <= 0 || size > num_nodes) {
    throw DataError("mini-batch size " + std::to_string(size) + " out of range (1.." +
                    std::to_string(num_nodes) + ")");
  }
  std::vector<int> all(static_cast<std::size_t>(num_nodes));
  std::iota(all.begin(), all.end(), 0);
  Rng rng = make_rng(seed, "minibatch");
  // Partial Fisher-Yates: only the first `size` positions are needed.
  for (int i = 0; i < size; ++i) {
    const auto j = static_cast<std::size_t>(i) +
                   static_cast<std::size_t>(uniform_index(rng, static_cast<std::uint64_t>(num_nodes - i)));
    std::swap(all[static_cast<std::size_t>(i)], all[j]);
  }
  all.resize(static_cast<std::size_t>(size));
  std::sort(all.begin(), all.end());
  return all;
}

/// Induced subgraph on a uniform random node sample.
inline Graph minibatch_subgraph(const Graph& graph, int size, std::uint64_t seed) {
  const auto nodes = sample_nodes(graph.num_nodes(), size, seed);
  return induced_subgraph(graph, nodes);
}

/// Graph with only the training positives of `split` as edges (message
/// passing for link prediction must not see held-out edges).
inline Graph training_graph(const Graph& graph, const EdgeSplit& split) {
  return graph.with_edges(split.train_pos);
}

}  // namespace graphair

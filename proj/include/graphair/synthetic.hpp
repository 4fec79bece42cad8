#pragma once

// Two-block planted-bias graph: sensitive value = block, dense intra-block
// and sparse inter-block edges, one feature leaking the block, and labels
// that depend on both a neutral feature and the block.

#include "graphair/graph.hpp"
#include "graphair/random.hpp"

namespace graphair {

struct PlantedBiasConfig {
  int nodes = 200;
  double p_intra = 0.1;
  double p_inter = 0.01;
  /// Std of the noise added to the block-indicator feature.
  double leak_noise = 0.3;
  int neutral_features = 7;
  /// Weight of the block in the label score.
  double label_bias = 0.5;
  double label_noise = 0.5;
  std::uint64_t seed = 0;
};

inline Graph planted_bias_graph(const PlantedBiasConfig& c) {
  if (c.nodes < 2) throw Error("planted-bias graph needs at least two nodes");
  if (c.neutral_features < 1) throw Error("planted-bias graph needs a neutral feature");
  Rng rng = make_rng(c.seed, "planted-bias");
  const int n = c.nodes;
  std::vector<int> block(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) block[static_cast<std::size_t>(i)] = i < n / 2 ? 0 : 1;

  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double p = block[static_cast<std::size_t>(i)] == block[static_cast<std::size_t>(j)] ? c.p_intra : c.p_inter;
      if (uniform_open(rng) < p) edges.push_back({i, j});
    }
  }

  Matrix x(n, 1 + c.neutral_features);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double b = block[static_cast<std::size_t>(i)];
    x(i, 0) = b + c.leak_noise * standard_normal(rng);
    for (int k = 1; k <= c.neutral_features; ++k) x(i, k) = standard_normal(rng);
    const double score = x(i, 1) + c.label_bias * (2.0 * b - 1.0) + c.label_noise * standard_normal(rng);
    labels[static_cast<std::size_t>(i)] = score > 0 ? 1 : 0;
  }
  Graph g(n, std::move(edges), std::move(x), std::move(block), std::move(labels), {}, 2);
  NodeSplitConfig split;
  split.seed = c.seed;
  return g.with_roles(assign_node_roles(g, split));
}

}  // namespace graphair

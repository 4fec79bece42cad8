#pragma once

// Node sensitive homophily and feature/sensitive Spearman correlation on the
// original graph and an augmented view.

#include "graphair/models.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>

namespace graphair {

struct Homophily {
  /// Per-node values, NaN for isolated nodes.
  std::vector<double> values;
  int isolated = 0;

  double mean() const {
    double sum = 0.0;
    int count = 0;
    for (double v : values) {
      if (!std::isnan(v)) {
        sum += v;
        ++count;
      }
    }
    return count > 0 ? sum / count : std::nan("");
  }

  std::vector<double> defined() const {
    std::vector<double> out;
    for (double v : values) {
      if (!std::isnan(v)) out.push_back(v);
    }
    return out;
  }
};

/// Fraction of each node's neighbours that share its sensitive value.
inline Homophily sensitive_homophily(int num_nodes, std::span<const Edge> edges, std::span<const int> sensitive) {
  require_dims(sensitive.size() == static_cast<std::size_t>(num_nodes), "sensitive_homophily: length mismatch");
  std::vector<double> same(static_cast<std::size_t>(num_nodes), 0.0), degree(static_cast<std::size_t>(num_nodes), 0.0);
  for (const Edge& e : edges) {
    const auto u = static_cast<std::size_t>(e.u), v = static_cast<std::size_t>(e.v);
    const double match = sensitive[u] == sensitive[v] ? 1.0 : 0.0;
    degree[u] += 1;
    degree[v] += 1;
    same[u] += match;
    same[v] += match;
  }
  Homophily h;
  h.values.resize(static_cast<std::size_t>(num_nodes));
  for (std::size_t i = 0; i < h.values.size(); ++i) {
    if (degree[i] == 0) {
      h.values[i] = std::nan("");
      ++h.isolated;
    } else {
      h.values[i] = same[i] / degree[i];
    }
  }
  return h;
}

inline Homophily sensitive_homophily(const Graph& graph) {
  return sensitive_homophily(graph.num_nodes(), graph.edges(), graph.sensitive());
}

/// Dense adjacency form; any nonzero entry counts as an edge weight.
inline Homophily sensitive_homophily(const Matrix& adjacency, std::span<const int> sensitive) {
  require_dims(adjacency.rows() == adjacency.cols() && static_cast<std::size_t>(adjacency.rows()) == sensitive.size(),
               "sensitive_homophily: adjacency/sensitive shape mismatch");
  Homophily h;
  h.values.resize(sensitive.size());
  for (Index i = 0; i < adjacency.rows(); ++i) {
    double same = 0.0, total = 0.0;
    for (Index j = 0; j < adjacency.cols(); ++j) {
      const double a = adjacency(i, j);
      total += a;
      if (sensitive[static_cast<std::size_t>(i)] == sensitive[static_cast<std::size_t>(j)]) same += a;
    }
    if (total == 0.0) {
      h.values[static_cast<std::size_t>(i)] = std::nan("");
      ++h.isolated;
    } else {
      h.values[static_cast<std::size_t>(i)] = same / total;
    }
  }
  return h;
}

/// Average ranks (1-based) with ties sharing the mean rank.
inline std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> rank(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  return rank;
}

struct Spearman {
  std::vector<double> rho;
  /// Columns (or S) with zero rank variance; their rho is reported as 0.
  std::vector<int> constant_columns;
};

inline Spearman spearman_sensitive(const Matrix& x, std::span<const int> sensitive) {
  require_dims(static_cast<std::size_t>(x.rows()) == sensitive.size(), "spearman_sensitive: length mismatch");
  if (x.rows() < 3) throw Error("spearman_sensitive needs at least 3 nodes");
  const std::vector<double> s_values(sensitive.begin(), sensitive.end());
  const std::vector<double> rs = average_ranks(s_values);
  const Eigen::Map<const Vector> s_rank(rs.data(), static_cast<Index>(rs.size()));
  const Vector s_centered = s_rank.array() - s_rank.mean();
  const double s_norm = s_centered.norm();
  Spearman out;
  out.rho.resize(static_cast<std::size_t>(x.cols()), 0.0);
  std::vector<double> column(static_cast<std::size_t>(x.rows()));
  for (Index c = 0; c < x.cols(); ++c) {
    for (Index i = 0; i < x.rows(); ++i) column[static_cast<std::size_t>(i)] = x(i, c);
    const std::vector<double> rc = average_ranks(column);
    const Eigen::Map<const Vector> c_rank(rc.data(), static_cast<Index>(rc.size()));
    const Vector c_centered = c_rank.array() - c_rank.mean();
    const double c_norm = c_centered.norm();
    if (c_norm == 0.0 || s_norm == 0.0) {
      out.constant_columns.push_back(static_cast<int>(c));
      continue;
    }
    out.rho[static_cast<std::size_t>(c)] = std::clamp(c_centered.dot(s_centered) / (c_norm * s_norm), -1.0, 1.0);
  }
  return out;
}

/// Counts over `bins` uniform bins on [0, 1]; 1.0 falls in the last bin.
inline std::vector<int> histogram01(std::span<const double> values, int bins = 20) {
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    if (std::isnan(v)) continue;
    const int b = std::clamp(static_cast<int>(v * bins), 0, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  return counts;
}

struct HomophilyReport {
  Homophily original;
  Homophily fair;
  std::vector<int> original_hist;
  std::vector<int> fair_hist;
};

struct SpearmanReport {
  Spearman original;
  Spearman fair;
  /// Feature indices sorted by decreasing |rho| in the original view.
  std::vector<int> ranking;

  /// Among the top-k original features, how many have smaller |rho| in the
  /// fair view.
  int reduced_in_top(int k) const {
    int count = 0;
    for (int r = 0; r < k && r < static_cast<int>(ranking.size()); ++r) {
      const auto c = static_cast<std::size_t>(ranking[static_cast<std::size_t>(r)]);
      if (std::abs(fair.rho[c]) < std::abs(original.rho[c])) ++count;
    }
    return count;
  }
};

struct Claim3Report {
  HomophilyReport homophily;
  SpearmanReport spearman;
  std::optional<int> batch_size;
  std::uint64_t seed = 0;
  int nodes = 0;
};

/// Homophily of A vs A' and Spearman of X vs X', optionally restricted to one
/// node sample of `batch_size` shared by both views.
inline Claim3Report claim3_report(const Graph& graph, const AugmentedView& view, std::optional<int> batch_size,
                                  std::uint64_t seed) {
  require_dims(view.num_nodes() == graph.num_nodes(), "claim3_report: view does not match graph");
  Graph original = graph;
  Graph fair = view.as_graph(graph);
  if (batch_size) {
    const std::vector<int> nodes = sample_nodes(graph.num_nodes(), *batch_size, seed);
    original = induced_subgraph(original, nodes);
    fair = induced_subgraph(fair, nodes);
  }
  Claim3Report r;
  r.batch_size = batch_size;
  r.seed = seed;
  r.nodes = original.num_nodes();
  r.homophily.original = sensitive_homophily(original);
  r.homophily.fair = sensitive_homophily(fair);
  r.homophily.original_hist = histogram01(r.homophily.original.values);
  r.homophily.fair_hist = histogram01(r.homophily.fair.values);
  r.spearman.original = spearman_sensitive(original.features(), original.sensitive());
  r.spearman.fair = spearman_sensitive(fair.features(), fair.sensitive());
  r.spearman.ranking.resize(r.spearman.original.rho.size());
  std::iota(r.spearman.ranking.begin(), r.spearman.ranking.end(), 0);
  const auto& rho = r.spearman.original.rho;
  std::stable_sort(r.spearman.ranking.begin(), r.spearman.ranking.end(), [&](int a, int b) {
    return std::abs(rho[static_cast<std::size_t>(a)]) > std::abs(rho[static_cast<std::size_t>(b)]);
  });
  return r;
}

inline nlohmann::json nan_safe(const std::vector<double>& values) {
  nlohmann::json out = nlohmann::json::array();
  for (double v : values) out.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
  return out;
}

inline nlohmann::json to_json(const Claim3Report& r) {
  return {{"nodes", r.nodes},
          {"batch_size", r.batch_size ? nlohmann::json(*r.batch_size) : nlohmann::json(nullptr)},
          {"seed", r.seed},
          {"homophily_definition", "fraction of neighbours sharing the node's sensitive value; isolated nodes excluded"},
          {"histogram_bins", 20},
          {"homophily",
           {{"original_mean", r.homophily.original.mean()},
            {"fair_mean", r.homophily.fair.mean()},
            {"original_isolated", r.homophily.original.isolated},
            {"fair_isolated", r.homophily.fair.isolated},
            {"original_hist", r.homophily.original_hist},
            {"fair_hist", r.homophily.fair_hist},
            {"original", nan_safe(r.homophily.original.values)},
            {"fair", nan_safe(r.homophily.fair.values)}}},
          {"spearman",
           {{"original", r.spearman.original.rho},
            {"fair", r.spearman.fair.rho},
            {"original_constant_columns", r.spearman.original.constant_columns},
            {"fair_constant_columns", r.spearman.fair.constant_columns},
            {"ranking", r.spearman.ranking},
            {"top10_reduced", r.spearman.reduced_in_top(10)}}}};
}

}  // namespace graphair

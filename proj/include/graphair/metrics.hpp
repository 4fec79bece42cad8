#pragma once

// Group and dyadic fairness metrics, AUC, and Hadamard link embeddings.

#include "graphair/graph.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <span>

namespace graphair {

namespace detail {

struct GroupRates {
  std::map<int, double> rate;
};

inline double max_min_gap(const std::map<int, double>& rates) {
  if (rates.empty()) return 0.0;
  double lo = rates.begin()->second, hi = lo;
  for (const auto& [g, r] : rates) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return hi - lo;
}

inline void require_same_length(std::size_t a, std::size_t b, const char* what) {
  require_dims(a == b, std::string(what) + ": input lengths differ");
}

}  // namespace detail

/// max_d P(Y_hat = 1 | D = d) - min_d P(Y_hat = 1 | D = d) over the groups
/// present. With `num_groups` > 0, ids in [0, num_groups) that never occur
/// are reported as excluded.
inline double delta_dp(std::span<const int> y_hat, std::span<const int> groups, int num_groups = 0,
                       Warnings* warnings = nullptr) {
  detail::require_same_length(y_hat.size(), groups.size(), "delta_dp");
  std::map<int, std::pair<double, double>> counts;
  for (std::size_t i = 0; i < y_hat.size(); ++i) {
    auto& c = counts[groups[i]];
    c.first += y_hat[i] == 1 ? 1.0 : 0.0;
    c.second += 1.0;
  }
  for (int g = 0; g < num_groups; ++g) {
    if (!counts.count(g)) warn(warnings, "delta_dp: group " + std::to_string(g) + " is empty and was excluded");
  }
  std::map<int, double> rates;
  for (const auto& [g, c] : counts) rates[g] = c.first / c.second;
  return detail::max_min_gap(rates);
}

struct EqualizedOdds {
  double eo = 0.0;
  double tpr_gap = 0.0;
  double fpr_gap = 0.0;
  bool tpr_defined = false;
  bool fpr_defined = false;
};

/// TPR and FPR max-min gaps across groups; eo is the larger one. A group
/// without positives (negatives) is left out of the TPR (FPR) gap.
inline EqualizedOdds delta_eo(std::span<const int> y, std::span<const int> y_hat, std::span<const int> groups,
                              Warnings* warnings = nullptr) {
  detail::require_same_length(y.size(), y_hat.size(), "delta_eo");
  detail::require_same_length(y.size(), groups.size(), "delta_eo");
  struct Cell {
    double tp = 0, pos = 0, fp = 0, neg = 0;
  };
  std::map<int, Cell> cells;
  for (std::size_t i = 0; i < y.size(); ++i) {
    Cell& c = cells[groups[i]];
    if (y[i] == 1) {
      c.pos += 1;
      c.tp += y_hat[i] == 1 ? 1 : 0;
    } else {
      c.neg += 1;
      c.fp += y_hat[i] == 1 ? 1 : 0;
    }
  }
  std::map<int, double> tpr, fpr;
  for (const auto& [g, c] : cells) {
    if (c.pos > 0) {
      tpr[g] = c.tp / c.pos;
    } else {
      warn(warnings, "delta_eo: group " + std::to_string(g) + " has no positives; excluded from the TPR gap");
    }
    if (c.neg > 0) {
      fpr[g] = c.fp / c.neg;
    } else {
      warn(warnings, "delta_eo: group " + std::to_string(g) + " has no negatives; excluded from the FPR gap");
    }
  }
  if (tpr.empty() && fpr.empty()) throw Error("EO undefined: no group has a valid TPR or FPR denominator");
  EqualizedOdds r;
  r.tpr_defined = !tpr.empty();
  r.fpr_defined = !fpr.empty();
  r.tpr_gap = detail::max_min_gap(tpr);
  r.fpr_gap = detail::max_min_gap(fpr);
  r.eo = std::max(r.tpr_gap, r.fpr_gap);
  return r;
}

/// Probability that a random positive outranks a random negative, ties
/// counting one half (rank-sum form with average ranks).
inline double auc(std::span<const double> scores, std::span<const int> labels) {
  detail::require_same_length(scores.size(), labels.size(), "auc");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(scores.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double pos = 0, neg = 0, rank_sum = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      pos += 1;
      rank_sum += rank[i];
    } else {
      neg += 1;
    }
  }
  if (pos == 0 || neg == 0) throw Error("auc requires both positive and negative labels");
  return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

/// Row p is h_u * h_v (elementwise) for pair p = (u, v).
inline Matrix link_embed(const Matrix& h, std::span<const Edge> pairs) {
  Matrix out(static_cast<Index>(pairs.size()), h.cols());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const Edge& e = pairs[p];
    if (e.u < 0 || e.v < 0 || e.u >= h.rows() || e.v >= h.rows()) {
      throw DimensionError("link_embed: endpoint out of range");
    }
    out.row(static_cast<Index>(p)) = h.row(e.u).cwiseProduct(h.row(e.v));
  }
  return out;
}

enum class DyadicMode { mixed, subgroup };

inline std::string to_string(DyadicMode m) { return m == DyadicMode::mixed ? "mixed" : "subgroup"; }

struct DyadicGroups {
  DyadicMode mode = DyadicMode::mixed;
  std::vector<int> group_of;
  int group_count = 0;
  /// Subgroup mode: the unordered sensitive pair {a <= b} behind each id.
  std::vector<std::pair<int, int>> keys;
};

/// Mixed: 0 for intra-group pairs, 1 for inter-group pairs. Subgroup: one id
/// per unordered pair of endpoint sensitive values present, numbered in
/// sorted key order.
inline DyadicGroups dyadic_groups(std::span<const Edge> pairs, std::span<const int> sensitive, DyadicMode mode) {
  DyadicGroups d;
  d.mode = mode;
  d.group_of.resize(pairs.size());
  auto key_of = [&](const Edge& e) {
    if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= sensitive.size() ||
        static_cast<std::size_t>(e.v) >= sensitive.size()) {
      throw DimensionError("dyadic_groups: endpoint without a sensitive value");
    }
    const int a = sensitive[static_cast<std::size_t>(e.u)], b = sensitive[static_cast<std::size_t>(e.v)];
    return std::make_pair(std::min(a, b), std::max(a, b));
  };
  if (mode == DyadicMode::mixed) {
    d.group_count = 2;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto k = key_of(pairs[p]);
      d.group_of[p] = k.first == k.second ? 0 : 1;
    }
    return d;
  }
  std::map<std::pair<int, int>, int> ids;
  for (const Edge& e : pairs) ids.emplace(key_of(e), 0);
  int next = 0;
  for (auto& [k, id] : ids) {
    id = next++;
    d.keys.push_back(k);
  }
  for (std::size_t p = 0; p < pairs.size(); ++p) d.group_of[p] = ids.at(key_of(pairs[p]));
  d.group_count = next;
  return d;
}

}  // namespace graphair

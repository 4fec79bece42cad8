#include "graphair/graphair.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace graphair;

TEST(Homophily, DefinitionExamples) {
  const std::vector<int> s{0, 0, 0, 1, 1};
  const std::vector<Edge> edges{{0, 1}, {0, 2}, {2, 3}};
  const Homophily h = sensitive_homophily(5, edges, s);
  EXPECT_DOUBLE_EQ(h.values[0], 1.0);
  EXPECT_DOUBLE_EQ(h.values[2], 0.5);
  EXPECT_DOUBLE_EQ(h.values[3], 0.0);
  EXPECT_TRUE(std::isnan(h.values[4]));
  EXPECT_EQ(h.isolated, 1);

  const std::vector<int> alt{0, 1, 0, 1};
  const Homophily cycle = sensitive_homophily(4, std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}, {3, 0}}, alt);
  for (double v : cycle.values) EXPECT_EQ(v, 0.0);
}

TEST(Homophily, DenseAndGraphFormsAgree) {
  const Graph g = planted_bias_graph({});
  Matrix a = Matrix::Zero(g.num_nodes(), g.num_nodes());
  for (const Edge& e : g.edges()) a(e.u, e.v) = a(e.v, e.u) = 1;
  const Homophily x = sensitive_homophily(g), y = sensitive_homophily(a, g.sensitive());
  ASSERT_EQ(x.values.size(), y.values.size());
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    if (std::isnan(x.values[i])) {
      EXPECT_TRUE(std::isnan(y.values[i]));
    } else {
      EXPECT_DOUBLE_EQ(x.values[i], y.values[i]);
    }
  }
  EXPECT_GT(x.mean(), 0.8);
}

TEST(Spearman, ExtremesAndMonotoneInvariance) {
  const std::vector<int> s{0, 1, 0, 1, 1, 0};
  Matrix x(6, 3);
  for (int i = 0; i < 6; ++i) {
    x(i, 0) = s[i];
    x(i, 1) = -s[i];
    x(i, 2) = 0.3 * i;
  }
  const Spearman r = spearman_sensitive(x, s);
  EXPECT_NEAR(r.rho[0], 1.0, 1e-12);
  EXPECT_NEAR(r.rho[1], -1.0, 1e-12);
  Matrix mono = x;
  mono.col(2) = x.col(2).array().exp();
  EXPECT_NEAR(spearman_sensitive(mono, s).rho[2], r.rho[2], 1e-12);
  Matrix flat = x;
  flat.col(2).setConstant(4.0);
  const Spearman c = spearman_sensitive(flat, s);
  EXPECT_EQ(c.rho[2], 0.0);
  EXPECT_EQ(c.constant_columns, std::vector<int>{2});
}

TEST(Spearman, IndependentColumnIsNearZero) {
  Rng rng = make_rng(4, "rho");
  const int n = 1000;
  std::vector<int> s(n);
  Matrix x(n, 1);
  for (int i = 0; i < n; ++i) {
    s[i] = static_cast<int>(uniform_index(rng, 2));
    x(i, 0) = standard_normal(rng);
  }
  EXPECT_LT(std::abs(spearman_sensitive(x, s).rho[0]), 0.1);
}

TEST(Histogram, BinsOnUnitInterval) {
  const auto h = histogram01(std::vector<double>{0.0, 0.04, 0.05, 0.999, 1.0, std::nan("")});
  EXPECT_EQ(h[0], 2);
  EXPECT_EQ(h[1], 1);
  EXPECT_EQ(h[19], 2);
}

TEST(Claim3, IdentityViewGivesIdenticalReports) {
  const Graph g = planted_bias_graph({});
  Rng rng = make_rng(1, "claim3");
  const AugmentorParams aug = make_augmentor(g.num_features(), ModelConfig{}, rng);
  const AugmentedView view = augment(aug, g, rng, true, true);
  const Claim3Report r = claim3_report(g, view, std::nullopt, 0);
  EXPECT_EQ(r.homophily.original_hist, r.homophily.fair_hist);
  EXPECT_EQ(r.spearman.original.rho, r.spearman.fair.rho);
  EXPECT_EQ(r.spearman.reduced_in_top(5), 0);
}

TEST(Claim3, MinibatchIsDeterministicAndFullBatchExact) {
  const Graph g = planted_bias_graph({});
  Rng rng = make_rng(2, "claim3");
  const AugmentorParams aug = make_augmentor(g.num_features(), ModelConfig{}, rng);
  const AugmentedView view = augment(aug, g, rng);
  const Claim3Report a = claim3_report(g, view, 50, 9), b = claim3_report(g, view, 50, 9);
  EXPECT_EQ(a.homophily.fair_hist, b.homophily.fair_hist);
  EXPECT_EQ(a.spearman.fair.rho, b.spearman.fair.rho);
  EXPECT_EQ(a.nodes, 50);
  const Claim3Report full = claim3_report(g, view, g.num_nodes(), 9);
  const Claim3Report none = claim3_report(g, view, std::nullopt, 9);
  EXPECT_EQ(full.homophily.fair_hist, none.homophily.fair_hist);
  EXPECT_EQ(full.spearman.fair.rho, none.spearman.fair.rho);
  EXPECT_DOUBLE_EQ(full.homophily.fair.mean(), none.homophily.fair.mean());
  const auto j = to_json(full);
  EXPECT_TRUE(j.contains("homophily"));
}

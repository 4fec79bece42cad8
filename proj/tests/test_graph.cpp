#include "graphair/graphair.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace graphair;
namespace fs = std::filesystem;

namespace {

fs::path graph_scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("graphair_graph_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST(Graph, CanonicalisesAndMergesEdges) {
  const Graph g(4, {{1, 0}, {0, 1}, {2, 3}, {3, 2}, {1, 2}}, Matrix::Zero(4, 1), {0, 1, 0, 1});
  EXPECT_EQ(g.num_edges(), 3u);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(1, 0));
  EXPECT_FALSE(g.has_edge(0, 3));
  EXPECT_EQ(g.degree(1), 2);
  EXPECT_EQ(count_edges(g, EdgeCountConvention::undirected), 3);
  EXPECT_EQ(count_edges(g, EdgeCountConvention::directed), 6);
}

TEST(Graph, RejectsInvalidInput) {
  EXPECT_THROW(Graph(2, {{0, 0}}, Matrix::Zero(2, 1), {0, 1}), DataError);
  EXPECT_THROW(Graph(2, {{0, 2}}, Matrix::Zero(2, 1), {0, 1}), DataError);
  EXPECT_THROW(Graph(2, {}, Matrix::Zero(3, 1), {0, 1}), DataError);
  EXPECT_THROW(Graph(2, {}, Matrix::Zero(2, 1), {0, -1}), DataError);
  EXPECT_THROW(Graph(2, {}, Matrix::Zero(2, 1), {0, 3}, {}, {}, 2), DataError);
}

TEST(Graph, NormalizedAdjacencyMatchesDefinition) {
  const Graph g(3, {{0, 1}, {1, 2}}, Matrix::Zero(3, 1), {0, 1, 0});
  const Matrix a_hat = Matrix(*normalized_adjacency(g));
  Matrix a = Matrix::Identity(3, 3);
  a(0, 1) = a(1, 0) = a(1, 2) = a(2, 1) = 1;
  const Vector d = a.rowwise().sum().array().rsqrt();
  const Matrix expected = d.asDiagonal() * a * d.asDiagonal();
  EXPECT_LT((a_hat - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(NodeSplit, RespectsRatiosCapAndSeed) {
  const Graph g = oracle::tiny_graph(40, 2, 1);
  NodeSplitConfig c;
  c.max_train = 5;
  const auto roles = assign_node_roles(g, c);
  int train = 0, val = 0, test = 0;
  for (NodeRole r : roles) {
    train += r == NodeRole::train;
    val += r == NodeRole::val;
    test += r == NodeRole::test;
  }
  EXPECT_EQ(train, 5);
  EXPECT_EQ(val, 10);
  EXPECT_EQ(test, 10);
  EXPECT_EQ(roles, assign_node_roles(g, c));
  c.seed = 21;
  EXPECT_NE(roles, assign_node_roles(g, c));
}

TEST(EdgeSplit, PartitionsPositivesAndDrawsNonEdges) {
  const Graph g = planted_bias_graph({});
  const EdgeSplit s = split_edges(g, {}, 7);
  const std::size_t m = g.num_edges();
  EXPECT_EQ(s.val_pos.size(), static_cast<std::size_t>(0.05 * m));
  EXPECT_EQ(s.test_pos.size(), static_cast<std::size_t>(0.10 * m));
  EXPECT_EQ(s.train_pos.size() + s.val_pos.size() + s.test_pos.size(), m);

  std::set<Edge> pos;
  for (const auto* part : {&s.train_pos, &s.val_pos, &s.test_pos}) pos.insert(part->begin(), part->end());
  EXPECT_EQ(pos.size(), m);

  std::set<Edge> neg;
  for (const auto* part : {&s.train_neg, &s.val_neg, &s.test_neg}) {
    for (const Edge& e : *part) {
      EXPECT_FALSE(g.has_edge(e.u, e.v));
      EXPECT_LT(e.u, e.v);
      neg.insert(e);
    }
  }
  EXPECT_EQ(neg.size(), m);
  EXPECT_EQ(s.test_neg.size(), s.test_pos.size());

  EXPECT_EQ(s, split_edges(g, {}, 7));
  EXPECT_FALSE(s == split_edges(g, {}, 8));

  const Graph train = training_graph(g, s);
  EXPECT_EQ(train.num_edges(), s.train_pos.size());
  for (const Edge& e : s.test_pos) EXPECT_FALSE(train.has_edge(e.u, e.v));
}

TEST(EdgeSplit, RejectsTinyOrDenseGraphs) {
  EXPECT_THROW(split_edges(Graph(3, {{0, 1}}, Matrix::Zero(3, 1), {0, 1, 0}), {}, 0), DataError);
  std::vector<Edge> all;
  for (int a = 0; a < 6; ++a) {
    for (int b = a + 1; b < 6; ++b) all.push_back({a, b});
  }
  EXPECT_THROW(split_edges(Graph(6, all, Matrix::Zero(6, 1), {0, 1, 0, 1, 0, 1}), {}, 0), DataError);
  EXPECT_THROW(split_edges(planted_bias_graph({}), {0.5, 0.1, 0.1}, 0), DataError);
}

TEST(Subgraph, InducedAndMinibatch) {
  const Graph g = planted_bias_graph({});
  const std::vector<int> nodes{3, 10, 50, 120};
  const Graph sub = induced_subgraph(g, nodes);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(sub.sensitive()[i], g.sensitive()[nodes[i]]);
    EXPECT_EQ(sub.features().row(i), g.features().row(nodes[i]));
    for (int j = 0; j < 4; ++j) {
      if (i != j) EXPECT_EQ(sub.has_edge(i, j), g.has_edge(nodes[i], nodes[j]));
    }
  }
  const Graph a = minibatch_subgraph(g, 60, 4), b = minibatch_subgraph(g, 60, 4);
  EXPECT_EQ(a.edges(), b.edges());
  EXPECT_EQ(a.features(), b.features());
  const Graph full = minibatch_subgraph(g, g.num_nodes(), 4);
  EXPECT_EQ(full.edges(), g.edges());
  EXPECT_THROW(minibatch_subgraph(g, 0, 1), DataError);
  EXPECT_THROW(minibatch_subgraph(g, g.num_nodes() + 1, 1), DataError);
}

TEST(Random, StreamsAreIndependentAndStable) {
  Rng a = make_rng(5, "x"), b = make_rng(5, "x"), c = make_rng(5, "y");
  const auto va = a(), vb = b(), vc = c();
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
  Rng d = make_rng(5, "x");
  d();
  Rng e = rng_from_state(rng_state(d));
  EXPECT_EQ(d(), e());
}

TEST(Loader, RoundTripsCanonicalFormat) {
  const fs::path dir = graph_scratch("roundtrip");
  const Graph g = planted_bias_graph({});
  write_canonical(g, dir / "nodes.csv", dir / "edges.csv");
  DatasetSpec spec;
  spec.name = "rt";
  spec.node_file = "nodes.csv";
  spec.edge_file = "edges.csv";
  spec.label_column = "label";
  spec.expected_stats = DatasetStats{g.num_nodes(), static_cast<long long>(g.num_edges()), g.num_features(), 2};
  const LoadedDataset d = load_dataset(spec, dir);
  EXPECT_EQ(d.graph.edges(), g.edges());
  EXPECT_LT((d.graph.features() - g.features()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_TRUE(std::equal(d.graph.sensitive().begin(), d.graph.sensitive().end(), g.sensitive().begin()));

  spec.expected_stats->edges += 1;
  try {
    load_dataset(spec, dir);
    FAIL() << "expected a stat mismatch";
  } catch (const StatMismatchError& e) {
    EXPECT_NE(std::string(e.what()).find("edges"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(Loader, ReportsParseErrorsWithLocation) {
  const fs::path dir = graph_scratch("parse");
  write_text(dir / "nodes.csv", "id,f0,sensitive\na,1.0,x\nb,oops,y\n");
  write_text(dir / "edges.csv", "src,dst\na,b\n");
  DatasetSpec spec;
  spec.node_file = dir / "nodes.csv";
  spec.edge_file = dir / "edges.csv";
  try {
    load_dataset(spec);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
  write_text(dir / "nodes.csv", "id,f0,sensitive\na,1.0,x\nb,2.0,y\n");
  write_text(dir / "edges.csv", "src,dst\na,c\n");
  EXPECT_THROW(load_dataset(spec), ParseError);
  write_text(dir / "edges.csv", "src,dst\na,b\nb,b\n");
  const LoadedDataset d = load_dataset(spec);
  EXPECT_EQ(d.dropped_self_loops, 1u);
  EXPECT_EQ(d.sensitive_levels, (std::vector<std::string>{"x", "y"}));
  fs::remove_all(dir);
}

TEST(Loader, RejectsNonContiguousSensitiveCodes) {
  const fs::path dir = graph_scratch("contig");
  write_text(dir / "nodes.csv", "id,f0,sensitive\n0,1.0,0\n1,2.0,2\n");
  write_text(dir / "edges.csv", "src,dst\n0,1\n");
  DatasetSpec spec;
  spec.node_file = dir / "nodes.csv";
  spec.edge_file = dir / "edges.csv";
  EXPECT_THROW(load_dataset(spec), DataError);
  fs::remove_all(dir);
}

TEST(Manifests, BundledStatsMatchTable) {
  const fs::path root = fs::path(GRAPHAIR_SOURCE_DIR) / "data" / "manifests";
  const std::map<std::string, DatasetStats> table = {
      {"nba", {403, 16570, 39, 2}},          {"pokec_z", {67797, 882765, 59, 2}},
      {"pokec_n", {66569, 729129, 59, 2}},   {"citeseer", {3327, 9104, 3703, 6}},
      {"cora", {2708, 10556, 1433, 7}},      {"pubmed", {19717, 88648, 500, 3}}};
  for (const auto& [name, stats] : table) {
    const DatasetSpec spec = read_manifest(root / (name + ".json"));
    ASSERT_TRUE(spec.expected_stats) << name;
    EXPECT_EQ(spec.expected_stats->nodes, stats.nodes) << name;
    EXPECT_EQ(spec.expected_stats->edges, stats.edges) << name;
    EXPECT_EQ(spec.expected_stats->features, stats.features) << name;
    EXPECT_EQ(spec.expected_stats->sensitive_groups, stats.sensitive_groups) << name;
  }
}

#include "graphair/graphair.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <numeric>

using namespace graphair;

namespace {

using Builder = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

/// Worst relative error between tape gradients and central differences of
/// sum(build(inputs) .* probe).
double models_tape_check(std::vector<Matrix> inputs, const Builder& build, std::uint64_t seed) {
  Rng rng = make_rng(seed, "probe");
  Matrix probe;
  auto scalar = [&](ad::Tape& tape, const std::vector<ad::Var>& vars) {
    const ad::Var out = build(tape, vars);
    if (probe.size() == 0) {
      probe.resize(out.rows(), out.cols());
      for (Index k = 0; k < probe.size(); ++k) probe.data()[k] = standard_normal(rng);
    }
    return ad::sum(ad::hadamard(out, tape.constant(probe)));
  };
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const Matrix& m : inputs) vars.push_back(tape.variable(m));
  tape.backward(scalar(tape, vars));
  double worst = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Matrix analytic = tape.grad(vars[i]);
    const Matrix numeric = oracle::numeric_grad(
        [&] {
          ad::Tape t;
          std::vector<ad::Var> v;
          for (const Matrix& m : inputs) v.push_back(t.constant(m));
          return scalar(t, v).item();
        },
        inputs[i]);
    worst = std::max(worst, oracle::relative_error(analytic, numeric));
  }
  return worst;
}

Matrix models_random(Index r, Index c, Rng& rng) {
  Matrix m(r, c);
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = standard_normal(rng);
  return m;
}

std::shared_ptr<const SparseMatrix> models_pattern(Index rows, Index cols) {
  Matrix d = Matrix::Zero(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      if ((r * 3 + c) % 4 == 0) d(r, c) = 1.0 + static_cast<double>(r + c);
    }
  }
  auto sp = std::make_shared<SparseMatrix>(d.sparseView());
  sp->makeCompressed();
  return sp;
}

ModelConfig small_model() {
  ModelConfig mc;
  mc.hidden = 8;
  mc.embedding = 8;
  mc.adversary_hidden = 8;
  return mc;
}

}  // namespace

TEST(TapeOps, DenseOpsMatchFiniteDifferences) {
  Rng rng = make_rng(1, "ops");
  const Matrix a = models_random(4, 3, rng), b = models_random(3, 2, rng), row = models_random(1, 3, rng);
  EXPECT_LE(models_tape_check({a, b}, [](ad::Tape&, const auto& v) { return ad::matmul(v[0], v[1]); }, 1), 1e-6);
  EXPECT_LE(models_tape_check({a, row}, [](ad::Tape&, const auto& v) { return ad::add_row(v[0], v[1]); }, 2), 1e-6);
  EXPECT_LE(models_tape_check({a}, [](ad::Tape&, const auto& v) { return ad::sigmoid(v[0]); }, 3), 1e-6);
  EXPECT_LE(models_tape_check({a}, [](ad::Tape&, const auto& v) { return ad::softmax_rows(v[0]); }, 4), 1e-6);
  EXPECT_LE(models_tape_check({a, a * 0.5}, [](ad::Tape&, const auto& v) { return ad::hadamard(v[0], v[1]); }, 5),
            1e-6);
}

TEST(TapeOps, SpmmAndSddmmMatchFiniteDifferences) {
  Rng rng = make_rng(2, "ops");
  const auto pattern = models_pattern(5, 4);
  const Matrix values = models_random(pattern->nonZeros(), 1, rng);
  const Matrix w = models_random(4, 3, rng);
  EXPECT_LE(models_tape_check({values, w}, [&](ad::Tape&, const auto& v) { return ad::spmm(pattern, v[0], v[1]); }, 6),
            1e-6);
  const Matrix a = models_random(5, 3, rng), b = models_random(3, 4, rng), c = models_random(1, 4, rng);
  EXPECT_LE(models_tape_check({a, b, c},
                              [&](ad::Tape&, const auto& v) { return ad::sddmm(pattern, v[0], v[1], v[2]); }, 7),
            1e-6);
}

TEST(TapeOps, SparseOpsEqualDenseForms) {
  Rng rng = make_rng(3, "ops");
  const auto pattern = models_pattern(5, 4);
  const Matrix dense = Matrix(*pattern);
  const Matrix values = Eigen::Map<const Vector>(pattern->valuePtr(), pattern->nonZeros());
  const Matrix w = models_random(4, 3, rng);
  ad::Tape tape;
  const Matrix sp = ad::spmm(pattern, tape.constant(values), tape.constant(w)).value();
  EXPECT_LT((sp - dense * w).cwiseAbs().maxCoeff(), 1e-12);

  const Matrix a = models_random(5, 3, rng), b = models_random(3, 4, rng), c = models_random(1, 4, rng);
  const Matrix full = (a * b).rowwise() + c.row(0);
  const Matrix got = ad::sddmm(pattern, tape.constant(a), tape.constant(b), tape.constant(c)).value();
  Index k = 0;
  for (Index i = 0; i < pattern->outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(*pattern, i); it; ++it, ++k) {
      EXPECT_NEAR(got(k, 0), full(i, it.col()), 1e-12);
    }
  }
}

TEST(TapeOps, PairDotAndWeightedPropagation) {
  Rng rng = make_rng(4, "ops");
  const PairSet complete = PairSet::complete(5);
  const PairSet partial = PairSet::from_pairs(5, {{0, 1}, {1, 3}, {2, 4}, {0, 4}});
  const Matrix t = models_random(5, 3, rng), m = models_random(5, 2, rng);
  for (const PairSet* pairs : {&complete, &partial}) {
    EXPECT_LE(models_tape_check({t}, [&](ad::Tape&, const auto& v) { return ad::pair_dot(v[0], *pairs); }, 8), 1e-6);
    Matrix w(static_cast<Index>(pairs->size()), 1);
    for (Index k = 0; k < w.rows(); ++k) w(k, 0) = 0.2 + 0.6 * uniform_open(rng);
    EXPECT_LE(models_tape_check({w, m},
                                [&](ad::Tape&, const auto& v) { return ad::weighted_propagate(*pairs, v[0], v[1]); },
                                9),
              1e-6);
  }
}

TEST(TapeOps, WeightedPropagationWithUnitWeightsIsGcnNormalisation) {
  const Graph g = oracle::tiny_graph(6, 2, 3);
  Rng rng = make_rng(5, "ops");
  const Matrix m = models_random(6, 3, rng);
  const PairSet pairs = PairSet::from_pairs(6, g.edges());
  ad::Tape tape;
  const Matrix learned =
      ad::weighted_propagate(pairs, tape.constant(Matrix::Ones(static_cast<Index>(pairs.size()), 1)), tape.constant(m))
          .value();
  const Matrix fixed = Matrix(*normalized_adjacency(g)) * m;
  EXPECT_LT((learned - fixed).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TapeOps, StraightThroughSample) {
  Rng rng = make_rng(6, "ops");
  const Matrix logits = models_random(6, 2, rng);
  const Matrix noise = logistic_matrix(6, 2, rng);
  ad::Tape tape;
  const ad::Var l = tape.variable(logits);
  const ad::Var hard = ad::relaxed_bernoulli(l, noise, 1.0, true);
  for (Index k = 0; k < hard.value().size(); ++k) {
    const double v = hard.value().data()[k];
    EXPECT_TRUE(v == 0.0 || v == 1.0);
    EXPECT_EQ(v, (logits.data()[k] + noise.data()[k]) > 0 ? 1.0 : 0.0);
  }
  tape.backward(ad::sum(hard));
  const Matrix g_hard = tape.grad(l);
  ad::Tape t2;
  const ad::Var l2 = t2.variable(logits);
  t2.backward(ad::sum(ad::relaxed_bernoulli(l2, noise, 1.0, false)));
  EXPECT_EQ(g_hard, t2.grad(l2));
}

TEST(Models, ShapesAndProbabilityRanges) {
  const Graph g = planted_bias_graph({});
  Rng rng = make_rng(7, "models");
  const ModelConfig mc = small_model();
  const AugmentorParams aug = make_augmentor(g.num_features(), mc, rng);
  const EncoderParams enc = make_encoder(g.num_features(), mc, rng);
  const AdversaryParams adv = make_adversary(mc.embedding, 2, mc, rng);

  EXPECT_EQ(encode(aug, g).rows(), g.num_nodes());
  const AugmentedView view = augment(aug, g, rng);
  const Matrix p = view.dense_edge_probs();
  EXPECT_EQ(p.rows(), g.num_nodes());
  EXPECT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_TRUE(p.diagonal().isZero());
  EXPECT_GT(view.edge_probs.minCoeff(), 0.0);
  EXPECT_LT(view.edge_probs.maxCoeff(), 1.0);
  EXPECT_GE(view.mask_probs.minCoeff(), 0.0);
  EXPECT_LE(view.mask_probs.maxCoeff(), 1.0);

  const Matrix h = represent(enc, g);
  EXPECT_EQ(h.cols(), mc.embedding);
  const Matrix probs = adversary_predict(adv, h);
  EXPECT_LT((probs.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_THROW(represent(make_encoder(g.num_features() + 1, mc, rng), g), DimensionError);
}

TEST(Models, AblationsGiveIdentityViews) {
  const Graph g = planted_bias_graph({});
  Rng rng = make_rng(8, "models");
  const AugmentorParams aug = make_augmentor(g.num_features(), small_model(), rng);
  const AugmentedView no_ep = augment(aug, g, rng, true, false);
  EXPECT_EQ(no_ep.sampled_edges, g.edges());
  EXPECT_NE(no_ep.masked_features, g.features());
  const AugmentedView no_fm = augment(aug, g, rng, false, true);
  EXPECT_EQ(no_fm.masked_features, g.features());
  const AugmentedView both = augment(aug, g, rng, true, true);
  const Graph same = both.as_graph(g);
  EXPECT_EQ(same.edges(), g.edges());
  EXPECT_EQ(same.features(), g.features());
}

TEST(Models, EncoderIsPermutationEquivariant) {
  const Graph g = oracle::tiny_graph(12, 4, 9);
  Rng rng = make_rng(9, "models");
  const EncoderParams enc = make_encoder(4, small_model(), rng);
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  shuffle(perm, rng);
  std::vector<int> inverse(12);
  for (int i = 0; i < 12; ++i) inverse[perm[i]] = i;
  std::vector<Edge> edges;
  for (const Edge& e : g.edges()) edges.push_back({inverse[e.u], inverse[e.v]});
  Matrix x(12, 4);
  std::vector<int> s(12);
  for (int i = 0; i < 12; ++i) {
    x.row(i) = g.features().row(perm[i]);
    s[i] = g.sensitive()[perm[i]];
  }
  const Graph permuted(12, edges, x, s);
  const Matrix h = represent(enc, g), hp = represent(enc, permuted);
  for (int i = 0; i < 12; ++i) EXPECT_LT((hp.row(i) - h.row(perm[i])).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Models, SparseCandidateSet) {
  const Graph g = planted_bias_graph({});
  Rng rng = make_rng(10, "models");
  const PairSet pairs = candidate_pairs(g, 10, rng);
  EXPECT_FALSE(pairs.is_complete());
  EXPECT_EQ(pairs.size(), 2 * g.num_edges());
  int edges = 0;
  for (const Edge& e : pairs.pairs()) edges += g.has_edge(e.u, e.v);
  EXPECT_EQ(static_cast<std::size_t>(edges), g.num_edges());
  EXPECT_TRUE(candidate_pairs(g, 5000, rng).is_complete());
}

TEST(Models, SparseAndDenseFeaturePathsAgree) {
  const Graph g = oracle::tiny_graph(10, 6, 11);
  Matrix x = g.features();
  for (Index k = 0; k < x.size(); ++k) {
    if (k % 5 != 0) x.data()[k] = 0.0;
  }
  const auto s = g.sensitive();
  const Graph sparse_graph(10, g.edges(), x, {s.begin(), s.end()});
  TrainConfig c;
  c.model = small_model();
  c.seed = 3;
  TrainState dense_state = init_state(sparse_graph, c);
  TrainConfig c_sparse = c;
  c_sparse.model.sparse_feature_density = 0.5;
  c.model.sparse_feature_density = 0.0;
  TrainContext dense_ctx(sparse_graph, c), sparse_ctx(sparse_graph, c_sparse);
  ASSERT_FALSE(dense_ctx.features().is_sparse());
  ASSERT_TRUE(sparse_ctx.features().is_sparse());
  // Mask noise is shaped differently on the two paths, so FM is ablated and
  // only one step is compared.
  c.ablate_fm = c_sparse.ablate_fm = true;
  TrainState sparse_state = dense_state;
  train_step(dense_state, dense_ctx, c);
  train_step(sparse_state, sparse_ctx, c_sparse);
  EXPECT_NEAR(dense_state.history[0].total, sparse_state.history[0].total, 1e-9);
  EXPECT_LT((represent(dense_state.encoder, sparse_graph) - represent(sparse_state.encoder, sparse_graph))
                .cwiseAbs()
                .maxCoeff(),
            1e-9);
}

// Acceptance checks, one per criterion. Usage:
//   graphair_acceptance [--criterion N|pokec]
// Prints one PASS/FAIL line per criterion and exits non-zero on any FAIL.
// Dataset-backed criteria read GRAPHAIR_DATA_DIR (default <source>/data).

#include "graphair/graphair.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

using namespace graphair;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

fs::path data_dir() {
  if (const char* env = std::getenv("GRAPHAIR_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return fs::path(GRAPHAIR_SOURCE_DIR) / "data";
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("graphair_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig dataset_experiment(const std::string& name, const std::string& tag) {
  ExperimentConfig c = default_experiment(name);
  c.data_dir = data_dir();
  apply_seed(c, 0);
  c.out_dir = scratch(tag);
  return c;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Outcome dataset_validation() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::map<std::string, DatasetStats> table = {
      {"nba", {403, 16570, 39, 2}},          {"pokec_z", {67797, 882765, 59, 2}},
      {"pokec_n", {66569, 729129, 59, 2}},   {"citeseer", {3327, 9104, 3703, 6}},
      {"cora", {2708, 10556, 1433, 7}},      {"pubmed", {19717, 88648, 500, 3}}};
  Outcome o{true, {}};
  for (const auto& [name, expected] : table) {
    try {
      const DatasetSpec spec = read_manifest(find_manifest(name, data_dir()));
      const LoadedDataset d = load_dataset(spec, data_dir());
      const bool ok = d.stats.nodes == expected.nodes && d.stats.edges == expected.edges &&
                      d.stats.features == expected.features && d.stats.sensitive_groups == expected.sensitive_groups;
      o.pass = o.pass && ok;
      o.detail += name + (ok ? " ok; " : " mismatch; ");
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail += name + " unavailable (" + e.what() + "); ";
    }
  }
  const double secs = seconds_since(t0);
  o.pass = o.pass && secs < 120;
  o.detail += "runtime " + fmt(secs, 3) + " s (limit 120 s)";
  return o;
}

Outcome loss_oracles() {
  Rng rng = make_rng(0, "acceptance-loss");
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    const Index n = 1 + static_cast<Index>(uniform_index(rng, 8));
    const Index k = 1 + static_cast<Index>(uniform_index(rng, 6));
    const double tau = 0.1 + 2 * uniform_open(rng);
    Matrix h(n, k), hp(n, k);
    for (Index q = 0; q < h.size(); ++q) {
      h.data()[q] = standard_normal(rng);
      hp.data()[q] = standard_normal(rng);
    }
    worst = std::max(worst, std::abs(contrastive_loss(h, hp, tau).value - oracle::contrastive(h, hp, tau)));
    for (Index i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(pairwise_contrastive(i, h, hp, tau) - oracle::pair_loss(i, h, hp, tau)));
    }
  }

  const double eps = 1e-8;
  double closed = 0;
  {
    const std::vector<int> s{1, 0};
    Matrix onehot(2, 1);
    onehot << 1.0, 0.0;
    closed = std::max(closed, std::abs(adversarial_loss(s, onehot) - std::log1p(-eps)));
    closed = std::max(closed, std::abs(adversarial_loss(s, Matrix::Constant(2, 1, 0.5)) - std::log(0.5)));
    Matrix p(2, 1);
    p << 0.8, 0.3;
    closed = std::max(closed, std::abs(adversarial_loss(s, p) - (std::log(0.8) + std::log(0.7)) / 2));
  }
  {
    Matrix a(2, 2);
    a << 0, 1, 1, 0;
    const Matrix x = Matrix::Ones(2, 2);
    closed = std::max(closed, std::abs(reconstruction_loss(a, a, x, x, 1.0) - 4 * -std::log1p(-eps)));
    closed = std::max(closed, std::abs(reconstruction_loss(Matrix::Ones(1, 1), Matrix::Constant(1, 1, 0.5), x, x, 1.0) -
                                       -std::log(0.5)));
    Matrix xp = x;
    xp(0, 1) += 1;
    closed = std::max(closed, std::abs(reconstruction_loss(a, a, x, xp, 10.0) - (10.0 + 4 * -std::log1p(-eps))));
  }
  return {worst <= 1e-6 && closed <= 1e-9,
          "contrastive max |err| " + fmt(worst, 3) + " over 100 instances (limit 1e-6); adversarial/reconstruction "
          "closed-form max |err| " + fmt(closed, 3) + " (limit 1e-9)"};
}

Outcome gradient_checks() {
  Rng rng = make_rng(0, "acceptance-grad");
  double adv = 0, con = 0, rec = 0;
  for (int t = 0; t < 10; ++t) {
    const Index n = 2 + static_cast<Index>(uniform_index(rng, 4));
    std::vector<int> s(static_cast<std::size_t>(n));
    for (auto& v : s) v = static_cast<int>(uniform_index(rng, 2));
    Matrix p(n, 1);
    for (Index i = 0; i < n; ++i) p(i, 0) = 0.05 + 0.9 * uniform_open(rng);
    Matrix g;
    adversarial_loss(s, p, &g);
    adv = std::max(adv, oracle::relative_error(g, oracle::numeric_grad([&] { return adversarial_loss(s, p); }, p)));

    Matrix h(n, 3), hp(n, 3);
    for (Index q = 0; q < h.size(); ++q) {
      h.data()[q] = standard_normal(rng);
      hp.data()[q] = standard_normal(rng);
    }
    const auto r = contrastive_loss(h, hp, 0.5, true);
    auto f = [&] { return contrastive_loss(h, hp, 0.5).value; };
    con = std::max(con, oracle::relative_error(r.grad_h, oracle::numeric_grad(f, h)));
    con = std::max(con, oracle::relative_error(r.grad_h_prime, oracle::numeric_grad(f, hp)));

    Matrix a(n, n), q(n, n);
    for (Index k = 0; k < a.size(); ++k) {
      a.data()[k] = static_cast<double>(uniform_index(rng, 2));
      q.data()[k] = 0.05 + 0.9 * uniform_open(rng);
    }
    bce_sum(a, q, 1.0, &g);
    rec = std::max(rec, oracle::relative_error(g, oracle::numeric_grad([&] { return bce_sum(a, q); }, q)));
    Matrix xp = hp;
    frobenius_sq_diff(h, xp, &g);
    rec = std::max(rec, oracle::relative_error(g, oracle::numeric_grad([&] { return frobenius_sq_diff(h, xp); }, xp)));
  }
  double total = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = oracle::objective_gradients(5, 3, seed);
    adv = std::max(adv, r.adv);
    con = std::max(con, r.con);
    rec = std::max(rec, r.reconst);
    total = std::max(total, r.total);
  }
  const auto sparse = oracle::objective_gradients(5, 4, 4, true);
  total = std::max(total, sparse.total);
  const double worst = std::max({adv, con, rec, total});
  return {worst <= 1e-4, "max relative error adv " + fmt(adv, 3) + ", con " + fmt(con, 3) + ", reconst " +
                             fmt(rec, 3) + ", combined " + fmt(total, 3) + " (limit 1e-4)"};
}

Outcome metric_oracles() {
  long long checked = 0, mismatches = 0;
  auto check = [&](const std::vector<int>& y, const std::vector<int>& p, const std::vector<int>& d) {
    ++checked;
    if (delta_dp(p, d) != oracle::delta_dp(p, d)) ++mismatches;
    bool any_pos = false, any_neg = false;
    for (int v : y) (v ? any_pos : any_neg) = true;
    if (!any_pos && !any_neg) return;
    const auto eo = delta_eo(y, p, d);
    const double tpr = oracle::conditional_gap(y, p, d, 1), fpr = oracle::conditional_gap(y, p, d, 0);
    if (eo.tpr_gap != tpr || eo.fpr_gap != fpr || eo.eo != std::max(tpr, fpr)) ++mismatches;
  };
  // Every (Y, Y_hat, D) with up to 6 samples and 3 groups.
  for (int n = 1; n <= 6; ++n) {
    int groupings = 1;
    for (int i = 0; i < n; ++i) groupings *= 3;
    std::vector<int> y(n), p(n), d(n);
    for (int gb = 0; gb < groupings; ++gb) {
      for (int i = 0, v = gb; i < n; ++i, v /= 3) d[i] = v % 3;
      for (int yb = 0; yb < (1 << n); ++yb) {
        for (int pb = 0; pb < (1 << n); ++pb) {
          for (int i = 0; i < n; ++i) {
            y[i] = (yb >> i) & 1;
            p[i] = (pb >> i) & 1;
          }
          check(y, p, d);
        }
      }
    }
  }
  // Larger sizes up to 12 are sampled.
  Rng rng = make_rng(0, "acceptance-metrics");
  for (int n = 7; n <= 12; ++n) {
    for (int t = 0; t < 50000; ++t) {
      std::vector<int> y(n), p(n), d(n);
      for (int i = 0; i < n; ++i) {
        y[i] = static_cast<int>(uniform_index(rng, 2));
        p[i] = static_cast<int>(uniform_index(rng, 2));
        d[i] = static_cast<int>(uniform_index(rng, 3));
      }
      check(y, p, d);
    }
  }
  long long auc_checked = 0, auc_bad = 0;
  for (int n = 2; n <= 7; ++n) {
    int levels = 1;
    for (int i = 0; i < n; ++i) levels *= 3;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int sb = 0; sb < levels; ++sb) {
      for (int i = 0, v = sb; i < n; ++i, v /= 3) s[i] = (v % 3) / 2.0;
      for (int yb = 1; yb < (1 << n) - 1; ++yb) {
        for (int i = 0; i < n; ++i) y[i] = (yb >> i) & 1;
        ++auc_checked;
        if (auc(s, y) != oracle::auc(s, y)) ++auc_bad;
      }
    }
  }
  for (int t = 0; t < 50000; ++t) {
    const int n = 8 + static_cast<int>(uniform_index(rng, 3));
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = static_cast<double>(uniform_index(rng, 5));
      y[i] = static_cast<int>(uniform_index(rng, 2));
    }
    y[0] = 1;
    y[1] = 0;
    ++auc_checked;
    if (auc(s, y) != oracle::auc(s, y)) ++auc_bad;
  }
  return {mismatches == 0 && auc_bad == 0,
          std::to_string(checked) + " dp/eo inputs, " + std::to_string(mismatches) + " mismatches; " +
              std::to_string(auc_checked) + " auc inputs, " + std::to_string(auc_bad) + " mismatches (exact)"};
}

Outcome determinism_nba() {
  try {
    ExperimentConfig a = dataset_experiment("nba", "det_a"), b = dataset_experiment("nba", "det_b");
    const ExperimentResult ra = run_experiment(a), rb = run_experiment(b);
    const bool same_history = ra.history == rb.history;
    const bool same_report = to_json(ra.evaluation) == to_json(rb.evaluation);
    return {same_history && same_report, std::string("loss histories ") + (same_history ? "identical" : "differ") +
                                             ", metric reports " + (same_report ? "identical" : "differ") + " (" +
                                             std::to_string(ra.history.size()) + " epochs)"};
  } catch (const std::exception& e) {
    return {false, std::string("NBA run failed: ") + e.what()};
  }
}

struct TrainedView {
  FitResult fit;
  AugmentedView view;
};

TrainedView train_and_view(const Graph& g, const TrainConfig& c) {
  TrainedView t{fit(g, c), {}};
  Rng rng = make_rng(c.seed, "acceptance-view");
  t.view = augment(t.fit.state.augmentor, g, rng, c.ablate_ep, c.ablate_fm, c.model.dense_pair_threshold);
  return t;
}

Outcome synthetic_debiasing() {
  const auto t0 = std::chrono::steady_clock::now();
  const Graph g = planted_bias_graph({});
  TrainConfig c;
  c.epochs = 500;
  c.seed = 0;
  const TrainedView t = train_and_view(g, c);
  const double before = sensitive_homophily(g).mean();
  const double after = sensitive_homophily(t.view.as_graph(g)).mean();
  const Matrix h_prime = represent(t.fit.state.encoder, t.view);
  const Matrix probs = adversary_predict(t.fit.state.adversary, h_prime);
  int correct = 0, ones = 0;
  for (int i = 0; i < g.num_nodes(); ++i) {
    Index arg = 0;
    probs.row(i).maxCoeff(&arg);
    correct += static_cast<int>(arg) == g.sensitive()[i];
    ones += g.sensitive()[i];
  }
  const double acc = static_cast<double>(correct) / g.num_nodes();
  const double majority = std::max(ones, g.num_nodes() - ones) / static_cast<double>(g.num_nodes());
  const double secs = seconds_since(t0);
  const bool pass = before - after >= 0.05 && std::abs(acc - majority) <= 0.10 && secs < 300;
  return {pass, "homophily A " + fmt(before) + " -> A' " + fmt(after) + " (drop >= 0.05); adversary acc " + fmt(acc) +
                    " vs majority " + fmt(majority) + " (within 0.10); runtime " + fmt(secs, 3) + " s (limit 300 s)"};
}

Outcome nba_reproduction() {
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentResult r = run_experiment(dataset_experiment("nba", "nba"));
    const auto& m = *r.evaluation.node;
    const double acc = m.acc().mean, dp = m.dp().mean, eo = m.eo().mean, secs = seconds_since(t0);
    const bool pass = acc >= 66.5 && acc <= 70.5 && dp <= 4.0 && eo <= 8.0 && secs <= 900;
    return {pass, "ACC " + fmt(acc) + " (66.5..70.5), dDP " + fmt(dp) + " (<= 4.0), dEO " + fmt(eo) +
                      " (<= 8.0); runtime " + fmt(secs, 3) + " s (limit 900 s)"};
  } catch (const std::exception& e) {
    return {false, std::string("NBA run failed: ") + e.what()};
  }
}

Outcome citeseer_link_prediction() {
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentResult r = run_experiment(dataset_experiment("citeseer", "citeseer"));
    const auto& l = *r.evaluation.link;
    const double acc = l.mixed.acc().mean, auc_v = l.mixed.auc().mean, eo_m = l.mixed.eo().mean;
    const double dp_m = l.mixed.dp().mean, dp_s = l.subgroup.dp().mean, secs = seconds_since(t0);
    const bool pass = acc >= 74 && auc_v >= 82 && eo_m <= 6 && dp_s <= 15 && dp_s < dp_m && secs <= 1800;
    return {pass, "ACC " + fmt(acc) + " (>= 74), AUC " + fmt(auc_v) + " (>= 82), dEO_m " + fmt(eo_m) +
                      " (<= 6), dDP_s " + fmt(dp_s) + " (<= 15 and < dDP_m " + fmt(dp_m) + "); runtime " +
                      fmt(secs, 3) + " s (limit 1800 s)"};
  } catch (const std::exception& e) {
    return {false, std::string("Citeseer run failed: ") + e.what()};
  }
}

Outcome ablation_identity() {
  const Graph g = planted_bias_graph({});
  int ep_bad = 0, fm_bad = 0, epochs_checked = 0;
  for (const bool no_ep : {true, false}) {
    TrainConfig c;
    c.epochs = 50;
    c.ablate_ep = no_ep;
    c.ablate_fm = !no_ep;
    FitOptions o;
    Rng view_rng = make_rng(0, "acceptance-ablation");
    o.on_epoch = [&](const TrainState& s) {
      const AugmentedView v = augment(s.augmentor, g, view_rng, c.ablate_ep, c.ablate_fm);
      if (no_ep && v.sampled_edges != g.edges()) ++ep_bad;
      if (!no_ep && v.masked_features != g.features()) ++fm_bad;
      ++epochs_checked;
    };
    fit(g, c, o);
  }

  ExperimentConfig full = default_experiment("synthetic");
  apply_seed(full, 0);
  full.out_dir = scratch("ablation");
  const ExperimentResult r_full = run_experiment(full);
  const ExperimentResult r_nofm = ablate(full, "fm");
  const double dp_full = r_full.evaluation.dp("mixed"), eo_full = r_full.evaluation.eo("mixed");
  const double dp_nofm = r_nofm.evaluation.dp("mixed"), eo_nofm = r_nofm.evaluation.eo("mixed");
  const bool gaps = dp_nofm > dp_full && eo_nofm > eo_full;
  return {ep_bad == 0 && fm_bad == 0 && gaps,
          "A' != A in " + std::to_string(ep_bad) + " epochs, X' != X in " + std::to_string(fm_bad) + " epochs (of " +
              std::to_string(epochs_checked) + "); w/o FM dDP " + fmt(dp_nofm) + " vs full " + fmt(dp_full) +
              ", dEO " + fmt(eo_nofm) + " vs full " + fmt(eo_full) + " (w/o FM must exceed both)"};
}

Outcome claim3_nba() {
  try {
    const ExperimentConfig c = dataset_experiment("nba", "claim3");
    const TaskData task = prepare_task(c);
    const TrainedView t = train_and_view(task.train_graph, c.train);
    const Claim3Report r = claim3_report(task.train_graph, t.view, std::nullopt, c.train.seed);
    const double before = r.homophily.original.mean(), after = r.homophily.fair.mean();
    const int reduced = r.spearman.reduced_in_top(10);
    return {after < before && reduced >= 7, "homophily mean " + fmt(before) + " -> " + fmt(after) +
                                                " (must drop); top-10 |rho| reduced in " + std::to_string(reduced) +
                                                " features (>= 7)"};
  } catch (const std::exception& e) {
    return {false, std::string("NBA analysis failed: ") + e.what()};
  }
}

Outcome pokec_smoke() {
  std::string detail;
  bool pass = true;
  for (const std::string name : {"pokec_z", "pokec_n"}) {
    try {
      ExperimentConfig c = dataset_experiment(name, "smoke_" + name);
      c.subgraph_nodes = 1000;
      c.train.epochs = 20;
      c.classifier.epochs = 200;
      const ExperimentResult r = run_experiment(c);
      bool finite = true;
      for (const auto& b : r.history) finite = finite && std::isfinite(b.total);
      const bool emitted = fs::exists(c.out_dir / "report.json") && fs::exists(c.out_dir / "results.csv");
      pass = pass && finite && emitted;
      detail += name + ": losses " + (finite ? "finite" : "non-finite") + ", metrics " +
                (emitted ? "emitted" : "missing") + " (ACC " + fmt(r.evaluation.acc()) + "); ";
    } catch (const std::exception& e) {
      pass = false;
      detail += name + " failed: " + e.what() + "; ";
    }
  }
  return {pass, detail};
}

struct Criterion {
  std::string id;
  std::string name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {"1", "dataset_validation", dataset_validation},
      {"2", "loss_oracles", loss_oracles},
      {"3", "gradient_checks", gradient_checks},
      {"4", "metric_oracles", metric_oracles},
      {"5", "determinism_nba", determinism_nba},
      {"6", "synthetic_debiasing", synthetic_debiasing},
      {"7", "nba_reproduction", nba_reproduction},
      {"8", "citeseer_link_prediction", citeseer_link_prediction},
      {"9", "ablation_identity", ablation_identity},
      {"10", "claim3_nba", claim3_nba},
      {"pokec", "pokec_smoke", pokec_smoke},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      only = argv[++i];
    } else {
      std::cerr << "usage: " << argv[0] << " [--criterion N|pokec]\n";
      return 2;
    }
  }
  int failures = 0, ran = 0;
  for (const Criterion& c : criteria()) {
    if (!only.empty() && c.id != only) continue;
    ++ran;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << "criterion " << c.id << " " << c.name << ": " << (o.pass ? "PASS" : "FAIL") << " | " << o.detail
              << std::endl;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
